#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "latdir/numerics/vec.hpp"

namespace latdir {

/// Contiguous index ranges [begin, end) partitioning 1..d.
using IndexPartition = std::vector<std::pair<std::size_t, std::size_t>>;

/// Squared norm of each part of a direction vector; with a unit direction the
/// parts sum to 1 and show where in the latent code a factor is encoded.
inline Vec direction_part_norms(const Vec& u, const IndexPartition& partition) {
    std::size_t cursor = 0;
    Vec out;
    out.reserve(partition.size());
    for (const auto& [begin, end] : partition) {
        if (begin != cursor || end <= begin || end > u.size())
            throw std::invalid_argument("direction_part_norms: ranges must tile [0, d) in order");
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += u[i] * u[i];
        out.push_back(s);
        cursor = end;
    }
    if (cursor != u.size())
        throw std::invalid_argument("direction_part_norms: partition does not cover the vector");
    return out;
}

/// Splits [0, d) into `parts` near-equal contiguous ranges.
inline IndexPartition equal_partition(std::size_t d, std::size_t parts) {
    if (parts == 0 || parts > d) throw std::invalid_argument("equal_partition: bad part count");
    IndexPartition p;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < parts; ++i) {
        const std::size_t end = d * (i + 1) / parts;
        p.emplace_back(begin, end);
        begin = end;
    }
    return p;
}

} // namespace latdir
