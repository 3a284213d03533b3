#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "latdir/cli/config.hpp"
#include "latdir/diffgen/dense_net.hpp"
#include "latdir/factor/encoding.hpp"
#include "latdir/inversion/trajectory.hpp"
#include "latdir/vae/dataset.hpp"

namespace latdir {

/// FNV-1a 64-bit over the file bytes; the artifact integrity fingerprint.
inline std::uint64_t content_hash_bytes(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string content_hash_hex(const std::string& path) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(content_hash_bytes(read_file_bytes(path))));
    return buf;
}

/// Sidecar provenance record written next to every artifact as
/// "<artifact>.manifest". Embeds the creating config, so a result file can be
/// traced back to the exact run that produced it, and input hashes, so stages
/// chain verifiably.
struct ArtifactManifest {
    std::string kind;
    int format_version = 1;
    std::string content_hash;                                  // of the artifact file
    std::vector<std::pair<std::string, std::string>> inputs;   // name -> content hash
    std::string config_snapshot;                               // canonical RunConfig text
};

inline std::string manifest_path(const std::string& artifact_path) {
    return artifact_path + ".manifest";
}

inline void write_manifest(const std::string& artifact_path, const std::string& kind,
                           const RunConfig& config,
                           const std::vector<std::pair<std::string, std::string>>& inputs = {}) {
    std::ofstream out(manifest_path(artifact_path));
    if (!out) throw std::runtime_error("cannot open " + manifest_path(artifact_path));
    out << "artifact = " << kind << "\n";
    out << "format_version = 1\n";
    out << "content_hash = " << content_hash_hex(artifact_path) << "\n";
    for (const auto& [name, hash] : inputs) out << "input." << name << " = " << hash << "\n";
    out << "config_begin\n" << config.serialize() << "config_end\n";
    if (!out) throw std::runtime_error("manifest write failed for " + artifact_path);
}

inline ArtifactManifest load_manifest(const std::string& artifact_path) {
    std::ifstream in(manifest_path(artifact_path));
    if (!in) throw std::runtime_error("cannot open " + manifest_path(artifact_path));
    ArtifactManifest m;
    std::string line;
    bool in_config = false;
    while (std::getline(in, line)) {
        if (in_config) {
            if (line == "config_end") {
                in_config = false;
                continue;
            }
            m.config_snapshot += line + "\n";
            continue;
        }
        if (line == "config_begin") {
            in_config = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
        };
        strip(key);
        strip(val);
        if (key == "artifact") m.kind = val;
        else if (key == "format_version") m.format_version = std::stoi(val);
        else if (key == "content_hash") m.content_hash = val;
        else if (key.rfind("input.", 0) == 0) m.inputs.emplace_back(key.substr(6), val);
    }
    if (m.format_version != 1)
        throw std::runtime_error("unrecognized manifest version for " + artifact_path);
    if (m.content_hash != content_hash_hex(artifact_path))
        throw std::runtime_error("manifest hash does not match content of " + artifact_path);
    return m;
}

/// Typed artifact wrapper returned by load_artifact.
using Artifact = std::variant<TrajectoryDataset, std::vector<ImageGrid>, DenseNet, EncodingModel>;

inline const char* artifact_kind_name(const Artifact& a) {
    switch (a.index()) {
        case 0: return "trajectories";
        case 1: return "sprite_dataset";
        case 2: return "dense_net";
        case 3: return "encoding_model";
    }
    return "?";
}

/// Dispatches on the leading magic bytes (TRJ1 / SPR1 / DGN1 / encoding model
/// text) and runs the format loader, which validates invariants.
inline Artifact load_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    const std::string m(magic, static_cast<std::size_t>(in.gcount()));
    in.close();
    if (m == "TRJ1") return load_trajectories(path);
    if (m == "SPR1") return load_sprite_dataset(path);
    if (m == "DGN1") return load_dense_net(path);
    if (m.rfind("arti", 0) == 0) return load_encoding_model(path); // "artifact = ..."
    throw std::runtime_error("unrecognized artifact magic in " + path);
}

} // namespace latdir
