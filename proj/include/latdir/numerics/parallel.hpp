#pragma once

#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace latdir {

/// Worker count: LATDIR_WORKERS env var wins, otherwise hardware concurrency.
inline unsigned worker_count() {
    static const unsigned n = [] {
        if (const char* e = std::getenv("LATDIR_WORKERS")) {
            const long v = std::atol(e);
            if (v >= 1) return static_cast<unsigned>(v);
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc > 0 ? hc : 1u;
    }();
    return n;
}

namespace detail {

/// Minimal persistent pool; spawning threads per GEMM call would dominate
/// small-matrix work. Each job assigns task t to one fixed executor (the
/// caller runs task 0, pool thread i runs task i+1), so no task token can
/// leak between jobs.
class WorkerPool {
public:
    static WorkerPool& instance() {
        static WorkerPool pool(worker_count());
        return pool;
    }

    unsigned size() const { return static_cast<unsigned>(threads_.size()) + 1; }

    /// Runs fn(t) for t in [0, tasks); requires tasks <= size(). Blocks until
    /// all tasks finish. Not reentrant from inside a job.
    void run(unsigned tasks, const std::function<void(unsigned)>& fn) {
        if (tasks == 0) return;
        if (tasks == 1 || threads_.empty()) {
            for (unsigned t = 0; t < tasks; ++t) fn(t);
            return;
        }
        {
            std::lock_guard<std::mutex> g(mtx_);
            job_ = &fn;
            job_tasks_ = tasks;
            pending_ = tasks - 1;
            ++generation_;
        }
        cv_.notify_all();
        fn(0);
        std::unique_lock<std::mutex> lk(mtx_);
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

private:
    explicit WorkerPool(unsigned workers) {
        for (unsigned i = 1; i < workers; ++i)
            threads_.emplace_back([this, i] { worker_loop(i); });
    }

    ~WorkerPool() {
        {
            std::lock_guard<std::mutex> g(mtx_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void worker_loop(unsigned index) {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(unsigned)>* job = nullptr;
            unsigned tasks = 0;
            {
                std::unique_lock<std::mutex> lk(mtx_);
                cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                job = job_;
                tasks = job_tasks_;
            }
            // job_ can only be null once every task of this generation is
            // done, so a null here means this worker had no assignment
            if (job == nullptr || index >= tasks) continue;
            (*job)(index);
            {
                std::lock_guard<std::mutex> g(mtx_);
                --pending_;
            }
            done_cv_.notify_one();
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mtx_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(unsigned)>* job_ = nullptr;
    unsigned job_tasks_ = 0;
    unsigned pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace detail

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on the pool.
/// Chunk boundaries depend only on n and the pool size, and each chunk is
/// processed sequentially, so results are deterministic.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    auto& pool = detail::WorkerPool::instance();
    const std::size_t chunks = std::min<std::size_t>(pool.size(), n);
    if (chunks <= 1) {
        body(0, n);
        return;
    }
    const std::size_t per = (n + chunks - 1) / chunks;
    pool.run(static_cast<unsigned>(chunks), [&](unsigned c) {
        const std::size_t lo = c * per;
        const std::size_t hi = std::min(n, lo + per);
        if (lo < hi) body(lo, hi);
    });
}

} // namespace latdir
