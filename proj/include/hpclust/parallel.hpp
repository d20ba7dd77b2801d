#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hpclust {

// Fixed-size pool used for fork-join row parallelism inside the distance
// kernels. Tasks must not block on the pool themselves (the kernels submit
// leaf work only).
class ThreadPool {
public:
    explicit ThreadPool(unsigned n_threads) {
        if (n_threads == 0) n_threads = 1;
        workers_.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    ~ThreadPool() {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const { return workers_.size(); }

    // Runs fn(chunk_index) for chunk_index in [0, n_chunks) and waits for all
    // of them. The calling thread executes chunk 0 itself.
    void run_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& fn) {
        if (n_chunks <= 1) {
            if (n_chunks == 1) fn(0);
            return;
        }
        std::mutex done_mu;
        std::condition_variable done_cv;
        std::size_t remaining = n_chunks - 1;
        {
            std::lock_guard lock(mu_);
            for (std::size_t c = 1; c < n_chunks; ++c) {
                queue_.emplace_back([&, c] {
                    fn(c);
                    std::lock_guard dl(done_mu);
                    if (--remaining == 0) done_cv.notify_one();
                });
            }
        }
        cv_.notify_all();
        fn(0);
        std::unique_lock lock(done_mu);
        done_cv.wait(lock, [&] { return remaining == 0; });
    }

    // Process-wide pool, sized to the hardware by default. Separate engine
    // runs share it; leaf tasks are pure so sharing is safe.
    static ThreadPool& global() {
        static ThreadPool pool(default_threads());
        return pool;
    }

    static unsigned default_threads() {
        unsigned n = std::thread::hardware_concurrency();
        return n == 0 ? 1 : n;
    }

private:
    void worker_loop() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
                if (stop_ && queue_.empty()) return;
                task = std::move(queue_.front());
                queue_.pop_front();
            }
            task();
        }
    }

    std::vector<std::thread> workers_;
    std::deque<std::function<void()>> queue_;
    std::mutex mu_;
    std::condition_variable cv_;
    bool stop_ = false;
};

// Contiguous [begin, end) row range of one parallel chunk.
struct RowRange {
    std::size_t begin;
    std::size_t end;
};

inline RowRange chunk_range(std::size_t rows, std::size_t n_chunks, std::size_t chunk) {
    const std::size_t base = rows / n_chunks;
    const std::size_t extra = rows % n_chunks;
    const std::size_t begin = chunk * base + std::min(chunk, extra);
    std::size_t len = base + (chunk < extra ? 1 : 0);
    return {begin, begin + len};
}

}  // namespace hpclust
