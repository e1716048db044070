#include "kinfluid/threading.hpp"

#include <malloc.h>

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace kinfluid {

namespace {

int resolve_worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("SIM_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

// Minimal persistent pool: parallel_for is called tens of thousands of times per
// run, so per-call thread spawning would dominate.
class Pool {
public:
    Pool() : workers_(resolve_worker_count()) {
        // keep multi-MB particle arrays inside the arena instead of mmap/munmap
        // round trips; step loops reallocate them every call
        mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
        mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
        for (int w = 1; w < workers_; ++w)
            threads_.emplace_back([this, w] { worker_loop(w); });
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    int workers() const { return workers_; }

    void run(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn) {
        if (n == 0) return;
        if (workers_ == 1) {
            fn(0, n, 0);
            return;
        }
        {
            std::lock_guard<std::mutex> lk(mu_);
            job_ = &fn;
            job_n_ = n;
            pending_ = workers_ - 1;
            ++epoch_;
        }
        cv_.notify_all();
        run_chunk(n, 0, fn);
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [this] { return pending_ == 0; });
        job_ = nullptr;
    }

private:
    void run_chunk(std::size_t n, int w, const std::function<void(std::size_t, std::size_t, int)>& fn) {
        std::size_t chunk = (n + workers_ - 1) / workers_;
        std::size_t begin = std::min(n, chunk * static_cast<std::size_t>(w));
        std::size_t end = std::min(n, begin + chunk);
        if (begin < end) fn(begin, end, w);
    }

    void worker_loop(int w) {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(std::size_t, std::size_t, int)>* job = nullptr;
            std::size_t n = 0;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
                if (stop_) return;
                seen = epoch_;
                job = job_;
                n = job_n_;
            }
            if (job) run_chunk(n, w, *job);
            {
                std::lock_guard<std::mutex> lk(mu_);
                --pending_;
            }
            done_cv_.notify_one();
        }
    }

    int workers_;
    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t, std::size_t, int)>* job_ = nullptr;
    std::size_t job_n_ = 0;
    std::uint64_t epoch_ = 0;
    int pending_ = 0;
    bool stop_ = false;
};

Pool& pool() {
    static Pool p;
    return p;
}

}  // namespace

int worker_count() { return pool().workers(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn) {
    pool().run(n, fn);
}

}  // namespace kinfluid
