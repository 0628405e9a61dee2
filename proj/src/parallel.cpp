#include "diffpath/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace diffpath {

namespace {
std::atomic<unsigned> g_max_workers{0};
}

void set_max_workers(unsigned n) { g_max_workers.store(n); }

unsigned max_workers() {
    unsigned n = g_max_workers.load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(max_workers(), n));
    if (workers <= 1) {
        fn(0, n);
        return;
    }

    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    auto run_chunk = [&](std::size_t begin, std::size_t end) {
        try {
            fn(begin, end);
        } catch (...) {
            bool expected = false;
            if (failed.compare_exchange_strong(expected, true)) first_error = std::current_exception();
        }
    };

    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    std::size_t begin = chunk; // chunk 0 runs on the calling thread
    for (unsigned w = 1; w < workers && begin < n; ++w) {
        const std::size_t end = std::min(n, begin + chunk);
        threads.emplace_back(run_chunk, begin, end);
        begin = end;
    }
    run_chunk(0, std::min(chunk, n));
    for (auto& t : threads) t.join();

    if (failed.load()) std::rethrow_exception(first_error);
}

} // namespace diffpath
