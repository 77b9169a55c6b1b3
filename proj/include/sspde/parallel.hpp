#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sspde {

// Runs body(state, i) for i in [0, n) on at most `workers` threads. Each thread
// builds its own state with init(). The first exception thrown is rethrown.
template <class Init, class Body>
void parallel_for(long n, int workers, const Init& init, const Body& body)
{
    const int w = static_cast<int>(std::clamp<long>(workers, 1, std::max<long>(n, 1)));
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        try {
            auto state = init();
            for (long i = next++; i < n; i = next++)
                body(state, i);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error)
                error = std::current_exception();
            next = n;
        }
    };
    if (w == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < w; ++t)
            pool.emplace_back(run);
        for (auto& t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
}

} // namespace sspde
