#include "koopsym/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace koopsym {

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int n) { g_max_threads.store(std::max(1, n)); }

int max_threads() { return g_max_threads.load(); }

void parallel_for(int count, const std::function<void(int)>& body) {
    const int workers = std::min(max_threads(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int begin = static_cast<int>(static_cast<long long>(count) * w / workers);
        const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
        pool.emplace_back([&, begin, end] {
            try {
                for (int i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace koopsym
