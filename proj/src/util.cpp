#include "flpre/util.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace flpre {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("Rng::gamma: alpha must be positive");
    if (alpha < 1.0) {
        const double u = uniform_open();
        return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = uniform_open();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

namespace {
std::atomic<int> g_worker_threads{1};
thread_local bool t_inside_parallel = false;
}  // namespace

int worker_threads() { return g_worker_threads.load(); }

void set_worker_threads(int n) { g_worker_threads.store(n < 1 ? 1 : n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int nt = worker_threads();
    if (nt <= 1 || n <= 1 || t_inside_parallel) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(nt), n);
    std::vector<std::thread> pool;
    pool.reserve(k);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (std::size_t w = 0; w < k; ++w) {
        const std::size_t lo = n * w / k;
        const std::size_t hi = n * (w + 1) / k;
        pool.emplace_back([&, lo, hi] {
            t_inside_parallel = true;
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
            t_inside_parallel = false;
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace flpre
