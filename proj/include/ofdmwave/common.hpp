// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_COMMON_HPP
#define OFDMWAVE_COMMON_HPP

#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ofdmwave {

inline constexpr const char* kVersion = "0.1.0";

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Bad user-supplied configuration or argument (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape/length mismatch between related containers.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure: non-convergence, singular system, invalid value (exit code 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem or serialization failure (exit code 4).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// sin(pi*u)/(pi*u) with the continuous extension sinc(0)=1.
/// Arguments below 1e-12 in magnitude are treated as 0.
inline double sinc(double u) {
    if (std::abs(u) < 1e-12) return 1.0;
    const double pu = kPi * u;
    return std::sin(pu) / pu;
}

/// Pairwise summation. Order-independent of thread partitioning when applied
/// to a fixed per-item buffer, and accurate to ~log2(n) ulps.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Items must be
/// independent; results go into per-index slots so the reduction order (and
/// hence the result) does not depend on the thread count.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    int actual = threads;
    if (actual <= 0) actual = static_cast<int>(std::thread::hardware_concurrency());
    if (actual < 1) actual = 1;
    if (actual == 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t nw = std::min<std::size_t>(actual, count);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ofdmwave

#endif
