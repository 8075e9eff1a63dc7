#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace thermoform {

/// Neumaier-compensated accumulator. value() = running sum + carry.
/// merge() folds another accumulator in with two compensated adds, so a
/// sum partitioned into fixed sub-ranges gives the same bits no matter
/// which thread computed which part.
class KahanAccumulator {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }

    void merge(const KahanAccumulator& other) {
        add(other.sum_);
        add(other.carry_);
    }

    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// Shortest round-trip decimal representation of a double.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Runs jobs 0..count-1 on at most `threads` workers. Job order of
/// execution is unspecified; callers must write results into per-job
/// slots and combine them in index order afterwards.
inline void run_jobs(std::size_t count, int threads,
                     const std::function<void(std::size_t)>& job) {
    if (count == 0) return;
    std::size_t workers = static_cast<std::size_t>(threads < 1 ? 1 : threads);
    if (workers > count) workers = count;
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                job(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

/// Integer power with overflow saturation; used for budget checks.
inline double pow_int(double base, int exp) {
    double r = 1.0;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

} // namespace thermoform
