#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace ultrawalk {

using BigInt = boost::multiprecision::cpp_int;

// Invalid input: a violated precondition or invariant.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation could not be completed within its resource limits
// (level cap, iteration cap, bracket exhaustion).
struct RunawayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultLevelCap = 10000;
inline constexpr double kDefaultTol = 1e-14;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 - exp(x)) for x <= 0.
inline double log1mexp(double x) {
    if (x > -0.6931471805599453) return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

// log(exp(a) + exp(b)).
inline double logaddexp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Streaming log-sum-exp.
class LogSum {
public:
    void add(double log_term) {
        if (log_term == kNegInf) return;
        if (log_term <= max_) {
            acc_ += std::exp(log_term - max_);
        } else {
            acc_ = acc_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }
    double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(acc_); }

private:
    double max_ = kNegInf;
    double acc_ = 0.0;
};

inline double log_of(const BigInt& v) {
    // Exact integers can exceed the double range; split off a power of two.
    std::size_t bits = boost::multiprecision::msb(v) + 1;
    if (bits <= 1000) return std::log(v.convert_to<double>());
    std::size_t shift = bits - 60;
    BigInt top = v >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

using Rng = std::mt19937_64;

// Portable draws: the standard distributions are implementation-defined,
// these are fixed so a seed reproduces across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform open interval (0, 1).
inline double uniform_open01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) throw DomainError("uniform_below: empty range");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng derived_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)), static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                      static_cast<std::uint32_t>(splitmix64(seed ^ splitmix64(stream))),
                      static_cast<std::uint32_t>(splitmix64(seed ^ splitmix64(stream)) >> 32)};
    return Rng(seq);
}

}  // namespace ultrawalk
