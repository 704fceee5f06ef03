#include "special.hpp"

#include <cmath>

namespace ultrawalk::detail {

double hurwitz_zeta(double s, double a) {
    // Euler-Maclaurin with the remainder pushed past a + N >= 25.
    static constexpr double kBernoulli[] = {1.0 / 6,       -1.0 / 30,     1.0 / 42,      -1.0 / 30,
                                            5.0 / 66,      -691.0 / 2730, 7.0 / 6,       -3617.0 / 510,
                                            43867.0 / 798, -174611.0 / 330};
    int n = a < 25.0 ? static_cast<int>(std::ceil(25.0 - a)) : 0;
    double head = 0.0;
    for (int i = n - 1; i >= 0; --i) head += std::pow(a + i, -s);
    double x = a + n;
    double sum = head + std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s);
    // term_j = B_{2j}/(2j)! * s (s+1) ... (s+2j-2) * x^{-s-2j+1}
    double rising = s;
    double fact = 2.0;
    double xpow = std::pow(x, -s - 1.0);
    for (int j = 1; j <= 10; ++j) {
        double term = kBernoulli[j - 1] / fact * rising * xpow;
        sum += term;
        if (std::abs(term) < 1e-18 * sum) break;
        rising *= (s + 2 * j - 1) * (s + 2 * j);
        fact *= (2.0 * j + 1) * (2.0 * j + 2);
        xpow /= x * x;
    }
    return sum;
}

double iterated_log(int n, double x) {
    for (int i = 0; i < n; ++i) x = std::log1p(x);
    return x;
}

}  // namespace ultrawalk::detail
