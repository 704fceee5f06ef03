#pragma once

// Special functions shared by the coefficient families.
namespace ultrawalk::detail {

// zeta(s, a) = sum_{n >= 0} (a + n)^{-s}, s > 1, a > 0.
double hurwitz_zeta(double s, double a);

// l_n(x) with l_0(x) = x and l_{j+1}(x) = log(1 + l_j(x)).
double iterated_log(int n, double x);

}  // namespace ultrawalk::detail
