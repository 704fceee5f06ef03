#pragma once

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "ultrawalk/measure.hpp"
#include "ultrawalk/tower.hpp"

namespace ultrawalk {

// T(u) = 1 - sum_i c_i min(1, u/v_i). Linear in u on each [v_k, v_{k+1}],
// T(0) = 1, and T = 0 from v_K on when c is supported on levels <= K.
double T_of(const CoefficientSequence& c, const Tower& tower, double u);
// log T(e^{log_u}); usable past the double range of u.
double log_T_of_log(const CoefficientSequence& c, const Tower& tower, double log_u);

// lambda_1(G_k) = 1 - mu(G_k) = sum_{i>k} (1 - v_k/v_i) c_i. Equals T(v_k).
double lambda1_subgroup(const CoefficientSequence& c, const Tower& tower, int k);
double log_lambda1_subgroup(const CoefficientSequence& c, const Tower& tower, int k);

// Smallest u >= 0 with T(u) = y, y in (0, 1]. Exact on each linear piece.
double T_inverse(const CoefficientSequence& c, const Tower& tower, double y);
double log_T_inverse_log(const CoefficientSequence& c, const Tower& tower, double log_y);

// Upper envelope for the isospectral profile.
//   k(n) = min{k : lambda_1(G_k) <= 1/n^2},  F(n) = v_{k(n)},
// F piecewise linear between integers, Lambda_F(v) = (F^{-1}(v) - 1)^{-2}.
// F may be flat across several integers; F^{-1}(v) = sup{x : F(x) <= v}.
class ProfileBand {
public:
    ProfileBand(CoefficientSequence c, Tower tower);

    double lower(double u) const { return T_of(c_, tower_, u); }
    double upper(double v) const;
    int k_of_n(long n) const;
    double F(long n) const;
    double F_inverse(double v) const;
    // (n, F(n)) for n = 1..n_max.
    std::vector<std::pair<long, double>> knots(long n_max) const;

    const CoefficientSequence& coeffs() const { return c_; }
    const Tower& tower() const { return tower_; }

private:
    CoefficientSequence c_;
    Tower tower_;
    mutable std::mutex mu_;
    mutable std::map<long, int> k_cache_;
};

double folner_upper(const CoefficientSequence& c, const Tower& tower, double v);

struct BandReport {
    std::size_t points = 0;
    std::size_t violations = 0;
    // Range of upper/lower over the grid.
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};
BandReport check_band(const ProfileBand& band, const std::vector<double>& grid);

// T^{-1}((1+lambda) u) < 1/N(u) < T^{-1}(u / (2(1+lambda))), lambda from
// condition (A). Advisory when condition (A) fails.
struct SpectralBridgeReport {
    bool advisory = false;
    double lambda = 0.0;
    std::size_t points = 0;
    std::size_t lower_violations = 0;
    std::size_t upper_violations = 0;
    // Realized constants: min of (1/N)/T^{-1}((1+lambda)u), max of (1/N)/T^{-1}(u/(2(1+lambda))).
    double lower_margin = 0.0;
    double upper_margin = 0.0;
};
SpectralBridgeReport profile_vs_spectral_check(const CoefficientSequence& c, const Tower& tower,
                                               const std::vector<double>& grid);

// Continuous decreasing extension of sigma: log-linear between integer knots.
double sigma_extended(const CoefficientSequence& c, double s);
// min over the grid of sigma(log 2x) / sigma(log x); (1+lambda)^{-3} bounds it under (A).
double doubling_constant(const CoefficientSequence& c, const std::vector<double>& x_grid);

// Orders from samples (log x, log f(x)), x increasing. Upper and lower are
// sup and inf of log f / log x over the tail half; slope is the least-squares
// fit of log f on log x over the same half.
struct OrderEstimate {
    double upper = 0.0;
    double lower = 0.0;
    double slope = 0.0;
};
OrderEstimate order_of(const std::vector<std::pair<double, double>>& log_samples);

}  // namespace ultrawalk
