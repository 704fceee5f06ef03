#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ultrawalk/measure.hpp"
#include "ultrawalk/tower.hpp"

namespace ultrawalk {

// N(lambda): right-continuous step function with jumps at sigma(k) and
// N(sigma(k)) = 1/v_k. N = 0 below 0 and N = 1 from sigma(0) on. On a
// finite tower the folded tail puts a jump of 1/v_K at 0.
class StepSpectralDistribution {
public:
    StepSpectralDistribution(CoefficientSequence c, Tower tower);

    double N_at(double lambda) const;
    double N_left(double lambda) const;
    // inf{lambda : N(lambda) >= y}, y in (0, 1].
    double N_inverse(double y) const;
    // log N(e^{log_lambda}), usable far below the double range.
    double log_N_at_log(double log_lambda) const;
    // Smallest k with sigma(k) <= lambda (strict: sigma(k) < lambda).
    int level_at_log(double log_lambda, bool strict) const;

    const CoefficientSequence& coeffs() const { return c_; }
    const Tower& tower() const { return tower_; }

private:
    CoefficientSequence c_;
    Tower tower_;
};

// sigma(0), ..., sigma(K). Zero is the only accumulation point.
std::vector<double> spectrum_points(const CoefficientSequence& c, int K);

// p(t) = mu_t(e).
SeriesValue return_probability_series(const CoefficientSequence& c, const Tower& tower, double t,
                                      SeriesOptions opts = {});
double return_probability(const CoefficientSequence& c, const Tower& tower, double t, SeriesOptions opts = {});
double log_return_probability(const CoefficientSequence& c, const Tower& tower, double t, SeriesOptions opts = {});
Eigen::VectorXd return_probability(const CoefficientSequence& c, const Tower& tower, const Eigen::VectorXd& t,
                                   SeriesOptions opts = {});
// -log p(t) / t.
double decay_rate(const CoefficientSequence& c, const Tower& tower, double t, SeriesOptions opts = {});

// Level k with r_k = rho, matched to 1e-12 relative.
int level_of_radius(const CoefficientSequence& c, const Tower& tower, double rho);
// h(t; rho) = mu_t(x) for |x|_sigma = rho.
double heat_kernel(const CoefficientSequence& c, const Tower& tower, double t, double rho, SeriesOptions opts = {});
double heat_kernel_at_level(const CoefficientSequence& c, const Tower& tower, double t, int level,
                            SeriesOptions opts = {});

// Two-sided bound on h(t; rho) for t >= 1, rho = r_level. With a = 1/(1+rho):
//   lower = max of
//     c_low (t/(t+rho)) N(1/(2(t+rho)))
//     c_low (t a) N(a/2)                 when t a <= 1
//     c_low N(1/(2t))                    when t a > 1
//     c_ret N(1/t)                       when rho = 0
//   upper = min(p(t), c_up (t/(t+rho)) p((t+rho)/2))
// with c_low = 1/(2e), c_ret = (1-sigma(0))^2/(2e^2), c_up = 2/kappa,
// kappa = (1-sigma(0))^{1/sigma(0)}.
struct HeatKernelBounds {
    double lower = 0.0;
    double upper = 0.0;
    double c_low = 0.0;
    double c_ret = 0.0;
    double c_up = 0.0;
    double kappa = 0.0;
    double rho = 0.0;
};
HeatKernelBounds heat_kernel_bounds(const CoefficientSequence& c, const Tower& tower, double t, int level,
                                    SeriesOptions opts = {});

// sum_k e^{-n sigma(k)} (1/v_k - 1/v_{k+1}).
double convolution_power_bound(const CoefficientSequence& c, const Tower& tower, double n, SeriesOptions opts = {});

enum class Verdict { Recurrent, Transient, Inconclusive };
std::string verdict_name(Verdict v);

struct RecurrenceReport {
    Verdict verdict = Verdict::Inconclusive;
    std::string method;
    // log of 1/(v_k sigma(k)) and of the Lawler terms 1/(v_k (1 - mu(G_k))).
    std::vector<double> log_terms;
    std::vector<double> log_lawler_terms;
    // Partial sums of the exact series (saturate at +inf in double).
    std::vector<double> partial_sums;
};

// Recurrent iff sum_k 1/(v_k sigma(k)) diverges.
RecurrenceReport recurrence_classify(const CoefficientSequence& c, const Tower& tower, int horizon = 400);

// Lawler's sufficient condition for a measure given by mu(G_n), n = 0..N:
// recurrent if sum 1/(v_n (1 - mu(G_n))) diverges. Never returns Transient.
RecurrenceReport lawler_classify(const Tower& tower, const std::vector<double>& subgroup_masses);

}  // namespace ultrawalk
