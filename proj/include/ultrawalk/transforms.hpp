#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ultrawalk/measure.hpp"
#include "ultrawalk/tower.hpp"

namespace ultrawalk {

enum class Monotone { None, Increasing, Decreasing };
enum class Curvature { None, Convex, Concave };

// A function on (lo, hi] with declared shape. The declaration is spot-checked
// on 64 log-spaced points at construction; +inf values are allowed.
class ScalarFunction {
public:
    ScalarFunction(std::string name, std::function<double(double)> f, Monotone monotone = Monotone::None,
                   Curvature curvature = Curvature::None, double lo = 0.0, double hi = kInf);

    double operator()(double x) const { return f_(x); }
    const std::string& name() const { return name_; }
    Monotone monotone() const { return monotone_; }
    Curvature curvature() const { return curvature_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    std::string name_;
    std::function<double(double)> f_;
    Monotone monotone_;
    Curvature curvature_;
    double lo_, hi_;
};

// Optimum of a one-dimensional search over tau > 0.
struct Extremum {
    double value = 0.0;
    double arg = 0.0;
    // False when the optimum sits on the edge of the widest search range.
    bool interior = true;
};

// L(M)(x) = inf_{tau>0} {x tau + M(tau)}, M decreasing with M(0+) = inf.
// Log-spaced bracket, widened up to 1e+-300, then golden-section refinement.
double legendre(const ScalarFunction& M, double x);
Extremum legendre_extremum(const ScalarFunction& M, double x);

// L*(F)(x) = sup_{tau>0} {-x tau + F(tau)}, F non-decreasing with F = o(tau).
double conjugate_legendre(const ScalarFunction& F, double x);
Extremum conjugate_legendre_extremum(const ScalarFunction& F, double x);

// K(M)(x) = -log(x int_0^inf e^{-(x t + M(t))} dt), by Gauss-Kronrod in log t
// around the Legendre minimizer. L - log(1 + L) <= K <= L with L = L(M)(x).
double kohlbecker(const ScalarFunction& M, double x);

// M o (M/id)^{-1}(x); L(M)(x) lies in [1, 2] times this.
double legendre_scale(const ScalarFunction& M, double x);

// l_k(t) = log(1 + l_{k-1}(t)), l_0(t) = t; e_k the k-fold exp.
double iterated_log(int k, double t);
double iterated_exp(int k, double t);

// Rate functions M with closed-form Legendre asymptotics.
namespace rates {
// (log 1/s)^alpha for s < 1, 0 beyond; L(M)(t) ~ (log t)^alpha.
ScalarFunction log_power(double alpha);
double log_power_reference(double alpha, double t);
// s^{-beta}; L(M)(t) = c_beta t^{beta_0}, beta_0 = beta/(1+beta), c_beta = (1+beta)/beta^{beta_0}.
ScalarFunction power(double beta);
double power_exact(double beta, double t);
// e_k(s^{-nu}); L(M)(t) ~ t / l_k(t)^{1/nu}.
ScalarFunction iterated_exp(int k, double nu);
double iterated_exp_reference(int k, double nu, double t);
}  // namespace rates

// Target functions F.
ScalarFunction target_log();          // log max(t, 1)
ScalarFunction target_power(double a);  // t^a, 0 < a < 1

struct DesignOptions {
    // Rate function; built from the target when absent.
    std::optional<ScalarFunction> M;
    // Levels evaluated eagerly; later levels are evaluated on demand.
    int table_levels = 400;
};

// Designed coefficients plus the facts needed to reproduce them.
struct Design {
    CoefficientSequence seq;
    // First level of the designed tail; levels below carry the head.
    int k0 = 0;
    std::string rate;
};

// Head for levels <= k0: c_0 = 1/2 (or 1 - sigma(k0) when k0 = 0), the rest
// of the deficit on levels 1..k0 in proportion to 2^{-k}. For k >= k0 the
// tails come from log_sigma, which must be strictly decreasing there.
Design design_from_log_sigma(const Tower& tower, std::function<double(long)> log_sigma, std::string provenance,
                             int table_levels = 400);

// Fast decay: sigma(k) = M^{-1}(log v_k), M = L*(sqrt(tau (1 + F(tau)))) by
// default, so L(M)/F -> inf. With target_log the preset M = (log 1/s)^2
// gives sigma(k) = exp(-sqrt(log v_k)).
Design design_fast_decay(const Tower& tower, const ScalarFunction& F, DesignOptions opts = {});
// Slow decay: sigma(k) = M^{-1}(log v_{k+1}) / delta with delta = 2 log 2 and
// M = L*(sqrt F) by default, so N(lambda) >= e^{-M(delta lambda)} on [0, 1/2].
Design design_slow_decay(const Tower& tower, const ScalarFunction& F, DesignOptions opts = {});
// Spectral floor: sigma(k) = g^{-1}(1/v_{k+1}) makes N >= g. log_g_inv maps
// log y to log g^{-1}(y).
Design design_spectral_floor(const Tower& tower, std::function<double(double)> log_g_inv, std::string provenance);
// sigma(k) = 1 / l_{l+1}(v_k)^{1/nu}: p(n) <= exp(-c n / l_l(n)^{1/nu}).
Design design_iterated_log_decay(const Tower& tower, int l, double nu);

// -log p(n) / F(n) over a grid, and the first index from which the trend is
// strictly monotone in the requested direction (grid.size() if never).
struct TrendReport {
    std::vector<double> n;
    std::vector<double> ratio;
    std::size_t monotone_from = 0;
};
TrendReport decay_trend(const CoefficientSequence& c, const Tower& tower, const ScalarFunction& F,
                        const std::vector<double>& grid, bool increasing);

}  // namespace ultrawalk
