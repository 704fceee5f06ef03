#include "ultrawalk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ultrawalk/metric.hpp"

namespace ultrawalk {

namespace {

constexpr double kE = 2.718281828459045;

}  // namespace

StepSpectralDistribution::StepSpectralDistribution(CoefficientSequence c, Tower tower)
    : c_(std::move(c)), tower_(std::move(tower)) {
    check_compatible(c_, tower_);
}

int StepSpectralDistribution::level_at_log(double log_lambda, bool strict) const {
    auto below = [&](int k) {
        double s = c_.log_tail(k);
        return strict ? s < log_lambda : s <= log_lambda;
    };
    int top = c_.support_end() ? static_cast<int>(*c_.support_end()) : tower_.max_level();
    if (below(0)) return 0;
    // Tails decrease: gallop, then bisect on (lo, hi].
    int lo = 0, hi = 1;
    while (hi < top && !below(hi)) {
        lo = hi;
        hi = std::min(top, hi * 2);
    }
    if (!below(hi)) {
        if (c_.support_end()) return -1;
        throw RunawayError("spectral level search reached the level cap");
    }
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (below(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double StepSpectralDistribution::N_at(double lambda) const {
    if (std::isnan(lambda)) throw DomainError("lambda must be a number");
    if (lambda < 0.0) return 0.0;
    if (lambda == 0.0) {
        // Only a folded finite tower has an atom at 0.
        if (!c_.support_end()) return 0.0;
        return tower_.inv_volume(static_cast<int>(*c_.support_end()));
    }
    if (lambda >= c_.tail(0)) return 1.0;
    int k = level_at_log(std::log(lambda), false);
    return k < 0 ? 0.0 : tower_.inv_volume(k);
}

double StepSpectralDistribution::log_N_at_log(double log_lambda) const {
    if (log_lambda >= c_.log_tail(0)) return 0.0;
    int k = level_at_log(log_lambda, false);
    if (k < 0) return kNegInf;
    return -tower_.log_volume(k);
}

double StepSpectralDistribution::N_left(double lambda) const {
    if (std::isnan(lambda)) throw DomainError("lambda must be a number");
    if (lambda <= 0.0) return 0.0;
    if (lambda > c_.tail(0)) return 1.0;
    int k = level_at_log(std::log(lambda), true);
    if (k < 0) return tower_.inv_volume(static_cast<int>(*c_.support_end()));
    return tower_.inv_volume(k);
}

double StepSpectralDistribution::N_inverse(double y) const {
    if (!(y > 0.0 && y <= 1.0)) throw DomainError("y ∈ (0,1] required");
    // Largest k with v_k <= 1/y.
    double log_bound = -std::log(y) + 1e-12;
    int top = c_.support_end() ? static_cast<int>(*c_.support_end()) : tower_.max_level();
    int k = 0;
    while (k < top && tower_.log_volume(k + 1) <= log_bound) ++k;
    if (k == top && !c_.support_end()) throw RunawayError("N_inverse reached the level cap");
    return c_.tail(k);
}

std::vector<double> spectrum_points(const CoefficientSequence& c, int K) {
    if (K < 0) throw DomainError("K >= 0 required");
    std::vector<double> out;
    for (int k = 0; k <= K; ++k) out.push_back(c.tail(k));
    return out;
}

SeriesValue return_probability_series(const CoefficientSequence& c, const Tower& tower, double t,
                                      SeriesOptions opts) {
    return point_mass_series(c, tower, t, 0, opts);
}

double return_probability(const CoefficientSequence& c, const Tower& tower, double t, SeriesOptions opts) {
    return point_mass_series(c, tower, t, 0, opts).value;
}

double log_return_probability(const CoefficientSequence& c, const Tower& tower, double t, SeriesOptions opts) {
    return point_mass_series(c, tower, t, 0, opts).log_value;
}

Eigen::VectorXd return_probability(const CoefficientSequence& c, const Tower& tower, const Eigen::VectorXd& t,
                                   SeriesOptions opts) {
    return t.unaryExpr([&](double s) { return return_probability(c, tower, s, opts); });
}

double decay_rate(const CoefficientSequence& c, const Tower& tower, double t, SeriesOptions opts) {
    if (!(t > 0.0)) throw DomainError("t > 0 required");
    return -log_return_probability(c, tower, t, opts) / t;
}

int level_of_radius(const CoefficientSequence& c, const Tower& tower, double rho) {
    if (!(rho >= 0.0)) throw DomainError("rho >= 0 required");
    if (rho == 0.0) return 0;
    int k = ball_level(tower, c, rho * (1.0 + 1e-12));
    double r = level_radius(c, k);
    if (std::abs(r - rho) > 1e-12 * rho) throw DomainError("rho is not a radius value of the tower");
    return k;
}

double heat_kernel_at_level(const CoefficientSequence& c, const Tower& tower, double t, int level,
                            SeriesOptions opts) {
    return point_mass_series(c, tower, t, level, opts).value;
}

double heat_kernel(const CoefficientSequence& c, const Tower& tower, double t, double rho, SeriesOptions opts) {
    return heat_kernel_at_level(c, tower, t, level_of_radius(c, tower, rho), opts);
}

HeatKernelBounds heat_kernel_bounds(const CoefficientSequence& c, const Tower& tower, double t, int level,
                                    SeriesOptions opts) {
    if (!(t >= 1.0)) throw DomainError("t >= 1 required");
    StepSpectralDistribution N(c, tower);
    HeatKernelBounds b;
    double s0 = c.tail(0);
    b.rho = level_radius(c, level);
    b.c_low = 1.0 / (2.0 * kE);
    b.c_ret = (1.0 - s0) * (1.0 - s0) / (2.0 * kE * kE);
    b.kappa = std::exp(std::log1p(-s0) / s0);
    b.c_up = 2.0 / b.kappa;
    double rho = b.rho;
    double a = level == 0 ? 1.0 : c.tail(level - 1);
    double ratio = t / (t + rho);
    double lower = b.c_low * ratio * N.N_at(1.0 / (2.0 * (t + rho)));
    if (t * a <= 1.0)
        lower = std::max(lower, b.c_low * t * a * N.N_at(a / 2.0));
    else
        lower = std::max(lower, b.c_low * N.N_at(1.0 / (2.0 * t)));
    if (level == 0) lower = std::max(lower, b.c_ret * N.N_at(1.0 / t));
    b.lower = lower;
    double pt = return_probability(c, tower, t, opts);
    b.upper = std::min(pt, b.c_up * ratio * return_probability(c, tower, (t + rho) / 2.0, opts));
    return b;
}

double convolution_power_bound(const CoefficientSequence& c, const Tower& tower, double n, SeriesOptions opts) {
    if (!(n >= 0.0)) throw DomainError("n >= 0 required");
    check_compatible(c, tower);
    auto end = c.support_end();
    LogSum sum;
    for (int k = 0;; ++k) {
        bool last = end && k >= *end;
        double log_weight = last ? -tower.log_volume(k)
                                 : -tower.log_volume(k) + log1mexp(tower.log_volume(k) - tower.log_volume(k + 1));
        sum.add(-n * c.tail(k) + log_weight);
        if (last) break;
        if (k + 1 >= tower.max_level()) throw RunawayError("bound series reached the level cap");
        if (-tower.log_volume(k + 1) <= std::log(opts.tol) + sum.value()) break;
    }
    return std::exp(sum.value());
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Recurrent:
            return "Recurrent";
        case Verdict::Transient:
            return "Transient";
        case Verdict::Inconclusive:
            return "Inconclusive";
    }
    return "";
}

namespace {

// Ratio limit of sigma(k)/sigma(k+1); +inf when it diverges, NaN when unknown.
double tail_ratio_limit(const CoefficientSequence& c) {
    switch (c.family()) {
        case Family::Geometric:
            return 1.0 / c.param();
        case Family::Polynomial:
        case Family::IteratedLog:
            return 1.0;
        case Family::Explicit:
            if (c.rule().kind == TailRule::Kind::InverseFactorial) return kInf;
            if (c.rule().kind == TailRule::Kind::Geometric) return 1.0 / c.rule().param;
            break;
        case Family::Designed:
            break;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Limit of v_{k+1}/v_k for infinite towers.
double volume_ratio_limit(const Tower& tower) {
    switch (tower.kind()) {
        case TowerKind::PowersOfTwo:
            return 2.0;
        case TowerKind::Factorial:
            return kInf;
        case TowerKind::CustomVolumes:
            return tower.index(tower.level_cap()).convert_to<double>();
        case TowerKind::FiniteTruncated:
            break;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Envelope tests on the second half of the terms.
Verdict envelope_verdict(const std::vector<double>& log_terms, bool allow_transient, std::string& method) {
    std::size_t n = log_terms.size();
    std::size_t half = n / 2;
    bool harmonic = true;
    for (std::size_t k = half; k + 1 < n; ++k) {
        // k a_k non-decreasing, so a_k >= C/k.
        double cur = log_terms[k] + std::log(k + 1.0);
        double next = log_terms[k + 1] + std::log(k + 2.0);
        if (next < cur - 1e-12) harmonic = false;
    }
    if (harmonic) {
        method = "harmonic envelope";
        return Verdict::Recurrent;
    }
    if (!allow_transient) {
        method = "no envelope";
        return Verdict::Inconclusive;
    }
    bool geometric = true;
    double prev = kInf;
    for (std::size_t k = half; k + 1 < n; ++k) {
        double r = log_terms[k + 1] - log_terms[k];
        if (r >= 0.0 || r > prev + 1e-12) geometric = false;
        prev = r;
    }
    if (geometric) {
        method = "geometric envelope";
        return Verdict::Transient;
    }
    method = "no envelope";
    return Verdict::Inconclusive;
}

void fill_partial_sums(RecurrenceReport& r) {
    double acc = 0.0;
    for (double lt : r.log_terms) {
        acc += std::exp(lt);
        r.partial_sums.push_back(acc);
    }
}

}  // namespace

RecurrenceReport recurrence_classify(const CoefficientSequence& c, const Tower& tower, int horizon) {
    if (horizon < 8) throw DomainError("horizon >= 8 required");
    check_compatible(c, tower);
    RecurrenceReport r;
    if (tower.finite() || c.finite_support()) {
        r.verdict = Verdict::Recurrent;
        r.method = "finite subgroup";
        return r;
    }
    int top = std::min(horizon, tower.max_level());
    for (int k = 0; k <= top; ++k) {
        r.log_terms.push_back(-tower.log_volume(k) - c.log_tail(k));
        r.log_lawler_terms.push_back(-tower.log_volume(k) - log_subgroup_escape(c, tower, k));
    }
    fill_partial_sums(r);

    double ls = tail_ratio_limit(c);
    double lv = volume_ratio_limit(tower);
    if (!std::isnan(ls) && !std::isnan(lv)) {
        r.method = "term ratio limit";
        if (std::isinf(ls) && std::isinf(lv)) {
            // Only the inverse factorial tail on the factorial tower:
            // 1/(v_k sigma(k)) = (k+s)!/(k+1)! does not tend to 0.
            r.verdict = Verdict::Recurrent;
            r.method = "term growth";
        } else if (std::isinf(lv)) {
            r.verdict = Verdict::Transient;
        } else if (std::isinf(ls)) {
            r.verdict = Verdict::Recurrent;
        } else {
            // a_{k+1}/a_k -> ls/lv; equality only for q = 1/index, with constant terms.
            double lim = ls / lv;
            r.verdict = lim >= 1.0 ? Verdict::Recurrent : Verdict::Transient;
        }
        return r;
    }
    r.verdict = envelope_verdict(r.log_terms, true, r.method);
    return r;
}

RecurrenceReport lawler_classify(const Tower& tower, const std::vector<double>& subgroup_masses) {
    if (subgroup_masses.size() < 8) throw DomainError("at least 8 subgroup masses required");
    RecurrenceReport r;
    for (std::size_t n = 0; n < subgroup_masses.size(); ++n) {
        double m = subgroup_masses[n];
        if (!(m >= 0.0 && m <= 1.0)) throw DomainError("subgroup masses must lie in [0,1]");
        if (m == 1.0) {
            r.verdict = Verdict::Recurrent;
            r.method = "supported on a finite subgroup";
            return r;
        }
        double lt = -tower.log_volume(static_cast<int>(n)) - std::log1p(-m);
        r.log_lawler_terms.push_back(lt);
        r.log_terms.push_back(lt);
    }
    fill_partial_sums(r);
    r.verdict = envelope_verdict(r.log_terms, false, r.method);
    return r;
}

}  // namespace ultrawalk
