#include "ultrawalk/profile.hpp"

#include <algorithm>
#include <cmath>

#include "ultrawalk/spectral.hpp"

namespace ultrawalk {

namespace {

// Largest k with v_k <= e^{log_u} (up to rounding of log v_k), -1 when u < 1.
int level_below(const Tower& tower, double log_u) {
    const double slack = 1e-14 * std::max(1.0, std::abs(log_u));
    auto fits = [&](int k) { return tower.log_volume(k) <= log_u + slack; };
    if (!fits(0)) return -1;
    const int top = tower.max_level();
    int lo = 0, hi = 1;
    while (hi <= top && fits(hi)) {
        lo = hi;
        hi *= 2;
    }
    hi = std::min(hi, top + 1);
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (fits(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

// Smallest k >= 0 with pred(k); pred is monotone and holds at the support end.
template <class Pred>
int first_level(const CoefficientSequence& c, const Tower& tower, Pred pred) {
    int top = tower.max_level();
    if (auto end = c.support_end()) top = std::min<long>(top, *end);
    if (pred(0)) return 0;
    int lo = 0, hi = 1;
    while (!pred(hi)) {
        if (hi >= top) throw RunawayError("profile level search reached the level cap");
        lo = hi;
        hi = std::min(top, hi * 2);
    }
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double volume_double(const Tower& tower, int k) {
    return k <= 150 ? tower.volume(k).convert_to<double>() : std::exp(tower.log_volume(k));
}

}  // namespace

double log_T_of_log(const CoefficientSequence& c, const Tower& tower, double log_u) {
    if (std::isnan(log_u)) throw DomainError("u must be a number");
    check_compatible(c, tower);
    const int k = level_below(tower, log_u);
    auto end = c.support_end();
    if (end && k >= *end) return kNegInf;
    if (!end && k >= tower.max_level()) throw RunawayError("T evaluation reached the level cap");
    // For v_k <= u < v_{k+1}:
    //   T(u) = c_{k+1}(1 - u/v_{k+1}) + sigma(k+1) - u sum_{i>=k+2} c_i/v_i,
    // and the last sum is at most sigma(k+1)/2, so the subtraction is benign.
    const int j = k + 1;
    double log_a = c.log_coeff(j);
    if (log_u > kNegInf) log_a += log1mexp(std::min(0.0, log_u - tower.log_volume(j)));
    double log_b = c.log_tail(j);
    if (log_b == kNegInf) return log_a;
    LogSum s;
    if (log_u > kNegInf) {
        for (int i = j + 1;; ++i) {
            s.add(c.log_coeff(i) + log_u - tower.log_volume(i));
            if (end && i >= *end) break;
            if (i + 1 > tower.max_level()) throw RunawayError("T series reached the level cap");
            double rest = c.log_tail(i) + log_u - tower.log_volume(i + 1);
            if (rest < s.value() - 40.0) break;
        }
    }
    double log_bc = log_b + std::log1p(-std::exp(s.value() - log_b));
    return logaddexp(log_a, log_bc);
}

double T_of(const CoefficientSequence& c, const Tower& tower, double u) {
    if (!(u >= 0.0)) throw DomainError("u >= 0 required");
    return std::exp(log_T_of_log(c, tower, std::log(u)));
}

double log_lambda1_subgroup(const CoefficientSequence& c, const Tower& tower, int k) {
    return log_subgroup_escape(c, tower, k);
}

double lambda1_subgroup(const CoefficientSequence& c, const Tower& tower, int k) {
    return std::exp(log_subgroup_escape(c, tower, k));
}

double log_T_inverse_log(const CoefficientSequence& c, const Tower& tower, double log_y) {
    if (!(log_y <= 0.0)) throw DomainError("y ∈ (0,1] required");
    if (log_y == 0.0) return kNegInf;
    // T(v_k) = lambda_1(G_k) decreases in k; the answer lies on the piece ending at v_k.
    int k = first_level(c, tower, [&](int j) { return log_lambda1_subgroup(c, tower, j) <= log_y; });
    double log_t0 = k == 0 ? 0.0 : log_lambda1_subgroup(c, tower, k - 1);
    double log_t1 = log_lambda1_subgroup(c, tower, k);
    double log_u1 = tower.log_volume(k);
    if (log_t0 <= log_t1) return log_u1;
    // u = u0 + w (u1 - u0), w = (t0 - y)/(t0 - t1).
    double w = std::expm1(log_y - log_t0) / std::expm1(log_t1 - log_t0);
    double r = k == 0 ? 0.0 : std::exp(tower.log_volume(k - 1) - log_u1);
    return log_u1 + std::log(w + (1.0 - w) * r);
}

double T_inverse(const CoefficientSequence& c, const Tower& tower, double y) {
    if (!(y > 0.0 && y <= 1.0)) throw DomainError("y ∈ (0,1] required");
    return std::exp(log_T_inverse_log(c, tower, std::log(y)));
}

ProfileBand::ProfileBand(CoefficientSequence c, Tower tower) : c_(std::move(c)), tower_(std::move(tower)) {
    check_compatible(c_, tower_);
    if (c_.finite_support()) throw DomainError("profile band needs infinitely supported coefficients");
}

int ProfileBand::k_of_n(long n) const {
    if (n < 1) throw DomainError("n >= 1 required");
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = k_cache_.find(n);
        if (it != k_cache_.end()) return it->second;
    }
    const double bound = -2.0 * std::log(static_cast<double>(n));
    int k = first_level(c_, tower_, [&](int j) { return log_lambda1_subgroup(c_, tower_, j) <= bound; });
    std::lock_guard<std::mutex> lock(mu_);
    k_cache_.emplace(n, k);
    return k;
}

double ProfileBand::F(long n) const { return volume_double(tower_, k_of_n(n)); }

double ProfileBand::F_inverse(double v) const {
    if (!(v >= 1.0)) throw DomainError("v >= 1 required");
    // F(n) <= v iff k(n) <= K iff lambda_1(G_K) <= 1/n^2, K the level below v.
    const int K = level_below(tower_, std::log(v));
    const double log_l = log_lambda1_subgroup(c_, tower_, K);
    auto ok = [&](long n) { return log_l <= -2.0 * std::log(static_cast<double>(n)); };
    long n = std::max(1L, static_cast<long>(std::floor(std::exp(-0.5 * log_l))));
    while (n > 1 && !ok(n)) --n;
    while (ok(n + 1)) ++n;
    double lo = F(n), hi = F(n + 1);
    return static_cast<double>(n) + (v - lo) / (hi - lo);
}

double ProfileBand::upper(double v) const {
    if (!(v > 1.0)) throw DomainError("v > 1 required");
    double x = F_inverse(v) - 1.0;
    return 1.0 / (x * x);
}

std::vector<std::pair<long, double>> ProfileBand::knots(long n_max) const {
    std::vector<std::pair<long, double>> out;
    for (long n = 1; n <= n_max; ++n) out.emplace_back(n, F(n));
    return out;
}

double folner_upper(const CoefficientSequence& c, const Tower& tower, double v) {
    return ProfileBand(c, tower).upper(v);
}

BandReport check_band(const ProfileBand& band, const std::vector<double>& grid) {
    BandReport r;
    r.min_ratio = kInf;
    for (double v : grid) {
        double lo = band.lower(v), up = band.upper(v);
        ++r.points;
        if (lo > up * (1.0 + 1e-12)) ++r.violations;
        double ratio = up / lo;
        r.min_ratio = std::min(r.min_ratio, ratio);
        r.max_ratio = std::max(r.max_ratio, ratio);
    }
    return r;
}

SpectralBridgeReport profile_vs_spectral_check(const CoefficientSequence& c, const Tower& tower,
                                               const std::vector<double>& grid) {
    SpectralBridgeReport r;
    auto a = condition_A(c);
    r.advisory = !a.holds;
    r.lambda = a.lambda;
    StepSpectralDistribution N(c, tower);
    auto t_inv = [&](double y) { return y >= 1.0 ? 0.0 : T_inverse(c, tower, y); };
    r.lower_margin = kInf;
    for (double u : grid) {
        if (!(u > 0.0)) throw DomainError("grid points must be positive");
        double inv_n = 1.0 / N.N_at(u);
        double lo = t_inv((1.0 + r.lambda) * u);
        double hi = t_inv(u / (2.0 * (1.0 + r.lambda)));
        ++r.points;
        if (!(lo < inv_n)) ++r.lower_violations;
        if (!(inv_n < hi)) ++r.upper_violations;
        if (lo > 0.0) r.lower_margin = std::min(r.lower_margin, inv_n / lo);
        r.upper_margin = std::max(r.upper_margin, inv_n / hi);
    }
    return r;
}

double sigma_extended(const CoefficientSequence& c, double s) {
    if (std::isnan(s)) throw DomainError("s must be a number");
    if (s <= -1.0) return 1.0;
    double k = std::floor(s);
    double f = s - k;
    double a = c.log_tail(static_cast<long>(k));
    if (f == 0.0) return std::exp(a);
    double b = c.log_tail(static_cast<long>(k) + 1);
    if (b == kNegInf) return 0.0;
    return std::exp((1.0 - f) * a + f * b);
}

double doubling_constant(const CoefficientSequence& c, const std::vector<double>& x_grid) {
    double worst = kInf;
    for (double x : x_grid) {
        if (!(x > 1.0)) throw DomainError("doubling grid needs x > 1");
        double den = sigma_extended(c, std::log(x));
        if (den == 0.0) continue;
        worst = std::min(worst, sigma_extended(c, std::log(2.0 * x)) / den);
    }
    return worst;
}

OrderEstimate order_of(const std::vector<std::pair<double, double>>& log_samples) {
    const std::size_t n = log_samples.size();
    if (n < 20) throw DomainError("order estimate needs at least 20 samples");
    if (log_samples.back().first - log_samples.front().first < 4.0 * std::log(10.0))
        throw DomainError("samples must span at least 4 decades");
    OrderEstimate r;
    r.upper = -kInf;
    r.lower = kInf;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = n / 2; i < n; ++i) {
        auto [lx, lf] = log_samples[i];
        if (!(lx > 0.0) || !std::isfinite(lf)) throw DomainError("tail samples need x > 1 and finite f > 0");
        r.upper = std::max(r.upper, lf / lx);
        r.lower = std::min(r.lower, lf / lx);
        sx += lx;
        sy += lf;
        sxx += lx * lx;
        sxy += lx * lf;
        ++m;
    }
    double den = m * sxx - sx * sx;
    if (!(den > 0.0)) throw DomainError("degenerate sample span");
    r.slope = (m * sxy - sx * sy) / den;
    return r;
}

}  // namespace ultrawalk
