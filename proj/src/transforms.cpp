#include "ultrawalk/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "special.hpp"
#include "ultrawalk/spectral.hpp"

namespace ultrawalk {

namespace {

// log(1e300): the widest search range in log tau.
constexpr double kLogRange = 690.7;
constexpr double kLog2 = 0.6931471805599453;
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

// Minimum of phi over u in [-kLogRange, kLogRange]: grid bracket, widened
// from [log 1e-12, log 1e12] while the minimum sits on an edge, then golden section.
Extremum minimize_log(const std::function<double(double)>& phi) {
    const int n = 400;
    double lo = -12 * std::log(10.0), hi = 12 * std::log(10.0);
    std::vector<double> u(n), val(n);
    int best = 0;
    for (;;) {
        best = -1;
        for (int i = 0; i < n; ++i) {
            u[i] = lo + (hi - lo) * i / (n - 1.0);
            val[i] = phi(u[i]);
            if (std::isnan(val[i])) throw DomainError("objective is not a number at tau = " + fmt(std::exp(u[i])));
            if (best < 0 || val[i] < val[best]) best = i;
        }
        if (best == 0 && lo > -kLogRange) {
            lo = std::max(-kLogRange, lo - 55.0);
            continue;
        }
        if (best == n - 1 && hi < kLogRange) {
            hi = std::min(kLogRange, hi + 55.0);
            continue;
        }
        break;
    }
    Extremum e;
    e.interior = best > 0 && best < n - 1;
    if (!std::isfinite(val[best])) throw DomainError("objective has no finite value in range");
    if (!e.interior) {
        e.value = val[best];
        e.arg = std::exp(u[best]);
        return e;
    }
    // Golden section on [u_{best-1}, u_{best+1}].
    const double g = 0.6180339887498949;
    double a = u[best - 1], b = u[best + 1];
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = phi(c), fd = phi(d);
    while (b - a > 1e-13 * std::max(1.0, std::abs(a))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = phi(d);
        }
    }
    double um = 0.5 * (a + b);
    double fm = phi(um);
    e.value = std::min({fm, fc, fd, val[best]});
    e.arg = std::exp(fm == e.value ? um : fc == e.value ? c : fd == e.value ? d : u[best]);
    return e;
}

// log of the k-fold shifted log of e^{log_v}, l_1(v) = log(1 + v).
double iterated_log_of_log(int k, double log_v) {
    if (k < 1) throw DomainError("k >= 1 required");
    double x = log_v > 0 ? log_v + std::log1p(std::exp(-log_v)) : std::log1p(std::exp(log_v));
    return detail::iterated_log(k - 1, x);
}

class DesignedTail : public TailModel {
public:
    DesignedTail(int k0, std::vector<double> table, std::function<double(long)> fn)
        : k0_(k0), table_(std::move(table)), fn_(std::move(fn)) {}
    double log_tail(long k) const override {
        if (k < k0_) return 0.0;
        long i = k - k0_;
        if (i < static_cast<long>(table_.size())) return table_[i];
        return fn_(k);
    }

private:
    int k0_;
    std::vector<double> table_;
    std::function<double(long)> fn_;
};

// log M^{-1}(y) for decreasing M, by bisection in log s.
double log_inverse_decreasing(const ScalarFunction& M, double y) {
    double lo = -1.0, hi = 10.0;
    if (M(std::exp(hi)) >= y) return hi;
    // Widen downward only as far as needed; numeric M may not reach 1e-300.
    while (M(std::exp(lo)) < y) {
        if (lo <= -kLogRange) throw RunawayError("rate function inverse is below the double range");
        hi = lo;
        lo = std::max(-kLogRange, 2 * lo);
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        if (M(std::exp(mid)) >= y)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void check_sublinear(const ScalarFunction& F) {
    if (F.monotone() != Monotone::Increasing) throw DomainError("target F must be declared non-decreasing");
    if (!(F(1e12) / 1e12 <= 1e-3)) throw DomainError("target F must be o(t)");
}

// log s solving L*(tau^b)(s) = y: (1-b)(b/s)^{b/(1-b)} = y.
double log_power_conjugate_inverse(double b, double y) {
    return std::log(b) + (1.0 - b) / b * (std::log1p(-b) - std::log(y));
}

// Exponent a of a power target t^a, if F is one.
std::optional<double> power_target_exponent(const ScalarFunction& F) {
    const std::string prefix = "power(";
    if (F.name().rfind(prefix, 0) != 0) return std::nullopt;
    return std::stod(F.name().substr(prefix.size()));
}

}  // namespace

ScalarFunction::ScalarFunction(std::string name, std::function<double(double)> f, Monotone monotone,
                               Curvature curvature, double lo, double hi)
    : name_(std::move(name)), f_(std::move(f)), monotone_(monotone), curvature_(curvature), lo_(lo), hi_(hi) {
    if (!f_) throw DomainError("function evaluator required");
    if (!(lo_ >= 0.0 && hi_ > lo_)) throw DomainError("validity interval must satisfy 0 <= lo < hi");
    double a = std::max(lo_ * (1.0 + 1e-9), 1e-6), b = std::min(hi_, 1e6);
    if (!(b > a)) return;
    const int n = 64;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = a * std::pow(b / a, i / (n - 1.0));
        y[i] = f_(x[i]);
        if (std::isnan(y[i])) throw DomainError(name_ + ": value is not a number at " + fmt(x[i]));
    }
    auto tol = [](double p, double q) { return 1e-9 * std::max(std::abs(p), std::abs(q)) + 1e-300; };
    for (int i = 0; i + 1 < n; ++i) {
        if (monotone_ == Monotone::Increasing && y[i + 1] < y[i] - tol(y[i], y[i + 1]))
            throw DomainError(name_ + ": declared non-decreasing but decreases near " + fmt(x[i]));
        if (monotone_ == Monotone::Decreasing && y[i + 1] > y[i] + tol(y[i], y[i + 1]))
            throw DomainError(name_ + ": declared non-increasing but increases near " + fmt(x[i]));
        if (curvature_ == Curvature::None || !std::isfinite(y[i]) || !std::isfinite(y[i + 1])) continue;
        double ym = f_(0.5 * (x[i] + x[i + 1]));
        double chord = 0.5 * (y[i] + y[i + 1]);
        if (curvature_ == Curvature::Convex && ym > chord + tol(ym, chord))
            throw DomainError(name_ + ": declared convex but fails the midpoint test near " + fmt(x[i]));
        if (curvature_ == Curvature::Concave && ym < chord - tol(ym, chord))
            throw DomainError(name_ + ": declared concave but fails the midpoint test near " + fmt(x[i]));
    }
}

Extremum legendre_extremum(const ScalarFunction& M, double x) {
    if (!(x > 0.0)) throw DomainError("x > 0 required");
    auto e = minimize_log([&](double u) {
        double t = std::exp(u);
        return x * t + M(t);
    });
    return e;
}

double legendre(const ScalarFunction& M, double x) {
    auto e = legendre_extremum(M, x);
    if (!e.interior) throw DomainError("no interior bracket for the Legendre transform at x = " + fmt(x));
    return e.value;
}

Extremum conjugate_legendre_extremum(const ScalarFunction& F, double x) {
    if (!(x > 0.0)) throw DomainError("x > 0 required");
    auto e = minimize_log([&](double u) {
        double t = std::exp(u);
        return x * t - F(t);
    });
    e.value = -e.value;
    return e;
}

double conjugate_legendre(const ScalarFunction& F, double x) {
    auto e = conjugate_legendre_extremum(F, x);
    if (!e.interior) throw DomainError("sup not attained in bracket at x = " + fmt(x));
    return e.value;
}

double kohlbecker(const ScalarFunction& M, double x) {
    if (!(x > 0.0)) throw DomainError("x > 0 required");
    // x int e^{-(xt + M(t))} dt = x int e^{-h(u)} du with h(u) = x e^u + M(e^u) - u.
    auto h = [&](double u) { return x * std::exp(u) + M(std::exp(u)) - u; };
    auto m = minimize_log(h);
    if (!m.interior) throw DomainError("no interior bracket for the Kohlbecker integrand at x = " + fmt(x));
    const double uc = std::log(m.arg), hmin = m.value;
    auto edge = [&](double dir) {
        double step = 1e-3;
        while (h(uc + dir * step) - hmin > 1.0 && step > 1e-12) step /= 8;
        double u = uc;
        while (h(u + dir * step) - hmin < 60.0) {
            u += dir * step;
            step *= 2;
            if (std::abs(u - uc) > 2 * kLogRange) throw RunawayError("Kohlbecker integrand does not decay");
        }
        return u + dir * step;
    };
    double a = edge(-1.0) - uc, b = edge(1.0) - uc;
    // Offsets from uc keep the abscissae exact near the peak.
    auto f = [&](double s) {
        double v = h(uc + s) - hmin;
        return std::isfinite(v) ? std::exp(-v) : 0.0;
    };
    // Rounding in h limits the attainable relative accuracy.
    const double tol = std::max(1e-12, 400 * kEps * (1 + std::abs(hmin) + std::abs(uc)));
    using boost::math::quadrature::gauss_kronrod;
    double err_l = 0, err_r = 0;
    double left = gauss_kronrod<double, 61>::integrate(f, a, 0.0, 15, tol, &err_l);
    double right = gauss_kronrod<double, 61>::integrate(f, 0.0, b, 15, tol, &err_r);
    double total = left + right;
    if (!(total > 0.0) || err_l + err_r > 10 * tol * total) throw RunawayError("Kohlbecker quadrature did not converge");
    return hmin - std::log(x) - std::log(total);
}

double legendre_scale(const ScalarFunction& M, double x) {
    if (!(x > 0.0)) throw DomainError("x > 0 required");
    // (M/id)(s) = M(s)/s strictly decreases; solve M(s)/s = x in log s.
    double lo = -kLogRange, hi = kLogRange;
    auto ratio = [&](double u) { return M(std::exp(u)) / std::exp(u); };
    if (!(ratio(lo) >= x) || !(ratio(hi) <= x)) throw DomainError("M/id does not reach x in range");
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        if (ratio(mid) >= x)
            lo = mid;
        else
            hi = mid;
    }
    return x * std::exp(0.5 * (lo + hi));
}

double iterated_log(int k, double t) {
    if (k < 0 || !(t >= 0.0)) throw DomainError("k >= 0 and t >= 0 required");
    return detail::iterated_log(k, t);
}

double iterated_exp(int k, double t) {
    if (k < 0) throw DomainError("k >= 0 required");
    for (int i = 0; i < k; ++i) t = std::exp(t);
    return t;
}

namespace rates {

ScalarFunction log_power(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha > 0 required");
    return ScalarFunction(
        "log_power(" + fmt(alpha) + ")", [alpha](double s) { return s < 1.0 ? std::pow(-std::log(s), alpha) : 0.0; },
        Monotone::Decreasing, alpha >= 1.0 ? Curvature::Convex : Curvature::None);
}

double log_power_reference(double alpha, double t) { return std::pow(std::log(t), alpha); }

ScalarFunction power(double beta) {
    if (!(beta > 0.0)) throw DomainError("beta > 0 required");
    return ScalarFunction(
        "inverse_power(" + fmt(beta) + ")", [beta](double s) { return std::pow(s, -beta); }, Monotone::Decreasing,
        Curvature::Convex);
}

double power_exact(double beta, double t) {
    double b0 = beta / (1.0 + beta);
    return (1.0 + beta) / std::pow(beta, b0) * std::pow(t, b0);
}

ScalarFunction iterated_exp(int k, double nu) {
    if (k < 1 || !(nu > 0.0)) throw DomainError("k >= 1 and nu > 0 required");
    return ScalarFunction(
        "iterated_exp(" + std::to_string(k) + "," + fmt(nu) + ")",
        [k, nu](double s) { return ultrawalk::iterated_exp(k, std::pow(s, -nu)); }, Monotone::Decreasing,
        Curvature::Convex);
}

double iterated_exp_reference(int k, double nu, double t) {
    return t / std::pow(ultrawalk::iterated_log(k, t), 1.0 / nu);
}

}  // namespace rates

ScalarFunction target_log() {
    return ScalarFunction(
        "log", [](double t) { return t > 1.0 ? std::log(t) : 0.0; }, Monotone::Increasing);
}

ScalarFunction target_power(double a) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("a ∈ (0,1) required");
    return ScalarFunction(
        "power(" + fmt(a) + ")", [a](double t) { return std::pow(t, a); }, Monotone::Increasing,
        Curvature::Concave);
}

Design design_from_log_sigma(const Tower& tower, std::function<double(long)> log_sigma, std::string provenance,
                             int table_levels) {
    if (tower.finite()) throw DomainError("designers need an infinite tower");
    if (table_levels < 1) throw DomainError("table_levels >= 1 required");
    const double log_half = -kLog2;
    int k0 = 0;
    while (!(log_sigma(k0) < log_half)) {
        if (++k0 > tower.max_level()) throw RunawayError("designed tails never drop below 1/2");
    }
    std::vector<double> table;
    for (int k = k0; k < k0 + table_levels && k <= tower.max_level(); ++k) {
        double v = log_sigma(k);
        if (!(v > kNegInf) || (!table.empty() && !(v < table.back())))
            throw DomainError("designed tails must strictly decrease (level " + std::to_string(k) + ")");
        table.push_back(v);
    }
    const double s0 = std::exp(table.front());
    std::vector<double> head;
    if (k0 == 0) {
        head.push_back(1.0 - s0);
    } else {
        head.push_back(0.5);
        const double rest = 0.5 - s0;
        const double norm = 1.0 - std::ldexp(1.0, -k0);
        for (int k = 1; k <= k0; ++k) head.push_back(rest * std::ldexp(1.0, -k) / norm);
    }
    auto model = std::make_shared<DesignedTail>(k0, std::move(table), std::move(log_sigma));
    Design d{CoefficientSequence::designed(std::move(head), model, provenance), k0, provenance};
    return d;
}

Design design_fast_decay(const Tower& tower, const ScalarFunction& F, DesignOptions opts) {
    check_sublinear(F);
    std::function<double(double)> log_m_inv;
    std::string rate;
    if (opts.M) {
        ScalarFunction M = *opts.M;
        rate = M.name();
        log_m_inv = [M](double y) { return log_inverse_decreasing(M, y); };
    } else if (F.name() == "log") {
        rate = "log_power(2)";
        log_m_inv = [](double y) { return -std::sqrt(y); };
    } else if (auto a = power_target_exponent(F)) {
        // sqrt(tau (1 + tau^a)) ~ tau^{(1+a)/2}; the pure power has a closed-form conjugate.
        double b = 0.5 * (1.0 + *a);
        rate = "conjugate(power(" + fmt(b) + "))";
        log_m_inv = [b](double y) { return log_power_conjugate_inverse(b, y); };
    } else {
        ScalarFunction Ft("sqrt(tau(1+F))", [F](double t) { return std::sqrt(t * (1.0 + std::max(F(t), 0.0))); },
                          Monotone::Increasing);
        ScalarFunction M("conjugate(" + Ft.name() + ")",
                         [Ft](double s) { return conjugate_legendre_extremum(Ft, s).value; }, Monotone::Decreasing);
        rate = M.name();
        log_m_inv = [M](double y) { return log_inverse_decreasing(M, y); };
    }
    auto log_sigma = [tower, log_m_inv](long k) { return log_m_inv(tower.log_volume(static_cast<int>(k))); };
    auto d = design_from_log_sigma(tower, log_sigma, "fast_decay:" + F.name() + ":" + rate, opts.table_levels);
    d.rate = rate;
    return d;
}

Design design_slow_decay(const Tower& tower, const ScalarFunction& F, DesignOptions opts) {
    check_sublinear(F);
    if (!(F(1e12) > F(1e3) + 1e-9 * std::abs(F(1e3)))) throw DomainError("target F must tend to infinity");
    const double log_delta = std::log(2.0 * kLog2);
    std::function<double(double)> log_m_inv;
    std::string rate;
    if (opts.M) {
        ScalarFunction M = *opts.M;
        rate = M.name();
        log_m_inv = [M](double y) { return log_inverse_decreasing(M, y); };
    } else if (auto a = power_target_exponent(F)) {
        double b = 0.5 * *a;
        rate = "conjugate(power(" + fmt(b) + "))";
        log_m_inv = [b](double y) { return log_power_conjugate_inverse(b, y); };
    } else {
        ScalarFunction Ft("sqrt(F)", [F](double t) { return std::sqrt(std::max(F(t), 0.0)); }, Monotone::Increasing);
        ScalarFunction M("conjugate(sqrt(F))", [Ft](double s) { return conjugate_legendre_extremum(Ft, s).value; },
                         Monotone::Decreasing);
        rate = M.name();
        log_m_inv = [M](double y) { return log_inverse_decreasing(M, y); };
    }
    auto log_sigma = [tower, log_m_inv, log_delta](long k) {
        return log_m_inv(tower.log_volume(static_cast<int>(k) + 1)) - log_delta;
    };
    auto d = design_from_log_sigma(tower, log_sigma, "slow_decay:" + F.name() + ":" + rate, opts.table_levels);
    d.rate = rate;
    return d;
}

Design design_spectral_floor(const Tower& tower, std::function<double(double)> log_g_inv, std::string provenance) {
    auto log_sigma = [tower, log_g_inv](long k) { return log_g_inv(-tower.log_volume(static_cast<int>(k) + 1)); };
    return design_from_log_sigma(tower, log_sigma, "spectral_floor:" + provenance);
}

Design design_iterated_log_decay(const Tower& tower, int l, double nu) {
    if (l < 1 || !(nu > 0.0)) throw DomainError("l >= 1 and nu > 0 required");
    auto log_sigma = [tower, l, nu](long k) {
        return -std::log(iterated_log_of_log(l + 1, tower.log_volume(static_cast<int>(k)))) / nu;
    };
    return design_from_log_sigma(tower, log_sigma, "iterated_log_decay:" + std::to_string(l) + "," + fmt(nu));
}

TrendReport decay_trend(const CoefficientSequence& c, const Tower& tower, const ScalarFunction& F,
                        const std::vector<double>& grid, bool increasing) {
    TrendReport r;
    for (double n : grid) {
        r.n.push_back(n);
        r.ratio.push_back(-log_return_probability(c, tower, n) / F(n));
    }
    std::size_t from = r.ratio.size();
    if (from > 0) --from;
    while (from > 0) {
        double a = r.ratio[from - 1], b = r.ratio[from];
        if (increasing ? !(a < b) : !(a > b)) break;
        --from;
    }
    r.monotone_from = r.ratio.size() < 2 || from + 1 == r.ratio.size() ? r.ratio.size() : from;
    return r;
}

}  // namespace ultrawalk
