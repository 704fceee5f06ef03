#include "ultrawalk/measure.hpp"

#include <algorithm>
#include <cmath>

#include "special.hpp"

namespace ultrawalk {

std::string family_name(Family f) {
    switch (f) {
        case Family::Geometric:
            return "geometric";
        case Family::Polynomial:
            return "polynomial";
        case Family::IteratedLog:
            return "iterated_log";
        case Family::Explicit:
            return "explicit";
        case Family::Designed:
            return "designed";
    }
    return "";
}

double TailModel::log_coeff(long k) const {
    double a = log_tail(k - 1);
    double b = log_tail(k);
    if (b == kNegInf) return a;
    return a + log1mexp(b - a);
}

namespace {

class GeometricModel : public TailModel {
public:
    explicit GeometricModel(double q) : q_(q), log_q_(std::log(q)), log_1mq_(std::log1p(-q)) {}
    double log_tail(long k) const override { return (k + 1) * log_q_; }
    double tail(long k) const override { return std::pow(q_, static_cast<double>(k + 1)); }
    double log_coeff(long k) const override { return log_1mq_ + k * log_q_; }
    double coeff(long k) const override { return (1.0 - q_) * std::pow(q_, static_cast<double>(k)); }

private:
    double q_, log_q_, log_1mq_;
};

class PolynomialModel : public TailModel {
public:
    explicit PolynomialModel(double p) : p_(p), log_zeta_(std::log(detail::hurwitz_zeta(p, 1.0))) {}
    double log_tail(long k) const override {
        if (k == -1) return 0.0;
        return std::log(detail::hurwitz_zeta(p_, k + 2.0)) - log_zeta_;
    }
    double log_coeff(long k) const override { return -p_ * std::log(k + 1.0) - log_zeta_; }

private:
    double p_, log_zeta_;
};

class IteratedLogModel : public TailModel {
public:
    IteratedLogModel(int n, double p) : n_(n), p_(p), log_l1_(std::log(detail::iterated_log(n, 1.0))) {}
    double log_tail(long k) const override {
        if (k == -1) return 0.0;
        return (1.0 - p_) * (std::log(detail::iterated_log(n_, k + 2.0)) - log_l1_);
    }

private:
    int n_;
    double p_, log_l1_;
};

// sigma(k) = 1/(k+s)!
class InverseFactorialModel : public TailModel {
public:
    explicit InverseFactorialModel(double s) : s_(s) {}
    double log_tail(long k) const override { return -std::lgamma(k + s_ + 1.0); }
    double log_coeff(long k) const override {
        if (k + s_ - 1.0 <= 0.0) return TailModel::log_coeff(k);
        return std::log(k + s_ - 1.0) - std::lgamma(k + s_ + 1.0);
    }

private:
    double s_;
};

// sigma(k) = sigma(anchor) r^{k - anchor}
class GeometricContinuation : public TailModel {
public:
    GeometricContinuation(long anchor, double log_anchor_tail, double r)
        : anchor_(anchor), log_anchor_(log_anchor_tail), log_r_(std::log(r)), log_1mr_(std::log1p(-r)) {}
    double log_tail(long k) const override { return log_anchor_ + (k - anchor_) * log_r_; }
    double log_coeff(long k) const override { return log_tail(k - 1) + log_1mr_; }

private:
    long anchor_;
    double log_anchor_, log_r_, log_1mr_;
};

class SubordinatedModel : public TailModel {
public:
    SubordinatedModel(CoefficientSequence base, BernsteinFunction phi) : base_(std::move(base)), phi_(std::move(phi)) {}
    double log_tail(long k) const override {
        if (k == -1) return 0.0;
        return phi_.log_phi_of_log(base_.log_tail(k));
    }

private:
    CoefficientSequence base_;
    BernsteinFunction phi_;
};

}  // namespace

CoefficientSequence CoefficientSequence::geometric(double q) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("q ∈ (0,1) required");
    CoefficientSequence c;
    c.family_ = Family::Geometric;
    c.param_ = q;
    c.model_ = std::make_shared<GeometricModel>(q);
    c.build_head_tails();
    return c;
}

CoefficientSequence CoefficientSequence::polynomial(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("p > 1 required");
    CoefficientSequence c;
    c.family_ = Family::Polynomial;
    c.param_ = p;
    c.model_ = std::make_shared<PolynomialModel>(p);
    c.build_head_tails();
    return c;
}

CoefficientSequence CoefficientSequence::iterated_log(int n, double p) {
    if (n < 1) throw DomainError("iterated log depth n >= 1 required");
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("p > 1 required");
    CoefficientSequence c;
    c.family_ = Family::IteratedLog;
    c.param_ = p;
    c.int_param_ = n;
    c.model_ = std::make_shared<IteratedLogModel>(n, p);
    c.build_head_tails();
    return c;
}

CoefficientSequence CoefficientSequence::explicit_list(std::vector<double> head, TailRule rule) {
    CoefficientSequence c;
    c.family_ = Family::Explicit;
    c.head_ = std::move(head);
    c.rule_ = rule;
    switch (rule.kind) {
        case TailRule::Kind::None:
            if (c.head_.empty()) throw DomainError("finitely supported sequence needs at least c_0");
            break;
        case TailRule::Kind::InverseFactorial:
            if (!(rule.param >= 1.0)) throw DomainError("inverse factorial shift >= 1 required");
            c.model_ = std::make_shared<InverseFactorialModel>(rule.param);
            break;
        case TailRule::Kind::Geometric: {
            if (!(rule.param > 0.0 && rule.param < 1.0)) throw DomainError("geometric tail ratio ∈ (0,1) required");
            if (c.head_.empty()) throw DomainError("geometric tail continuation needs a listed head");
            CompensatedSum s;
            for (double x : c.head_) s.add(x);
            double anchor_tail = 1.0 - s.value();
            if (!(anchor_tail > 0.0)) throw DomainError("listed coefficients leave no mass for the tail");
            c.model_ = std::make_shared<GeometricContinuation>(static_cast<long>(c.head_.size()) - 1,
                                                               std::log(anchor_tail), rule.param);
            break;
        }
    }
    c.build_head_tails();
    return c;
}

CoefficientSequence CoefficientSequence::designed(std::vector<double> head, std::shared_ptr<const TailModel> model,
                                                  std::string provenance) {
    if (!model) throw DomainError("designed sequence needs a tail model");
    CoefficientSequence c;
    c.family_ = Family::Designed;
    c.head_ = std::move(head);
    c.model_ = std::move(model);
    c.provenance_ = std::move(provenance);
    c.build_head_tails();
    return c;
}

void CoefficientSequence::build_head_tails() {
    for (double x : head_)
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("c_k >= 0 required");
    if (!head_.empty() && !(head_[0] > 0.0)) throw DomainError("c_0 > 0 required");
    long m = static_cast<long>(head_.size());
    head_tails_.assign(m + 1, 0.0);
    double anchor = model_ ? (m == 0 ? std::exp(model_->log_tail(-1)) : model_->tail(m - 1)) : 0.0;
    // Backward summation from the anchor keeps small tails accurate.
    CompensatedSum s;
    s.add(anchor);
    head_tails_[m] = anchor;
    for (long k = m - 2; k >= -1; --k) {
        s.add(head_[k + 1]);
        head_tails_[k + 1] = s.value();
    }
    if (std::abs(head_tails_[0] - 1.0) > 1e-12) throw DomainError("coefficients must sum to 1");
    head_tails_[0] = 1.0;
    if (model_ && m == 0 && !(model_->log_coeff(0) > kNegInf)) throw DomainError("c_0 > 0 required");
}

std::optional<long> CoefficientSequence::support_end() const {
    if (model_) return std::nullopt;
    long k = static_cast<long>(head_.size()) - 1;
    while (k > 0 && head_[k] == 0.0) --k;
    return k;
}

double CoefficientSequence::coeff(long k) const {
    if (k < 0) throw DomainError("level must be >= 0");
    if (k < static_cast<long>(head_.size())) return head_[k];
    if (!model_) return 0.0;
    return model_->coeff(k);
}

double CoefficientSequence::log_coeff(long k) const {
    if (k < 0) throw DomainError("level must be >= 0");
    if (k < static_cast<long>(head_.size())) return std::log(head_[k]);
    if (!model_) return kNegInf;
    return model_->log_coeff(k);
}

double CoefficientSequence::tail(long k) const {
    if (k < -1) throw DomainError("tail defined for k >= -1");
    if (k + 1 < static_cast<long>(head_tails_.size())) return head_tails_[k + 1];
    if (!model_) return 0.0;
    return model_->tail(k);
}

double CoefficientSequence::log_tail(long k) const {
    if (k < -1) throw DomainError("tail defined for k >= -1");
    if (k + 1 < static_cast<long>(head_tails_.size())) return std::log(head_tails_[k + 1]);
    if (!model_) return kNegInf;
    return model_->log_tail(k);
}

double CoefficientSequence::partial_sum(long k) const { return k < 0 ? 0.0 : 1.0 - tail(k); }

double CoefficientSequence::log_partial_sum(long k) const { return k < 0 ? kNegInf : std::log1p(-tail(k)); }

Model canonical_g() { return {Tower::powers_of_two(), CoefficientSequence::geometric(0.5)}; }

Model canonical_s() {
    return {Tower::factorial(), CoefficientSequence::explicit_list({}, {TailRule::Kind::InverseFactorial, 2.0})};
}

Model canonical_sa() { return {Tower::factorial(), CoefficientSequence::geometric(0.5)}; }

void check_compatible(const CoefficientSequence& c, const Tower& tower) {
    if (!tower.finite()) return;
    auto end = c.support_end();
    if (!end || *end > *tower.top_level())
        throw DomainError("coefficients on a finite tower must be folded to its top level");
}

double log_semigroup_coeff(const CoefficientSequence& c, double t, long k) {
    if (!(t >= 0.0)) throw DomainError("t >= 0 required");
    if (k < 0) throw DomainError("level must be >= 0");
    if (k == 0) return t * c.log_coeff(0);
    double ck = c.coeff(k);
    if (ck == 0.0 || t == 0.0) return kNegInf;
    double sk = c.partial_sum(k);
    // S_{k-1}/S_k = 1 - c_k/S_k
    double inner = t * std::log1p(-ck / sk);
    return t * std::log(sk) + std::log(-std::expm1(inner));
}

double semigroup_coeff(const CoefficientSequence& c, double t, long k) { return std::exp(log_semigroup_coeff(c, t, k)); }

SeriesValue point_mass_series(const CoefficientSequence& c, const Tower& tower, double t, int level,
                              SeriesOptions opts) {
    if (!(t >= 0.0)) throw DomainError("t >= 0 required");
    if (level < 0 || level > tower.max_level()) throw DomainError("level outside the tower");
    check_compatible(c, tower);
    auto end = c.support_end();
    LogSum sum;
    SeriesValue out;
    for (int k = level;; ++k) {
        sum.add(log_semigroup_coeff(c, t, k) - tower.log_volume(k));
        if (end && k >= *end) {
            out.levels_used = k - level + 1;
            break;
        }
        if (k + 1 > tower.max_level()) throw RunawayError("point mass series reached the level cap");
        // Remaining mass 1 - S_k^t spread over sets of volume >= v_{k+1}.
        double log_bound = log1mexp(t * c.log_partial_sum(k)) - tower.log_volume(k + 1);
        if (log_bound <= std::log(opts.tol) + sum.value()) {
            out.tail_bound = std::exp(log_bound);
            out.levels_used = k - level + 1;
            break;
        }
    }
    out.log_value = sum.value();
    out.value = std::exp(out.log_value);
    return out;
}

double point_mass(const CoefficientSequence& c, const Tower& tower, double t, const GroupElement& x,
                  SeriesOptions opts) {
    if (!tower.contains(x)) throw DomainError("element is not in the tower");
    return point_mass_series(c, tower, t, x.min_level(), opts).value;
}

double log_subgroup_escape(const CoefficientSequence& c, const Tower& tower, int n) {
    if (n < 0) throw DomainError("level must be >= 0");
    check_compatible(c, tower);
    double log_sigma = c.log_tail(n);
    if (log_sigma == kNegInf) return kNegInf;
    auto end = c.support_end();
    double log_vn = tower.log_volume(n);
    LogSum x;
    for (int i = n + 1;; ++i) {
        x.add(c.log_coeff(i) + log_vn - tower.log_volume(i));
        if (end && i >= *end) break;
        if (i + 1 > tower.max_level()) throw RunawayError("escape series reached the level cap");
        // Remaining terms: at most sigma(i) v_n / v_{i+1}.
        double rest = c.log_tail(i) + log_vn - tower.log_volume(i + 1);
        if (rest < x.value() - 40.0) break;
    }
    return log_sigma + std::log1p(-std::exp(x.value() - log_sigma));
}

PoissonRates poisson_rates(const CoefficientSequence& c, double pi0, int levels) {
    if (!(pi0 >= 0.0)) throw DomainError("pi_0 >= 0 required");
    if (levels < 0) throw DomainError("levels >= 0 required");
    PoissonRates out;
    out.rates.push_back(pi0);
    for (int k = 1; k <= levels; ++k) out.rates.push_back(std::log1p(c.coeff(k) / c.partial_sum(k - 1)));
    out.total = pi0 - c.log_coeff(0);
    return out;
}

BernsteinFunction bernstein_power(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha ∈ (0,1] required");
    return {"power(" + std::to_string(alpha) + ")", [alpha](double y) { return alpha * y; }};
}

BernsteinFunction bernstein_log(double a) {
    if (!(a > 0.0)) throw DomainError("a > 0 required");
    double norm = std::log(std::log1p(a));
    return {"log(" + std::to_string(a) + ")", [a, norm](double y) {
                if (y == kNegInf) return kNegInf;
                double x = std::log(a) + y;
                // log log1p(e^x), switching to the series once e^x is tiny.
                double ll = x < -30.0 ? x - 0.5 * std::exp(x) : std::log(std::log1p(std::exp(x)));
                return ll - norm;
            }};
}

CoefficientSequence subordinate(const CoefficientSequence& c, const BernsteinFunction& phi) {
    if (c.finite_support()) {
        long end = *c.support_end();
        std::vector<double> head;
        for (long k = 0; k <= end; ++k) {
            double a = std::exp(phi.log_phi_of_log(c.log_tail(k - 1)));
            double b = k == end ? 0.0 : std::exp(phi.log_phi_of_log(c.log_tail(k)));
            head.push_back(a - b);
        }
        return CoefficientSequence::explicit_list(std::move(head));
    }
    return CoefficientSequence::designed({}, std::make_shared<SubordinatedModel>(c, phi), "subordinate:" + phi.name);
}

ConditionA condition_A(const CoefficientSequence& c, int horizon) {
    if (horizon < 4) throw DomainError("horizon >= 4 required");
    ConditionA out;
    out.horizon = horizon;
    if (c.finite_support()) {
        out.lambda = kInf;
        return out;
    }
    double sup_half = 0.0, sup_all = 0.0;
    for (int k = 0; k <= horizon; ++k) {
        double tk = c.tail(k);
        double r = tk > 1e-290 ? c.coeff(k) / tk : std::exp(c.log_coeff(k) - c.log_tail(k));
        sup_all = std::max(sup_all, r);
        if (k <= horizon / 2) sup_half = sup_all;
    }
    out.lambda = sup_all;
    out.holds = sup_all <= sup_half * (1.0 + 1e-12);
    return out;
}

}  // namespace ultrawalk
