#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ultrawalk/core.hpp"
#include "ultrawalk/tower.hpp"

namespace ultrawalk {

enum class Family { Geometric, Polynomial, IteratedLog, Explicit, Designed };

std::string family_name(Family f);

// Closed-form tail sigma(k) beyond an explicit head.
class TailModel {
public:
    virtual ~TailModel() = default;
    virtual double log_tail(long k) const = 0;
    virtual double tail(long k) const { return std::exp(log_tail(k)); }
    // sigma(k-1) - sigma(k), computed without cancellation where possible.
    virtual double log_coeff(long k) const;
    virtual double coeff(long k) const { return std::exp(log_coeff(k)); }
};

// Tail continuation for explicit coefficient lists.
struct TailRule {
    enum class Kind { None, InverseFactorial, Geometric };
    Kind kind = Kind::None;
    // shift s for sigma(k) = 1/(k+s)!, ratio for geometric continuation.
    double param = 0.0;
};

// c_0, c_1, ... >= 0 with c_0 > 0 and sum 1.
// Tails sigma(k) = sum_{i>k} c_i with sigma(-1) = 1.
class CoefficientSequence {
public:
    // c_k = (1-q) q^k, sigma(k) = q^{k+1}.
    static CoefficientSequence geometric(double q);
    // c_k = (k+1)^{-p} / zeta(p).
    static CoefficientSequence polynomial(double p);
    // sigma(k) = (l_n(k+2) / l_n(1))^{1-p}, l_1(x) = log(1+x), l_{j+1} = l_1 o l_j.
    static CoefficientSequence iterated_log(int n, double p);
    // c_0..c_{m-1} listed, continued by the rule for k >= m.
    static CoefficientSequence explicit_list(std::vector<double> head, TailRule rule = {});
    // c_0..c_{m-1} listed, continued by the model for k >= m.
    static CoefficientSequence designed(std::vector<double> head, std::shared_ptr<const TailModel> model,
                                        std::string provenance);

    Family family() const { return family_; }
    // Family parameters: q; p; (n, p); unused otherwise.
    double param() const { return param_; }
    int int_param() const { return int_param_; }
    const std::vector<double>& head() const { return head_; }
    const TailRule& rule() const { return rule_; }
    const std::string& provenance() const { return provenance_; }

    bool finite_support() const { return !model_; }
    // Last level carrying mass, for finite support.
    std::optional<long> support_end() const;

    double coeff(long k) const;
    double log_coeff(long k) const;
    double tail(long k) const;
    double log_tail(long k) const;
    // S_k = 1 - sigma(k) = sum_{i<=k} c_i.
    double partial_sum(long k) const;
    double log_partial_sum(long k) const;

private:
    CoefficientSequence() = default;
    void build_head_tails();

    Family family_ = Family::Explicit;
    double param_ = 0.0;
    int int_param_ = 0;
    std::vector<double> head_;
    // sigma(k) for k = -1 .. m-1, stored at index k+1.
    std::vector<double> head_tails_;
    TailRule rule_;
    std::shared_ptr<const TailModel> model_;
    std::string provenance_;
};

// Walk model: a tower with a coefficient sequence on it.
struct Model {
    Tower tower;
    CoefficientSequence coeffs;
};

// Powers of two, geometric q = 1/2.
Model canonical_g();
// Factorial tower, sigma(k) = 1/(k+2)!.
Model canonical_s();
// Factorial tower, geometric q = 1/2.
Model canonical_sa();

// Sequences on a finite tower must put no mass above the top level.
void check_compatible(const CoefficientSequence& c, const Tower& tower);

// Coefficient of m_{G_k} in mu_t: S_k^t - S_{k-1}^t, and c_0^t at k = 0.
double semigroup_coeff(const CoefficientSequence& c, double t, long k);
double log_semigroup_coeff(const CoefficientSequence& c, double t, long k);

struct SeriesOptions {
    double tol = kDefaultTol;
};

struct SeriesValue {
    double value = 0.0;
    double log_value = kNegInf;
    // Certified absolute bound on the omitted tail.
    double tail_bound = 0.0;
    int levels_used = 0;
};

// mu_t(x) for x with min_level(x) = level: sum_{n >= level} C_n(t) / v_n.
SeriesValue point_mass_series(const CoefficientSequence& c, const Tower& tower, double t, int level,
                              SeriesOptions opts = {});
double point_mass(const CoefficientSequence& c, const Tower& tower, double t, const GroupElement& x,
                  SeriesOptions opts = {});

// log(1 - mu(G_n)) = log sum_{i>n} c_i (1 - v_n/v_i), evaluated as
// sigma(n) - v_n sum_{i>n} c_i/v_i; the subtracted part is at most sigma(n)/2.
double log_subgroup_escape(const CoefficientSequence& c, const Tower& tower, int n);

// Jump rates pi_k = log(S_k / S_{k-1}) for k >= 1, pi_0 as given.
struct PoissonRates {
    std::vector<double> rates;
    // pi = pi_0 - log c_0.
    double total = 0.0;
};
PoissonRates poisson_rates(const CoefficientSequence& c, double pi0, int levels);

// Bernstein function phi with phi(0) = 0, phi(1) = 1, given in log form.
struct BernsteinFunction {
    std::string name;
    std::function<double(double)> log_phi_of_log;  // log phi(e^y) for y <= 0
};
BernsteinFunction bernstein_power(double alpha);
// phi(s) = log(1 + a s) / log(1 + a).
BernsteinFunction bernstein_log(double a);

// Tails become phi(sigma(k)).
CoefficientSequence subordinate(const CoefficientSequence& c, const BernsteinFunction& phi);

struct ConditionA {
    bool holds = false;
    // sup c_k / sigma(k) over the horizon.
    double lambda = 0.0;
    int horizon = 0;
};
// c_k <= lambda sigma(k). Holds when the running sup stops growing in the
// second half of the horizon.
ConditionA condition_A(const CoefficientSequence& c, int horizon = 2000);

}  // namespace ultrawalk
