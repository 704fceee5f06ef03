#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ultrawalk/measure.hpp"
#include "ultrawalk/tower.hpp"

// Brute-force ground truth on a finite group G = G_K.
namespace ultrawalk {

// G_K enumerated in mixed radix: index i = sum_p e_p w_p with digit e_p in
// [0, r_{p+1}) and w_p = v_p. Then G_k = {i < v_k} and min_level(i) is the
// smallest k with i < v_k. Digit towers add digitwise. On the factorial tower
// the digits are a transposition code: starting from the identity array,
// position p is swapped with position p - e_p for p = 1..K.
class FiniteGroup {
public:
    // Finite tower with at most 2^22 elements; at most S_16 on the factorial tower.
    explicit FiniteGroup(const Tower& tower);

    std::size_t size() const { return size_; }
    int top_level() const { return top_; }
    const Tower& tower() const { return tower_; }
    // v_k as an index bound.
    std::uint32_t volume(int k) const { return vol_.at(k); }

    std::uint32_t identity() const { return 0; }
    std::uint32_t multiply(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t inverse(std::uint32_t a) const { return inv_[a]; }
    int min_level(std::uint32_t a) const { return level_[a]; }

    GroupElement element(std::uint32_t i) const;
    std::uint32_t index_of(const GroupElement& x) const;

private:
    std::uint32_t multiply_slow(std::uint32_t a, std::uint32_t b) const;
    std::vector<std::uint32_t> perm_of(std::uint32_t i) const;
    std::uint32_t index_of_perm(std::vector<std::uint32_t> perm) const;
    std::uint32_t rank_perm(const std::uint32_t* perm) const;

    Tower tower_;
    int top_ = 0;
    std::size_t size_ = 0;
    bool xor_group_ = false;
    bool perms_ = false;
    std::vector<std::uint32_t> radix_;  // r_{p+1} for digit p
    std::vector<std::uint32_t> vol_;    // v_0..v_K
    std::vector<std::uint32_t> inv_;
    std::vector<int> level_;
    // Product table for permutation groups up to 5040 elements.
    std::vector<std::uint16_t> table_;
};

// A function on G_K as a vector indexed by the enumeration. Probability
// measures are non-negative with sum 1 within 1e-13 (see is_probability).
template <class Scalar = double>
struct DenseDistribution {
    std::shared_ptr<const FiniteGroup> group;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p;

    bool is_probability(double tol = 1e-13) const {
        if ((p.array() < Scalar(0)).any()) return false;
        return std::abs(static_cast<double>(p.sum()) - 1.0) <= tol;
    }
};
using Dense = DenseDistribution<double>;

Dense dense_delta(std::shared_ptr<const FiniteGroup> g, std::uint32_t x);
// m_{G_k}.
Dense dense_uniform(std::shared_ptr<const FiniteGroup> g, int k);
// sum_k a_k m_{G_k} for k = 0..K; levels past the list carry 0.
Dense dense_combination(std::shared_ptr<const FiniteGroup> g, const std::vector<double>& a);
// mu_t = sum_k C_k(t) m_{G_k}; c must be finitely supported on G_K.
Dense dense_measure(std::shared_ptr<const FiniteGroup> g, const CoefficientSequence& c, double t = 1.0);
// Inverse of dense_combination: a_k with f = sum a_k m_{G_k}. Throws unless
// f is constant on each shell G_k \ G_{k-1} to within tol.
std::vector<double> shell_coefficients(const Dense& f, double tol = 1e-13);

// (a*b)(x) = sum_y a(y) b(y^{-1} x).
Dense convolve(const Dense& a, const Dense& b);
// mu^{*n} for n >= 1, all powers 1..n.
std::vector<Dense> convolution_powers(const Dense& mu, int n);

// Dirichlet problem on finite U: P_U f = 1_U ((1_U f) * mu), lambda_1(U) =
// 1 - ||P_U||. Power iteration on (I + P_U)/2 to residual 1e-12.
struct Lambda1 {
    double value = 0.0;
    double residual = 0.0;
    int iterations = 0;
};
Lambda1 dirichlet_lambda1(const Eigen::MatrixXd& P_U, int max_iterations = 100000);
// U as indices of G_K with mu dense on G_K.
Lambda1 dirichlet_lambda1(const std::vector<std::uint32_t>& U, const Dense& mu);
// U inside an infinite tower with the exact single-step measure of c.
Lambda1 dirichlet_lambda1(const std::vector<GroupElement>& U, const CoefficientSequence& c, const Tower& tower);

// f_{k,a} = (P_k - P_{k+1}) delta_a = 1_{a G_k}/v_k - 1_{a G_{k+1}}/v_{k+1}.
Eigen::VectorXd eigenfunction(const FiniteGroup& g, int k, std::uint32_t a);
// ||(-Delta) f - sigma f||_2 / ||f||_2 for f = f_{k,a}, -Delta f = f - f * mu.
double verify_eigenfunction(const Dense& mu, double sigma_k, int k, std::uint32_t a);

// Folds sigma(K) into level K: c'_k = c_k for k < K, c'_K = c_K + sigma(K).
CoefficientSequence fold_truncation(const CoefficientSequence& c, int K);
// 0 <= p'(n) - p(n) <= (1 - S_K^n) / v_K for the folded return probability p'.
double fold_error_bound(const CoefficientSequence& c, const Tower& tower, int K, double n);

// One line of the validation report.
struct OracleCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};
// Oracle comparisons on the default fixtures: CFG-G folded at K = 10 and
// the factorial tower folded at K = 6.
std::vector<OracleCheck> oracle_suite();

}  // namespace ultrawalk
