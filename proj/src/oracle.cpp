#include "ultrawalk/oracle.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "ultrawalk/profile.hpp"
#include "ultrawalk/spectral.hpp"

namespace ultrawalk {

namespace {

constexpr std::size_t kMaxElements = std::size_t(1) << 22;
constexpr std::size_t kMaxTable = 5040;

template <class F>
void parallel_for(std::size_t n, F f) {
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    if (n < 4096) workers = 1;
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back([&, w] { f(n * w / workers, n * (w + 1) / workers); });
    f(0, n / workers);
    for (auto& t : pool) t.join();
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

}  // namespace

FiniteGroup::FiniteGroup(const Tower& tower) : tower_(tower) {
    if (!tower.finite()) throw DomainError("dense oracle needs a finite tower");
    top_ = *tower.top_level();
    if (tower.volume(top_) > BigInt(kMaxElements)) throw DomainError("G_K has more than 2^22 elements");
    size_ = tower.volume(top_).convert_to<std::size_t>();
    perms_ = tower.base_kind() == TowerKind::Factorial;
    xor_group_ = !perms_;
    for (int k = 0; k <= top_; ++k) vol_.push_back(tower.volume(k).convert_to<std::uint32_t>());
    for (int p = 0; p < top_; ++p) {
        radix_.push_back(static_cast<std::uint32_t>(tower.small_index(p + 1)));
        if (radix_.back() != 2) xor_group_ = false;
    }
    level_.resize(size_);
    for (int k = 0, i = 0; i < static_cast<int>(size_); ++i) {
        while (static_cast<std::uint32_t>(i) >= vol_[k]) ++k;
        level_[i] = k;
    }
    inv_.resize(size_);
    for (std::uint32_t i = 0; i < size_; ++i) {
        if (perms_) {
            auto a = perm_of(i);
            std::vector<std::uint32_t> b(a.size());
            for (std::size_t p = 0; p < a.size(); ++p) b[a[p]] = static_cast<std::uint32_t>(p);
            inv_[i] = index_of_perm(std::move(b));
        } else {
            std::uint32_t out = 0, rest = i;
            for (int p = 0; p < top_; ++p) {
                std::uint32_t d = rest % radix_[p];
                rest /= radix_[p];
                out += ((radix_[p] - d) % radix_[p]) * vol_[p];
            }
            inv_[i] = out;
        }
    }
    if (perms_ && size_ <= kMaxTable) {
        table_.resize(size_ * size_);
        std::vector<std::vector<std::uint32_t>> decoded(size_);
        for (std::uint32_t i = 0; i < size_; ++i) decoded[i] = perm_of(i);
        parallel_for(size_, [&](std::size_t lo, std::size_t hi) {
            std::vector<std::uint32_t> c(top_ + 1);
            for (std::size_t a = lo; a < hi; ++a)
                for (std::size_t b = 0; b < size_; ++b) {
                    for (int p = 0; p <= top_; ++p) c[p] = decoded[a][decoded[b][p]];
                    table_[a * size_ + b] = static_cast<std::uint16_t>(rank_perm(c.data()));
                }
        });
    }
}

std::vector<std::uint32_t> FiniteGroup::perm_of(std::uint32_t i) const {
    std::vector<std::uint32_t> arr(top_ + 1);
    std::iota(arr.begin(), arr.end(), 0u);
    for (int q = 1; q <= top_; ++q) {
        std::uint32_t e = i % radix_[q - 1];
        i /= radix_[q - 1];
        std::swap(arr[q], arr[q - e]);
    }
    return arr;
}

std::uint32_t FiniteGroup::index_of_perm(std::vector<std::uint32_t> arr) const {
    return rank_perm(arr.data());
}

std::uint32_t FiniteGroup::rank_perm(const std::uint32_t* perm) const {
    // Undo the swaps from the top: value q sits at q - e_q after step q.
    std::array<std::uint32_t, 16> arr;
    std::copy(perm, perm + top_ + 1, arr.begin());
    std::uint32_t index = 0;
    for (int q = top_; q >= 1; --q) {
        int pos = q;
        while (arr[pos] != static_cast<std::uint32_t>(q)) --pos;
        index += static_cast<std::uint32_t>(q - pos) * vol_[q - 1];
        std::swap(arr[q], arr[pos]);
    }
    return index;
}

std::uint32_t FiniteGroup::multiply_slow(std::uint32_t a, std::uint32_t b) const {
    if (perms_) {
        auto x = perm_of(a), y = perm_of(b);
        std::vector<std::uint32_t> c(x.size());
        for (std::size_t p = 0; p < c.size(); ++p) c[p] = x[y[p]];
        return index_of_perm(std::move(c));
    }
    std::uint32_t out = 0;
    for (int p = 0; p < top_; ++p) {
        std::uint32_t r = radix_[p];
        out += ((a % r + b % r) % r) * vol_[p];
        a /= r;
        b /= r;
    }
    return out;
}

std::uint32_t FiniteGroup::multiply(std::uint32_t a, std::uint32_t b) const {
    if (xor_group_) return a ^ b;
    if (!table_.empty()) return table_[static_cast<std::size_t>(a) * size_ + b];
    return multiply_slow(a, b);
}

GroupElement FiniteGroup::element(std::uint32_t i) const {
    if (i >= size_) throw DomainError("index outside G_K");
    if (perms_) {
        auto a = perm_of(i);
        return GroupElement::permutation(std::vector<std::uint64_t>(a.begin(), a.end()));
    }
    std::vector<std::uint64_t> d(top_);
    for (int p = 0; p < top_; ++p) {
        d[p] = i % radix_[p];
        i /= radix_[p];
    }
    return GroupElement::digits(std::move(d));
}

std::uint32_t FiniteGroup::index_of(const GroupElement& x) const {
    if (!tower_.contains(x)) throw DomainError("element " + x.to_string() + " is not in G_K");
    const auto& d = x.data();
    if (perms_) {
        std::vector<std::uint32_t> arr(top_ + 1);
        for (std::size_t p = 0; p < arr.size(); ++p) arr[p] = p < d.size() ? static_cast<std::uint32_t>(d[p]) : p;
        return index_of_perm(std::move(arr));
    }
    std::uint32_t out = 0;
    for (std::size_t p = 0; p < d.size(); ++p) out += static_cast<std::uint32_t>(d[p]) * vol_[p];
    return out;
}

Dense dense_delta(std::shared_ptr<const FiniteGroup> g, std::uint32_t x) {
    if (x >= g->size()) throw DomainError("index outside G_K");
    Dense d{g, Eigen::VectorXd::Zero(g->size())};
    d.p[x] = 1.0;
    return d;
}

Dense dense_combination(std::shared_ptr<const FiniteGroup> g, const std::vector<double>& a) {
    const int K = g->top_level();
    if (static_cast<int>(a.size()) > K + 1) throw DomainError("coefficients beyond the top level");
    // Value on the shell of level j: sum_{k >= j} a_k / v_k.
    std::vector<double> shell(K + 2, 0.0);
    for (int k = K; k >= 0; --k) shell[k] = shell[k + 1] + (k < static_cast<int>(a.size()) ? a[k] / g->volume(k) : 0.0);
    Dense d{g, Eigen::VectorXd(g->size())};
    for (std::uint32_t i = 0; i < g->size(); ++i) d.p[i] = shell[g->min_level(i)];
    return d;
}

Dense dense_uniform(std::shared_ptr<const FiniteGroup> g, int k) {
    if (k < 0 || k > g->top_level()) throw DomainError("level outside G_K");
    std::vector<double> a(k + 1, 0.0);
    a[k] = 1.0;
    return dense_combination(std::move(g), a);
}

Dense dense_measure(std::shared_ptr<const FiniteGroup> g, const CoefficientSequence& c, double t) {
    check_compatible(c, g->tower());
    std::vector<double> a(g->top_level() + 1);
    for (int k = 0; k <= g->top_level(); ++k) a[k] = semigroup_coeff(c, t, k);
    return dense_combination(std::move(g), a);
}

std::vector<double> shell_coefficients(const Dense& f, double tol) {
    const auto& g = *f.group;
    const int K = g.top_level();
    std::vector<double> shell(K + 1, 0.0);
    std::vector<bool> seen(K + 1, false);
    for (std::uint32_t i = 0; i < g.size(); ++i) {
        int l = g.min_level(i);
        if (!seen[l]) {
            shell[l] = f.p[i];
            seen[l] = true;
        } else if (std::abs(f.p[i] - shell[l]) > tol) {
            throw DomainError("function is not constant on the shell of level " + std::to_string(l));
        }
    }
    std::vector<double> a(K + 1);
    for (int k = 0; k <= K; ++k) a[k] = g.volume(k) * (shell[k] - (k < K ? shell[k + 1] : 0.0));
    return a;
}

Dense convolve(const Dense& a, const Dense& b) {
    if (a.group != b.group) throw DomainError("convolution of distributions on different enumerations");
    const auto& g = *a.group;
    const std::size_t n = g.size();
    Dense out{a.group, Eigen::VectorXd::Zero(n)};
    std::vector<std::uint32_t> support;
    for (std::uint32_t y = 0; y < n; ++y)
        if (a.p[y] != 0.0) support.push_back(y);
    // out(x) = sum_y a(y) b(y^{-1} x); each worker owns a range of x.
    // Neumaier summation per x, with the compensation kept alongside.
    std::vector<double> comp(n, 0.0);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::uint32_t y : support) {
            const double ay = a.p[y];
            const std::uint32_t yi = g.inverse(y);
            for (std::size_t x = lo; x < hi; ++x) {
                double term = ay * b.p[g.multiply(yi, static_cast<std::uint32_t>(x))];
                double s = out.p[x], t = s + term;
                comp[x] += std::abs(s) >= std::abs(term) ? (s - t) + term : (term - t) + s;
                out.p[x] = t;
            }
        }
    });
    for (std::size_t x = 0; x < n; ++x) out.p[x] += comp[x];
    return out;
}

std::vector<Dense> convolution_powers(const Dense& mu, int n) {
    if (n < 1) throw DomainError("n >= 1 required");
    std::vector<Dense> out{mu};
    for (int i = 2; i <= n; ++i) out.push_back(convolve(out.back(), mu));
    return out;
}

Lambda1 dirichlet_lambda1(const Eigen::MatrixXd& P, int max_iterations) {
    const auto n = P.rows();
    if (n == 0 || P.cols() != n) throw DomainError("U must be finite and nonempty");
    Eigen::VectorXd f = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Lambda1 out;
    for (int it = 1; it <= max_iterations; ++it) {
        Eigen::VectorXd g = 0.5 * (f + P * f);
        double theta = f.dot(g);
        double r = (g - theta * f).norm();
        if (r <= 1e-12) {
            // Top eigenvalue of (I + P_U)/2 is (1 + ||P_U||)/2.
            out.value = 2.0 - 2.0 * theta;
            out.residual = r;
            out.iterations = it;
            return out;
        }
        f = g / g.norm();
    }
    throw RunawayError("power iteration did not reach residual 1e-12");
}

Lambda1 dirichlet_lambda1(const std::vector<std::uint32_t>& U, const Dense& mu) {
    const auto& g = *mu.group;
    const auto n = static_cast<Eigen::Index>(U.size());
    Eigen::MatrixXd P(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) P(i, j) = mu.p[g.multiply(g.inverse(U[j]), U[i])];
    return dirichlet_lambda1(P);
}

Lambda1 dirichlet_lambda1(const std::vector<GroupElement>& U, const CoefficientSequence& c, const Tower& tower) {
    const auto n = static_cast<Eigen::Index>(U.size());
    // mu(x) depends on min_level(x) only.
    std::map<int, double> by_level;
    Eigen::MatrixXd P(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            GroupElement z = tower.multiply(tower.inverse(U[j]), U[i]);
            auto it = by_level.find(z.min_level());
            if (it == by_level.end()) it = by_level.emplace(z.min_level(), point_mass(c, tower, 1.0, z)).first;
            P(i, j) = it->second;
        }
    return dirichlet_lambda1(P);
}

Eigen::VectorXd eigenfunction(const FiniteGroup& g, int k, std::uint32_t a) {
    if (k < 0 || k + 1 > g.top_level()) throw DomainError("k + 1 <= K required");
    Eigen::VectorXd f(g.size());
    const std::uint32_t ai = g.inverse(a);
    for (std::uint32_t x = 0; x < g.size(); ++x) {
        std::uint32_t z = g.multiply(ai, x);
        f[x] = (z < g.volume(k) ? 1.0 / g.volume(k) : 0.0) - (z < g.volume(k + 1) ? 1.0 / g.volume(k + 1) : 0.0);
    }
    return f;
}

double verify_eigenfunction(const Dense& mu, double sigma_k, int k, std::uint32_t a) {
    Dense f{mu.group, eigenfunction(*mu.group, k, a)};
    Dense fm = convolve(f, mu);
    Eigen::VectorXd lap = f.p - fm.p;
    return (lap - sigma_k * f.p).norm() / f.p.norm();
}

CoefficientSequence fold_truncation(const CoefficientSequence& c, int K) {
    if (K < 1) throw DomainError("K >= 1 required");
    std::vector<double> head;
    for (int k = 0; k < K; ++k) head.push_back(c.coeff(k));
    head.push_back(c.tail(K - 1));
    return CoefficientSequence::explicit_list(std::move(head));
}

double fold_error_bound(const CoefficientSequence& c, const Tower& tower, int K, double n) {
    if (K < 1) throw DomainError("K >= 1 required");
    return -std::expm1(n * c.log_partial_sum(K)) * tower.inv_volume(K);
}

std::vector<OracleCheck> oracle_suite() {
    std::vector<OracleCheck> out;
    auto add = [&](std::string name, bool ok, std::string detail) { out.push_back({std::move(name), ok, std::move(detail)}); };

    auto g = canonical_g();
    const int K = 10;
    Tower tk = Tower::truncated(g.tower, K);
    auto cf = fold_truncation(g.coeffs, K);
    auto group = std::make_shared<const FiniteGroup>(tk);
    Dense mu = dense_measure(group, cf);
    auto powers = convolution_powers(mu, 16);
    double ret = 0.0, pm = 0.0;
    for (int n = 1; n <= 16; ++n) {
        ret = std::max(ret, std::abs(powers[n - 1].p[0] - return_probability(cf, tk, n)));
        std::map<int, double> lv;
        for (std::uint32_t x = 0; x < group->size(); ++x) {
            int l = group->min_level(x);
            if (!lv.count(l)) lv[l] = point_mass(cf, tk, n, group->element(x));
            pm = std::max(pm, std::abs(powers[n - 1].p[x] - lv[l]));
        }
    }
    add("return probability vs dense convolution (Z(2), K=10, n<=16)", ret <= 1e-12, "max |diff| " + fmt(ret));
    add("point mass vs dense convolution (Z(2), K=10, n<=16)", pm <= 1e-12, "max |diff| " + fmt(pm));

    Dense half = dense_measure(group, cf, 0.5);
    auto a = shell_coefficients(convolve(half, half));
    double sg = 0.0;
    for (int k = 0; k <= K; ++k) sg = std::max(sg, std::abs(a[k] - cf.coeff(k)));
    add("semigroup mu_0.5 * mu_0.5 = mu_1", sg <= 1e-12, "max coefficient diff " + fmt(sg));

    std::vector<std::uint32_t> g1{0, 1};
    auto l1 = dirichlet_lambda1(g1, mu);
    double folded = lambda1_subgroup(cf, tk, 1);
    add("lambda_1(G_1) by power iteration", std::abs(l1.value - folded) <= 1e-10 && std::abs(l1.value - 1.0 / 6) <= 1e-6,
        "value " + fmt(l1.value) + ", folded closed form diff " + fmt(std::abs(l1.value - folded)));

    double eig = 0.0;
    for (int k = 0; k < K; ++k)
        for (std::uint32_t x : {0u, 5u, 1000u}) eig = std::max(eig, verify_eigenfunction(mu, cf.tail(k), k, x));
    add("eigenfunctions f_{k,a}", eig <= 1e-12, "max residual " + fmt(eig));

    auto s = canonical_s();
    const int Ks = 6;
    Tower ts = Tower::truncated(s.tower, Ks);
    auto sf = fold_truncation(s.coeffs, Ks);
    auto sgroup = std::make_shared<const FiniteGroup>(ts);
    auto spow = convolution_powers(dense_measure(sgroup, sf), 16);
    double sret = 0.0;
    for (int n = 1; n <= 16; ++n) sret = std::max(sret, std::abs(spow[n - 1].p[0] - return_probability(sf, ts, n)));
    add("return probability vs dense convolution (S_7, n<=16)", sret <= 1e-12, "max |diff| " + fmt(sret));

    Rng rng = derived_stream(2024, 0);
    int violations = 0;
    double margin = kInf;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint32_t> idx(64);
        std::iota(idx.begin(), idx.end(), 0u);
        std::size_t m = 1 + uniform_below(rng, 64);
        for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + uniform_below(rng, 64 - i)]);
        std::vector<GroupElement> U;
        for (std::size_t i = 0; i < m; ++i) U.push_back(group->element(idx[i]));
        double lam = dirichlet_lambda1(U, g.coeffs, g.tower).value;
        double t = T_of(g.coeffs, g.tower, static_cast<double>(m));
        margin = std::min(margin, lam - t);
        if (lam < t - 1e-12) ++violations;
    }
    add("Faber-Krahn on 200 random U in G_6", violations == 0,
        std::to_string(violations) + " violations, min lambda_1 - T " + fmt(margin));
    return out;
}

}  // namespace ultrawalk
