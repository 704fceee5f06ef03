#include "ultrawalk/walk_sim.hpp"

#include <algorithm>
#include <optional>
#include <thread>

#include "ultrawalk/metric.hpp"

namespace ultrawalk {

namespace {

// Smallest k >= 1 with pred(k), pred monotone; pred(max_level) must hold.
template <class Pred>
int first_level(const Tower& tower, Pred pred) {
    int lo = 0, hi = 1;
    const int top = tower.max_level();
    while (!pred(hi)) {
        if (hi >= top) throw RunawayError("sampled level exceeds the level cap");
        lo = hi;
        hi = std::min(top, 2 * hi);
    }
    // pred(lo) false (or lo = 0), pred(hi) true.
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::uint64_t poisson(Rng& rng, double mean) {
    // Inversion in chunks of mean <= 500 so e^{-mean} stays representable.
    std::uint64_t total = 0;
    while (mean > 0.0) {
        double m = std::min(mean, 500.0);
        mean -= m;
        double u = uniform01(rng);
        double p = std::exp(-m), cdf = p;
        std::uint64_t j = 0;
        while (u > cdf && p > 0.0) {
            ++j;
            p *= m / static_cast<double>(j);
            cdf += p;
        }
        total += j;
    }
    return total;
}

unsigned worker_count(unsigned requested, std::uint64_t walks) {
    unsigned t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::uint64_t>(t, std::max<std::uint64_t>(walks, 1)));
}

// Bound on n sum_{k>K} sigma(k)^{1-alpha} for sigma(k) = q^{k+1}, in log form.
double log_geometric_displacement_tail(double q, double alpha, double n, int K) {
    double e = 1.0 - alpha;
    return std::log(n) + e * (K + 2) * std::log(q) - std::log(-std::expm1(e * std::log(q)));
}

}  // namespace

int sample_level(const CoefficientSequence& c, const Tower& tower, Rng& rng) {
    double lu = std::log(uniform_open01(rng));
    if (c.log_tail(0) < lu) return 0;
    int k;
    if (c.family() == Family::Geometric) {
        // sigma(k) = q^{k+1} < u  <=>  k >= floor(log u / log q).
        double x = lu / std::log(c.param());
        if (x >= tower.max_level()) throw RunawayError("sampled level exceeds the level cap");
        k = static_cast<int>(std::floor(x));
        // Guard the boundary against rounding in the closed form.
        while (k > 0 && c.log_tail(k - 1) < lu) --k;
        while (!(c.log_tail(k) < lu)) ++k;
    } else {
        k = first_level(tower, [&](int j) { return c.log_tail(j) < lu; });
    }
    if (k > tower.max_level()) throw RunawayError("sampled level exceeds the level cap");
    return k;
}

GroupElement sample_step(const CoefficientSequence& c, const Tower& tower, Rng& rng) {
    int k = sample_level(c, tower, rng);
    return tower.sample_uniform(k, rng);
}

double radius_of_level(const CoefficientSequence& c, int level) { return level_radius(c, level); }

WalkTrace run_walk(const CoefficientSequence& c, const Tower& tower, long n, std::uint64_t seed) {
    if (n < 1) throw DomainError("n >= 1 required");
    check_compatible(c, tower);
    Rng rng = derived_stream(seed, 0);
    WalkTrace tr;
    tr.seed = seed;
    tr.steps = n;
    tr.min_level.reserve(n);
    tr.rho.reserve(n);
    GroupElement x = tower.identity();
    for (long m = 0; m < n; ++m) {
        x = tower.multiply(x, sample_step(c, tower, rng));
        int lv = x.min_level();
        tr.min_level.push_back(lv);
        tr.rho.push_back(radius_of_level(c, lv));
    }
    return tr;
}

GroupElement run_walk_continuous(const CoefficientSequence& c, const Tower& tower, double t, std::uint64_t seed,
                                 std::uint64_t walk, double pi0) {
    if (!(t >= 0.0)) throw DomainError("t >= 0 required");
    if (!(pi0 > 0.0)) throw DomainError("pi_0 > 0 required");
    check_compatible(c, tower);
    Rng rng = derived_stream(seed, walk);
    // pi_0 + ... + pi_k = pi_0 + log S_k - log c_0.
    const double lc0 = c.log_coeff(0);
    const double pi = pi0 - lc0;
    std::uint64_t jumps = poisson(rng, pi * t);
    GroupElement x = tower.identity();
    for (std::uint64_t j = 0; j < jumps; ++j) {
        double y = uniform_open01(rng) * pi;
        int k = 0;
        if (y > pi0) {
            double target = y - pi0 + lc0;
            k = first_level(tower, [&](int i) { return c.log_partial_sum(i) >= target; });
        }
        x = tower.multiply(x, tower.sample_uniform(k, rng));
    }
    return x;
}

double LevelHistogram::frequency(std::size_t i, int level) const {
    const auto& row = counts.at(i);
    if (level < 0 || level >= static_cast<int>(row.size())) return 0.0;
    return static_cast<double>(row[level]) / static_cast<double>(walks);
}

double LevelHistogram::exit_frequency(std::size_t i, int k) const {
    const auto& row = counts.at(i);
    std::uint64_t out = 0;
    for (std::size_t j = static_cast<std::size_t>(std::max(k, -1) + 1); j < row.size(); ++j) out += row[j];
    return static_cast<double>(out) / static_cast<double>(walks);
}

LevelHistogram simulate_levels(const CoefficientSequence& c, const Tower& tower, std::vector<long> times,
                               const MonteCarloOptions& opts) {
    if (times.empty()) throw DomainError("at least one time required");
    if (opts.walks == 0) throw DomainError("walks >= 1 required");
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    if (times.front() < 1) throw DomainError("times must be >= 1");
    check_compatible(c, tower);

    using Counts = std::vector<std::vector<std::uint64_t>>;
    const unsigned workers = worker_count(opts.threads, opts.walks);
    std::vector<Counts> partial(workers, Counts(times.size()));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            Counts& local = partial[w];
            // Contiguous block of walk indices; each walk has its own stream.
            std::uint64_t begin = opts.walks * w / workers, end = opts.walks * (w + 1) / workers;
            for (std::uint64_t walk = begin; walk < end; ++walk) {
                Rng rng = derived_stream(opts.seed, walk);
                GroupElement x = tower.identity();
                std::size_t next = 0;
                for (long m = 1; m <= times.back(); ++m) {
                    x = tower.multiply(x, sample_step(c, tower, rng));
                    if (m == times[next]) {
                        auto& row = local[next];
                        std::size_t lv = static_cast<std::size_t>(x.min_level());
                        if (row.size() <= lv) row.resize(lv + 1, 0);
                        ++row[lv];
                        ++next;
                    }
                }
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    LevelHistogram h;
    h.times = times;
    h.walks = opts.walks;
    h.seed = opts.seed;
    h.counts.assign(times.size(), {});
    for (const auto& local : partial) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            auto& row = h.counts[i];
            if (row.size() < local[i].size()) row.resize(local[i].size(), 0);
            for (std::size_t j = 0; j < local[i].size(); ++j) row[j] += local[i][j];
        }
    }
    return h;
}

Proportion proportion(std::uint64_t hits, std::uint64_t trials) {
    if (trials == 0) throw DomainError("trials >= 1 required");
    Proportion p;
    p.trials = trials;
    p.p = static_cast<double>(hits) / static_cast<double>(trials);
    p.se = std::sqrt(p.p * (1.0 - p.p) / static_cast<double>(trials));
    return p;
}

ExitMass exact_exit_mass(const CoefficientSequence& c, const Tower& tower, double n, int k, double tol) {
    if (!(n >= 1.0)) throw DomainError("n >= 1 required");
    if (k < 0) throw DomainError("k >= 0 required");
    check_compatible(c, tower);
    ExitMass out;
    const double sigma = c.tail(k);
    double r = level_radius(c, k + 1);
    out.envelope = sigma == 0.0 ? 0.0 : std::min(n / r, 1.0);
    // 1 - S_k^n = sum_{l>k} C_l(n).
    double a = -std::expm1(n * c.log_partial_sum(k));
    out.proxy = a;
    if (a == 0.0 || (tower.finite() && k >= *tower.top_level())) return out;
    const double lvk = tower.log_volume(k);
    CompensatedSum b;
    auto end = c.support_end();
    for (int l = k + 1;; ++l) {
        b.add(std::exp(log_semigroup_coeff(c, n, l) + lvk - tower.log_volume(l)));
        if ((end && l >= *end) || (tower.finite() && l >= *tower.top_level())) break;
        if (l + 1 > tower.max_level()) throw RunawayError("exit mass series reached the level cap");
        // sum_{i>l} C_i(n) v_k/v_i <= (1 - S_l^n) v_k / v_{l+1}.
        double bound = std::exp(log1mexp(n * c.log_partial_sum(l)) + lvk - tower.log_volume(l + 1));
        if (bound <= tol * (a - b.value())) {
            out.tail_bound = bound;
            break;
        }
    }
    out.exact = a - b.value();
    return out;
}

double exact_level_mass(const CoefficientSequence& c, const Tower& tower, double n, int j) {
    if (j < 0) throw DomainError("level must be >= 0");
    double above = exact_exit_mass(c, tower, n, j).exact;
    double below = j == 0 ? 1.0 : exact_exit_mass(c, tower, n, j - 1).exact;
    return below - above;
}

Displacement mean_displacement(const CoefficientSequence& c, const Tower& tower, double alpha, double n,
                               DisplacementMode mode, const MonteCarloOptions& mc) {
    if (!(alpha > 0.0)) throw DomainError("alpha > 0 required");
    if (!(n >= 1.0)) throw DomainError("n >= 1 required");
    check_compatible(c, tower);
    Displacement d;
    // Finite support keeps rho bounded, so every moment is finite.
    const bool bounded = c.finite_support() || tower.finite();
    if (alpha >= 1.0 && !bounded) {
        d.divergent = true;
        d.value = kInf;
        return d;
    }
    if (mode == DisplacementMode::MonteCarlo) {
        if (std::floor(n) != n) throw DomainError("Monte-Carlo displacement needs integer n");
        auto h = simulate_levels(c, tower, {static_cast<long>(n)}, mc);
        CompensatedSum s1, s2;
        const auto& row = h.counts[0];
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!row[j]) continue;
            double w = std::pow(radius_of_level(c, static_cast<int>(j)), alpha);
            s1.add(w * static_cast<double>(row[j]));
            s2.add(w * w * static_cast<double>(row[j]));
        }
        double m = static_cast<double>(h.walks);
        d.value = s1.value() / m;
        double var = std::max(0.0, s2.value() / m - d.value * d.value);
        d.se = std::sqrt(var / m);
        d.walks = h.walks;
        return d;
    }

    // Summation by parts: sum_k r_{k+1}^a (E_k - E_{k+1}) = sum_k (r_{k+1}^a - r_k^a) E_k, r_0 = 0.
    const double tol = 1e-12;
    auto end = c.support_end();
    std::optional<int> top;
    if (end) top = static_cast<int>(*end);
    if (tower.finite()) top = top ? std::min(*top, *tower.top_level()) : *tower.top_level();
    CompensatedSum sum;
    double prev_lr = kNegInf, prev_bound = 0.0;
    for (int k = 0;; ++k) {
        if (top && k >= *top) break;  // E_k = 0 from the top level on.
        double lr = log_level_radius(c, k + 1);
        double dr = std::exp(alpha * lr) * -std::expm1(alpha * (prev_lr - lr));
        double e = exact_exit_mass(c, tower, n, k).exact;
        sum.add(dr * e);
        prev_lr = lr;
        double m = sum.value();
        if (c.family() == Family::Geometric) {
            double lb = log_geometric_displacement_tail(c.param(), alpha, n, k);
            if (lb <= std::log(tol * m)) {
                d.tail_bound = std::exp(lb);
                break;
            }
        } else {
            // Term bound n (r_{k+1}^a - r_k^a) sigma(k), extrapolated geometrically.
            double b = n * dr * c.tail(k);
            if (k > 0 && prev_bound > 0.0 && b < prev_bound) {
                double ratio = b / prev_bound;
                double est = b * ratio / (1.0 - ratio);
                if (est <= tol * m) {
                    d.tail_bound = est;
                    d.certified = false;
                    break;
                }
            }
            prev_bound = b;
        }
        if (k + 1 >= tower.max_level()) {
            // Level cap: report the remaining bound instead of a converged value.
            d.certified = c.family() == Family::Geometric;
            d.tail_bound = c.family() == Family::Geometric
                               ? std::exp(log_geometric_displacement_tail(c.param(), alpha, n, k))
                               : kInf;
            break;
        }
    }
    d.value = sum.value();
    return d;
}

DisplacementBand displacement_band(const CoefficientSequence& c, const Tower& tower, const std::vector<double>& alphas,
                                   const std::vector<double>& ns) {
    DisplacementBand band;
    for (double a : alphas) {
        if (!(a < 1.0)) throw DomainError("band needs alpha < 1");
        for (double n : ns) {
            auto d = mean_displacement(c, tower, a, n, DisplacementMode::Exact);
            double v = d.value * (1.0 - a) / std::pow(n, a);
            band.lower = std::min(band.lower, v);
            band.upper = std::max(band.upper, v);
        }
    }
    return band;
}

}  // namespace ultrawalk
