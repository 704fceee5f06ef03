#pragma once

#include <cstdint>
#include <vector>

#include "ultrawalk/measure.hpp"
#include "ultrawalk/tower.hpp"

namespace ultrawalk {

// Level k of one step: P(k) = c_k. Inverse CDF on the tails, k = min{k : sigma(k) < u}.
int sample_level(const CoefficientSequence& c, const Tower& tower, Rng& rng);
// One step of the walk: uniform on G_k with k drawn as above.
GroupElement sample_step(const CoefficientSequence& c, const Tower& tower, Rng& rng);

// Radius of X from e: 0 at the identity, r_j = 1/sigma(j-1) - 1 at min_level j.
double radius_of_level(const CoefficientSequence& c, int level);

struct WalkTrace {
    std::uint64_t seed = 0;
    long steps = 0;
    // min_level and radius of X(m) for m = 1..steps.
    std::vector<int> min_level;
    std::vector<double> rho;
};

// X(n) = Y_1 ... Y_n. Walk w of a batch with seed s uses stream (s, w); a
// single walk is walk 0.
WalkTrace run_walk(const CoefficientSequence& c, const Tower& tower, long n, std::uint64_t seed);

// Continuous time: J ~ Poisson(pi t) jumps, level k with probability pi_k / pi,
// so that X(t) has law mu_t. pi_0 > 0 is the free rate at the identity.
GroupElement run_walk_continuous(const CoefficientSequence& c, const Tower& tower, double t, std::uint64_t seed,
                                 std::uint64_t walk = 0, double pi0 = 1.0);

struct MonteCarloOptions {
    std::uint64_t walks = 100000;
    std::uint64_t seed = 1;
    // 0 picks the hardware concurrency. Results do not depend on it.
    unsigned threads = 0;
};

// counts[i][j]: walks whose X(times[i]) has min_level j.
struct LevelHistogram {
    std::vector<long> times;
    std::vector<std::vector<std::uint64_t>> counts;
    std::uint64_t walks = 0;
    std::uint64_t seed = 0;

    double frequency(std::size_t i, int level) const;
    // Fraction of walks outside G_k at times[i].
    double exit_frequency(std::size_t i, int k) const;
};
LevelHistogram simulate_levels(const CoefficientSequence& c, const Tower& tower, std::vector<long> times,
                               const MonteCarloOptions& opts);

// Binomial estimate with its standard error.
struct Proportion {
    double p = 0.0;
    double se = 0.0;
    std::uint64_t trials = 0;
};
Proportion proportion(std::uint64_t hits, std::uint64_t trials);

// mu_n(G \ G_k) = sum_{l>k} C_l(n) (1 - v_k/v_l).
struct ExitMass {
    double exact = 0.0;
    // Bound on the omitted part of the series.
    double tail_bound = 0.0;
    // 1 - (1 - sigma(k))^n.
    double proxy = 0.0;
    // min(n / r_{k+1}, 1).
    double envelope = 0.0;
};
ExitMass exact_exit_mass(const CoefficientSequence& c, const Tower& tower, double n, int k, double tol = 1e-15);
// P(min_level(X(n)) = j).
double exact_level_mass(const CoefficientSequence& c, const Tower& tower, double n, int j);

enum class DisplacementMode { Exact, MonteCarlo };

// M_X(alpha, n) = E rho(e, X(n))^alpha.
struct Displacement {
    // Infinite for alpha >= 1.
    bool divergent = false;
    double value = 0.0;
    // Exact mode: bound on the omitted shells. Certified for geometric and
    // finitely supported sequences; a ratio extrapolation otherwise.
    double tail_bound = 0.0;
    bool certified = true;
    // Monte-Carlo mode: standard error over the walks.
    double se = 0.0;
    std::uint64_t walks = 0;
};
Displacement mean_displacement(const CoefficientSequence& c, const Tower& tower, double alpha, double n,
                               DisplacementMode mode, const MonteCarloOptions& mc = {});

// Realized constants of M_X(alpha, n) (1 - alpha) / n^alpha over a grid.
struct DisplacementBand {
    double lower = kInf;
    double upper = 0.0;
    double ratio() const { return upper / lower; }
};
DisplacementBand displacement_band(const CoefficientSequence& c, const Tower& tower, const std::vector<double>& alphas,
                                   const std::vector<double>& ns);

}  // namespace ultrawalk
