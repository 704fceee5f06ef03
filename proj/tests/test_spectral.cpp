#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ultrawalk/metric.hpp"
#include "ultrawalk/spectral.hpp"

using namespace ultrawalk;
using doctest::Approx;

TEST_CASE("step spectral distribution") {
    auto m = canonical_g();
    StepSpectralDistribution N(m.coeffs, m.tower);
    CHECK(N.N_at(0.125) == 0.25);
    CHECK(N.N_at(0.3) == 0.5);
    CHECK(N.N_at(1.0) == 1.0);
    CHECK(N.N_at(0.5) == 1.0);
    CHECK(N.N_at(0.0) == 0.0);
    CHECK(N.N_at(-1.0) == 0.0);
    CHECK(N.N_left(0.125) == 0.125);
    CHECK(N.N_left(0.5) == 0.5);
    CHECK(N.N_inverse(0.25) == 0.125);
    CHECK(N.N_inverse(0.3) == 0.25);
    CHECK(N.N_inverse(1.0) == 0.5);
    CHECK_THROWS_AS(N.N_inverse(0.0), DomainError);
    CHECK_THROWS_AS(N.N_inverse(1.5), DomainError);
    CHECK(N.log_N_at_log(-1000.0 * std::log(2.0)) == Approx(-999.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("N takes value 1/v_k at sigma(k)") {
    for (const auto& m : {canonical_g(), canonical_s(), canonical_sa()}) {
        StepSpectralDistribution N(m.coeffs, m.tower);
        for (int k = 0; k < 25; ++k) {
            double s = m.coeffs.tail(k);
            CHECK(N.N_at(s) * m.tower.volume(k).convert_to<double>() == Approx(1.0).epsilon(1e-14));
            CHECK(N.N_left(s) * m.tower.volume(k + 1).convert_to<double>() == Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("N is non-decreasing and right-continuous") {
    auto m = canonical_s();
    StepSpectralDistribution N(m.coeffs, m.tower);
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(-30.0, 0.5);
    for (int trial = 0; trial < 500; ++trial) {
        double a = std::exp(u(gen)), b = std::exp(u(gen));
        if (a > b) std::swap(a, b);
        CHECK(N.N_at(a) <= N.N_at(b));
        CHECK(N.N_left(a) <= N.N_at(a));
        CHECK(N.N_at(std::nextafter(a, 1.0)) == N.N_at(a));
    }
}

TEST_CASE("spectrum points") {
    auto g = spectrum_points(canonical_g().coeffs, 2);
    CHECK(g == std::vector<double>{0.5, 0.25, 0.125});
    auto s = spectrum_points(canonical_s().coeffs, 1);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == Approx(0.5).epsilon(1e-15));
    CHECK(s[1] == Approx(1.0 / 6).epsilon(1e-14));
    auto c = CoefficientSequence::polynomial(2.0);
    REQUIRE(spectrum_points(c, 0).size() == 1);
    CHECK(spectrum_points(c, 0)[0] == Approx(1.0 - c.coeff(0)).epsilon(1e-15));
    CHECK_THROWS_AS(spectrum_points(c, -1), DomainError);
}

TEST_CASE("return probability") {
    auto m = canonical_g();
    CHECK(return_probability(m.coeffs, m.tower, 1.0) == Approx(2.0 / 3).epsilon(1e-14));
    CHECK(return_probability(m.coeffs, m.tower, 2.0) == Approx(10.0 / 21).epsilon(1e-14));
    for (double t = 1e3; t <= 1e6; t *= 1.7) {
        double pt = return_probability(m.coeffs, m.tower, t) * t;
        CHECK(pt >= 0.5);
        CHECK(pt <= 2.5);
    }
    Eigen::VectorXd ts(3);
    ts << 1.0, 2.0, 4.0;
    Eigen::VectorXd ps = return_probability(m.coeffs, m.tower, ts);
    CHECK(ps(1) == Approx(10.0 / 21).epsilon(1e-14));
    CHECK(ps(2) < ps(1));
    CHECK(decay_rate(m.coeffs, m.tower, 1e4) <= 1e-2);
    CHECK_THROWS_AS(decay_rate(m.coeffs, m.tower, 0.0), DomainError);
}

TEST_CASE("decay rate of polynomial coefficients") {
    const double p = 2.0;
    auto c = CoefficientSequence::polynomial(p);
    auto tower = Tower::powers_of_two();
    double lo = kInf, hi = 0.0;
    for (double t = 10.0; t <= 1e7; t *= 10.0) {
        double x = decay_rate(c, tower, t) * std::pow(t, (p - 1.0) / p);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo > 0.0);
    CHECK(hi / lo < 3.0);
}

TEST_CASE("log p is convex") {
    for (const auto& m : {canonical_g(), canonical_s(), canonical_sa()}) {
        std::vector<double> lp;
        for (double t = 0.5; t < 1e5; t *= 1.25) lp.push_back(log_return_probability(m.coeffs, m.tower, t));
        // On a geometric grid, convexity in t means the secant slopes increase.
        double t = 0.5;
        for (std::size_t i = 0; i + 2 < lp.size(); ++i, t *= 1.25) {
            double s1 = (lp[i + 1] - lp[i]) / (0.25 * t);
            double s2 = (lp[i + 2] - lp[i + 1]) / (0.25 * 1.25 * t);
            CHECK(s2 >= s1 - 1e-12 * std::abs(s1));
        }
    }
}

TEST_CASE("heat kernel") {
    auto m = canonical_g();
    CHECK(heat_kernel(m.coeffs, m.tower, 1.0, 3.0) == Approx(1.0 / 24).epsilon(1e-14));
    CHECK(heat_kernel(m.coeffs, m.tower, 5.0, 0.0) == return_probability(m.coeffs, m.tower, 5.0));
    CHECK_THROWS_AS(heat_kernel(m.coeffs, m.tower, 1.0, 2.5), DomainError);
    for (double t : {1.0, 7.0, 300.0}) {
        double prev = kInf;
        for (int k = 0; k < 30; ++k) {
            double h = heat_kernel(m.coeffs, m.tower, t, level_radius(m.coeffs, k));
            CHECK(h <= prev);
            std::vector<std::uint64_t> d(k, 0);
            if (k > 0) d[k - 1] = 1;
            CHECK(h == point_mass(m.coeffs, m.tower, t, GroupElement::digits(d)));
            prev = h;
        }
    }
}

TEST_CASE("heat kernel is a density over shells") {
    auto t = Tower::truncated(Tower::powers_of_two(), 12);
    std::vector<double> head;
    for (int k = 0; k < 12; ++k) head.push_back(std::ldexp(1.0, -(k + 1)));
    head.push_back(std::ldexp(1.0, -12));
    auto c = CoefficientSequence::explicit_list(head);
    for (double time : {0.5, 3.0, 40.0}) {
        CompensatedSum total;
        total.add(heat_kernel_at_level(c, t, time, 0));
        for (int k = 1; k <= 12; ++k) total.add(std::ldexp(1.0, k - 1) * heat_kernel_at_level(c, t, time, k));
        CHECK(total.value() == Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("CFG-G heat kernel shape") {
    auto m = canonical_g();
    double lo = kInf, hi = 0.0;
    for (double t = 1.0; t <= 1e4; t *= 1.5) {
        for (int k = 0; k <= 20; ++k) {
            double rho = level_radius(m.coeffs, k);
            double x = heat_kernel_at_level(m.coeffs, m.tower, t, k) * (t + rho) * (t + rho) / t;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    CHECK(hi / lo <= 20.0);
}

TEST_CASE("heat kernel band contains the kernel") {
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> logt(0.0, std::log(1e6));
    std::uniform_int_distribution<int> level(0, 40);
    for (const auto& m : {canonical_g(), canonical_s(), canonical_sa()}) {
        for (int trial = 0; trial < 1000; ++trial) {
            double t = std::exp(logt(gen));
            int k = level(gen);
            if (m.tower.kind() == TowerKind::Factorial) k = std::min(k, 15);
            auto b = heat_kernel_bounds(m.coeffs, m.tower, t, k);
            double h = heat_kernel_at_level(m.coeffs, m.tower, t, k);
            CHECK(b.lower <= h * (1 + 1e-12));
            CHECK(h <= b.upper * (1 + 1e-12));
            CHECK(b.lower > 0.0);
        }
    }
    auto m = canonical_g();
    auto b = heat_kernel_bounds(m.coeffs, m.tower, 10.0, 0);
    StepSpectralDistribution N(m.coeffs, m.tower);
    CHECK(b.lower >= b.c_ret * N.N_at(0.1));
    CHECK(b.c_ret == Approx(0.25 / (2 * std::exp(2.0))).epsilon(1e-15));
    CHECK(b.kappa == Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(heat_kernel_bounds(m.coeffs, m.tower, 0.5, 0), DomainError);
}

TEST_CASE("heat kernel for bounded t and large rho") {
    auto m = canonical_g();
    StepSpectralDistribution N(m.coeffs, m.tower);
    for (double t : {1.0, 2.0, 5.0}) {
        double lo = kInf, hi = 0.0;
        for (int k = 10; k <= 60; ++k) {
            double rho = level_radius(m.coeffs, k);
            double ref = t / (1 + rho) * N.N_at(1 / (1 + rho));
            double x = heat_kernel_at_level(m.coeffs, m.tower, t, k) / ref;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        CHECK(hi / lo < 8.0);
    }
}

TEST_CASE("recurrence classification") {
    auto two = Tower::powers_of_two();
    CHECK(recurrence_classify(canonical_g().coeffs, two).verdict == Verdict::Recurrent);
    CHECK(recurrence_classify(CoefficientSequence::geometric(0.3), two).verdict == Verdict::Recurrent);
    CHECK(recurrence_classify(CoefficientSequence::geometric(0.7), two).verdict == Verdict::Transient);
    CHECK(recurrence_classify(canonical_s().coeffs, canonical_s().tower).verdict == Verdict::Recurrent);
    CHECK(recurrence_classify(CoefficientSequence::polynomial(2.0), two).verdict == Verdict::Transient);
    CHECK(recurrence_classify(CoefficientSequence::geometric(0.5), Tower::factorial()).verdict == Verdict::Transient);
    auto fin = CoefficientSequence::explicit_list({0.5, 0.5});
    CHECK(recurrence_classify(fin, two).verdict == Verdict::Recurrent);

    // Terms 1/(v_k sigma(k)) are all 2 on CFG-G.
    auto r = recurrence_classify(canonical_g().coeffs, two, 50);
    for (double lt : r.log_terms) CHECK(lt == Approx(std::log(2.0)).epsilon(1e-14));
    // CFG-S: 1/(v_k sigma(k)) = (k+2)!/(k+1)! = k+2.
    auto s = recurrence_classify(canonical_s().coeffs, canonical_s().tower, 30);
    for (int k = 0; k <= 30; ++k) CHECK(std::exp(s.log_terms[k]) == Approx(k + 2.0).epsilon(1e-12));
    // 1 - mu(G_n) <= sigma(n), so Lawler terms dominate.
    for (std::size_t k = 0; k < r.log_terms.size(); ++k) CHECK(r.log_lawler_terms[k] >= r.log_terms[k] - 1e-12);
}

TEST_CASE("recurrence envelopes for designed sequences") {
    auto two = Tower::powers_of_two();
    // log(1 + a sigma)/log(1 + a) ~ sigma: terms tend to a constant.
    auto lg = subordinate(canonical_g().coeffs, bernstein_log(2.0));
    auto r = recurrence_classify(lg, two);
    CHECK(r.verdict == Verdict::Recurrent);
    CHECK(r.method == "harmonic envelope");
    // sigma^{1/2} = 2^{-(k+1)/2}: terms 2^{-k/2} sqrt(2) are summable.
    auto sq = subordinate(canonical_g().coeffs, bernstein_power(0.5));
    auto t = recurrence_classify(sq, two);
    CHECK(t.verdict == Verdict::Transient);
    CHECK(t.method == "geometric envelope");
}

TEST_CASE("Lawler criterion") {
    auto two = Tower::powers_of_two();
    std::vector<double> masses;
    for (int n = 0; n < 40; ++n) masses.push_back(1.0 - std::ldexp(1.0, -n) / 2);
    CHECK(lawler_classify(two, masses).verdict == Verdict::Recurrent);
    std::vector<double> fast;
    for (int n = 0; n < 40; ++n) fast.push_back(1.0 - std::pow(0.3, n + 1));
    CHECK(lawler_classify(two, fast).verdict == Verdict::Recurrent);
    std::vector<double> slow;
    for (int n = 0; n < 40; ++n) slow.push_back(1.0 - std::pow(0.9, n + 1));
    CHECK(lawler_classify(two, slow).verdict == Verdict::Inconclusive);
    std::vector<double> full = {0.5, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    CHECK(lawler_classify(two, full).verdict == Verdict::Recurrent);
    CHECK_THROWS_AS(lawler_classify(two, {0.5}), DomainError);
}

TEST_CASE("convolution power bound") {
    auto m = canonical_g();
    CHECK(convolution_power_bound(m.coeffs, m.tower, 0.0) == Approx(1.0).epsilon(1e-14));
    double direct = 0.0;
    for (int k = 0; k < 60; ++k) direct += std::exp(-std::ldexp(1.0, -(k + 1))) * std::ldexp(1.0, -(k + 1));
    CHECK(convolution_power_bound(m.coeffs, m.tower, 1.0) == Approx(direct).epsilon(1e-14));
    // (1 - l)^n <= e^{-n l} <= (1 - l)^{n (1 - sigma(0))} for l <= sigma(0).
    const double dilation = 1.0 - m.coeffs.tail(0);
    for (int n = 1; n <= 1000; n += 7) {
        double b = convolution_power_bound(m.coeffs, m.tower, n);
        double p = return_probability(m.coeffs, m.tower, n);
        CHECK(b >= p * std::exp(-m.coeffs.tail(0)));
        CHECK(b >= p);
        CHECK(b <= return_probability(m.coeffs, m.tower, n * dilation));
    }
}
