#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ultrawalk/profile.hpp"
#include "ultrawalk/spectral.hpp"

using namespace ultrawalk;
using doctest::Approx;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, i / (n - 1.0)));
    return out;
}

}  // namespace

TEST_CASE("T on the geometric fixture") {
    auto m = canonical_g();
    CHECK(T_of(m.coeffs, m.tower, 1.0) == Approx(1.0 / 3).epsilon(1e-14));
    CHECK(T_of(m.coeffs, m.tower, 2.0) == Approx(1.0 / 6).epsilon(1e-14));
    CHECK(T_of(m.coeffs, m.tower, 0.0) == 1.0);
    // Linear on [1, 2].
    CHECK(T_of(m.coeffs, m.tower, 1.5) == Approx(0.25).epsilon(1e-14));
    CHECK(T_of(m.coeffs, m.tower, 1e300) < 1e-299);
    CHECK_THROWS_AS(T_of(m.coeffs, m.tower, -1.0), DomainError);
    // Past the double range: T(v_k) = 2^{-k}/3.
    CHECK(log_T_of_log(m.coeffs, m.tower, 5000 * std::log(2.0)) ==
          Approx(-5000 * std::log(2.0) - std::log(3.0)).epsilon(1e-13));
}

TEST_CASE("T is convex, decreasing and sandwiched on shells") {
    for (const auto& m : {canonical_g(), canonical_s(), canonical_sa(), Model{Tower::powers_of_two(),
                                                                              CoefficientSequence::polynomial(2.0)}}) {
        auto grid = log_grid(1e-3, 1e12, 400);
        double prev = 1.0, prev_slope = -kInf, prev_u = 0.0;
        for (double u : grid) {
            double t = T_of(m.coeffs, m.tower, u);
            CHECK(t < prev);
            double slope = (t - prev) / (u - prev_u);
            // T is linear between volumes; allow the rounding of the difference quotient.
            double slack = 1e-9 * std::abs(prev_slope) + 1e-14 * prev / (u - prev_u);
            CHECK(slope >= prev_slope - slack);
            prev_slope = slope;
            prev = t;
            prev_u = u;
        }
        for (int k = 0; k < 12; ++k) {
            double vk = m.tower.volume(k).convert_to<double>();
            double vk1 = m.tower.volume(k + 1).convert_to<double>();
            for (double f : {0.0, 0.3, 0.999}) {
                double u = vk + f * (vk1 - vk);
                double t = T_of(m.coeffs, m.tower, u);
                CHECK(t > m.coeffs.tail(k + 1) / 2);
                CHECK(t < m.coeffs.tail(k));
            }
        }
    }
}

TEST_CASE("lambda_1 of subgroups") {
    auto g = canonical_g();
    CHECK(lambda1_subgroup(g.coeffs, g.tower, 0) == Approx(1.0 / 3).epsilon(1e-14));
    CHECK(lambda1_subgroup(g.coeffs, g.tower, 1) == Approx(1.0 / 6).epsilon(1e-14));
    for (const auto& m : {canonical_g(), canonical_s(), canonical_sa()}) {
        for (int k = 0; k <= 40; ++k) {
            double l = lambda1_subgroup(m.coeffs, m.tower, k);
            double s = m.coeffs.tail(k);
            CHECK(l > s / 2);
            CHECK(l < s);
            double t = std::exp(log_T_of_log(m.coeffs, m.tower, m.tower.log_volume(k)));
            CHECK(t == Approx(l).epsilon(1e-13));
        }
    }
}

TEST_CASE("algebraic identity at subgroup volumes") {
    auto m = canonical_g();
    for (int k = 0; k < 30; ++k) {
        double vk = std::ldexp(1.0, k);
        CompensatedSum s;
        s.add(T_of(m.coeffs, m.tower, vk));
        s.add(m.coeffs.partial_sum(k));
        // v_k sum_{i>k} 2^{-(i+1)} 2^{-i} = 2^{-(k+1)}/3.
        s.add(std::ldexp(1.0, -(k + 1)) / 3);
        CHECK(s.value() == Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("T inverse") {
    auto m = canonical_g();
    CHECK(T_inverse(m.coeffs, m.tower, 1.0 / 6) == Approx(2.0).epsilon(1e-12));
    CHECK(T_inverse(m.coeffs, m.tower, 1.0 / 3) == Approx(1.0).epsilon(1e-12));
    CHECK(T_inverse(m.coeffs, m.tower, 1.0) == 0.0);
    CHECK_THROWS_AS(T_inverse(m.coeffs, m.tower, 0.0), DomainError);
    CHECK_THROWS_AS(T_inverse(m.coeffs, m.tower, 1.5), DomainError);
    for (const auto& mm : {canonical_g(), canonical_s(), canonical_sa()}) {
        for (double y : log_grid(1e-200, 0.9, 100)) {
            double lu = log_T_inverse_log(mm.coeffs, mm.tower, std::log(y));
            CHECK(std::abs(std::exp(log_T_of_log(mm.coeffs, mm.tower, lu)) - y) <= 1e-10 * y);
            if (lu < 700.0) CHECK(std::abs(T_of(mm.coeffs, mm.tower, T_inverse(mm.coeffs, mm.tower, y)) - y) <= 1e-10 * y);
        }
    }
}

TEST_CASE("Folner upper bound") {
    auto m = canonical_g();
    ProfileBand band(m.coeffs, m.tower);
    CHECK(band.k_of_n(1) == 0);
    CHECK(band.k_of_n(2) == 1);
    CHECK(band.k_of_n(3) == 2);
    CHECK(band.F(2) == 2.0);
    CHECK(band.upper(2.0) == Approx(1.0).epsilon(1e-14));
    CHECK(folner_upper(m.coeffs, m.tower, 2.0) == Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(band.upper(1.0), DomainError);
    auto knots = band.knots(50);
    for (std::size_t i = 1; i < knots.size(); ++i) CHECK(knots[i].second >= knots[i - 1].second);
    CHECK_THROWS_AS(ProfileBand(CoefficientSequence::explicit_list({0.5, 0.5}), m.tower), DomainError);
}

TEST_CASE("profile band sandwich") {
    for (const auto& m : {canonical_g(), canonical_s(), canonical_sa()}) {
        ProfileBand band(m.coeffs, m.tower);
        auto r = check_band(band, log_grid(1.01, 1e6, 300));
        CHECK(r.violations == 0);
        CHECK(r.min_ratio >= 1.0);
    }
    // Under condition (A) the ratio stays bounded.
    auto g = canonical_g();
    auto r = check_band(ProfileBand(g.coeffs, g.tower), log_grid(2.0, 1e6, 300));
    CHECK(r.max_ratio < 20.0);
}

TEST_CASE("N against 1/T^{-1}") {
    auto g = canonical_g();
    auto r = profile_vs_spectral_check(g.coeffs, g.tower, log_grid(1e-8, 0.5, 200));
    CHECK_FALSE(r.advisory);
    CHECK(r.lambda == Approx(1.0).epsilon(1e-12));
    CHECK(r.lower_violations == 0);
    CHECK(r.upper_violations == 0);
    StepSpectralDistribution N(g.coeffs, g.tower);
    for (int k = 0; k < 20; ++k) CHECK(1.0 / N.N_at(g.coeffs.tail(k)) == std::ldexp(1.0, k));
    auto s = canonical_s();
    auto rs = profile_vs_spectral_check(s.coeffs, s.tower, log_grid(1e-12, 0.5, 200));
    CHECK(rs.advisory);
}

TEST_CASE("doubling under condition A") {
    auto g = canonical_g();
    auto grid = log_grid(1.001, 1e12, 500);
    double c = doubling_constant(g.coeffs, grid);
    CHECK(c >= 1.0 / 8);
    CHECK(c < 1.0);
    CHECK(sigma_extended(g.coeffs, 1.0) == 0.25);
    CHECK(sigma_extended(g.coeffs, 1.5) == Approx(std::pow(2.0, -2.5)).epsilon(1e-14));
    CHECK(sigma_extended(g.coeffs, -2.0) == 1.0);
}

TEST_CASE("order estimates") {
    std::vector<std::pair<double, double>> sq;
    for (int i = 0; i < 60; ++i) {
        double lx = 0.5 + i * 0.3;
        sq.emplace_back(lx, 2 * lx);
    }
    auto o = order_of(sq);
    CHECK(o.upper == Approx(2.0).epsilon(1e-6));
    CHECK(o.lower == Approx(2.0).epsilon(1e-6));
    CHECK(o.slope == Approx(2.0).epsilon(1e-6));
    CHECK_THROWS_AS(order_of({{1.0, 1.0}, {2.0, 2.0}}), DomainError);
    std::vector<std::pair<double, double>> narrow;
    for (int i = 0; i < 30; ++i) narrow.emplace_back(1.0 + i * 0.01, 1.0);
    CHECK_THROWS_AS(order_of(narrow), DomainError);

    // Factorial tower, sigma(k) = 1/(k+2)!: 1/Lambda has order 1.
    auto s = canonical_s();
    std::vector<std::pair<double, double>> inv;
    for (int k = 5; k <= 400; k += 5) inv.emplace_back(s.tower.log_volume(k), -log_T_of_log(s.coeffs, s.tower, s.tower.log_volume(k)));
    auto os = order_of(inv);
    CHECK(os.upper == Approx(1.0).epsilon(0.15));
    CHECK(os.lower == Approx(1.0).epsilon(0.15));
}
