#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <boost/math/special_functions/bessel.hpp>

#include "ultrawalk/spectral.hpp"
#include "ultrawalk/transforms.hpp"

using namespace ultrawalk;
using doctest::Approx;

namespace {

ScalarFunction two_sqrt() {
    return ScalarFunction(
        "2sqrt", [](double t) { return 2 * std::sqrt(t); }, Monotone::Increasing, Curvature::Concave);
}

}  // namespace

TEST_CASE("declared shapes are spot-checked") {
    CHECK_NOTHROW(rates::power(1.0));
    CHECK_THROWS_AS(ScalarFunction("bad", [](double t) { return t; }, Monotone::Decreasing), DomainError);
    CHECK_THROWS_AS(ScalarFunction("bad", [](double t) { return t * t; }, Monotone::Increasing, Curvature::Concave),
                    DomainError);
    CHECK_THROWS_AS(ScalarFunction("nan", [](double) { return std::nan(""); }), DomainError);
    CHECK_THROWS_AS(ScalarFunction("empty", {}), DomainError);
}

TEST_CASE("Legendre transform of inverse powers") {
    auto M = rates::power(1.0);
    CHECK(legendre(M, 4.0) == Approx(4.0).epsilon(1e-10));
    for (double t = 1.0; t <= 1e6; t *= 3.7) CHECK(legendre(M, t) == Approx(2 * std::sqrt(t)).epsilon(1e-9));
    for (double beta : {0.5, 2.0, 3.0}) {
        auto Mb = rates::power(beta);
        for (double t : {1.0, 1e3, 1e8}) CHECK(legendre(Mb, t) == Approx(rates::power_exact(beta, t)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(legendre(M, 0.0), DomainError);
}

TEST_CASE("Legendre asymptotics of the rate examples") {
    // The limits are slow: at 1e8 the log-power ratio is still about 0.75, so
    // the check runs at the far end of the double range.
    auto M1 = rates::log_power(2.0);
    double r1 = legendre(M1, 1e300) / rates::log_power_reference(2.0, 1e300);
    CHECK(r1 == Approx(1.0).epsilon(0.05));
    auto M3 = rates::iterated_exp(1, 1.0);
    double r3 = legendre(M3, 1e300) / rates::iterated_exp_reference(1, 1.0, 1e300);
    CHECK(r3 == Approx(1.0).epsilon(0.10));
    // The ratios move toward 1 along the grid.
    double prev1 = 0.0, prev3 = kInf;
    for (double t : {1e10, 1e50, 1e100, 1e200, 1e300}) {
        double a = legendre(M1, t) / rates::log_power_reference(2.0, t);
        double b = legendre(M3, t) / rates::iterated_exp_reference(1, 1.0, t);
        CHECK(a > prev1);
        CHECK(b < prev3);
        prev1 = a;
        prev3 = b;
    }
}

TEST_CASE("Legendre transform is concave and bracketed by M o (M/id)^{-1}") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(0.0, std::log(1e8));
    for (const auto& M : {rates::power(1.0), rates::log_power(2.0), rates::iterated_exp(1, 1.0)}) {
        for (int trial = 0; trial < 1000; ++trial) {
            double a = std::exp(u(gen)), b = std::exp(u(gen));
            double mid = 0.5 * (a + b);
            double la = legendre(M, a), lb = legendre(M, b), lm = legendre(M, mid);
            CHECK(lm >= 0.5 * (la + lb) - 1e-9 * lm);
        }
        for (double x = 1.0; x <= 1e8; x *= 10.0) {
            double s = legendre_scale(M, x);
            double l = legendre(M, x);
            CHECK(l >= s * (1 - 1e-9));
            CHECK(l <= 2 * s * (1 + 1e-9));
        }
    }
}

TEST_CASE("conjugate Legendre transform") {
    auto F = two_sqrt();
    CHECK(conjugate_legendre(F, 1.0) == Approx(1.0).epsilon(1e-10));
    CHECK(conjugate_legendre_extremum(F, 1.0).arg == Approx(1.0).epsilon(1e-6));
    ScalarFunction M("L*(2sqrt)", [F](double s) { return conjugate_legendre(F, s); }, Monotone::Decreasing,
                     Curvature::Convex);
    for (double x = 1.0; x <= 1e4; x *= 2.3) CHECK(legendre(M, x) == Approx(F(x)).epsilon(1e-6));
    auto G = ScalarFunction(
        "t^0.9", [](double t) { return std::pow(t, 0.9); }, Monotone::Increasing, Curvature::Concave);
    ScalarFunction MG("L*(t^0.9)", [G](double s) { return conjugate_legendre(G, s); }, Monotone::Decreasing);
    for (double x = 1.0; x <= 1e4; x *= 4.1) CHECK(legendre(MG, x) >= G(x) * (1 - 1e-9));
    // A convex F: the biconjugate is its concave hull, strictly above near 0.
    auto H = ScalarFunction(
        "max(0,t-1)^0.5", [](double t) { return t > 1 ? std::sqrt(t - 1) : 0.0; }, Monotone::Increasing);
    ScalarFunction MH("L*(H)", [H](double s) { return conjugate_legendre_extremum(H, s).value; },
                      Monotone::Decreasing);
    CHECK(legendre(MH, 1.0) > H(1.0));
}

TEST_CASE("Kohlbecker transform") {
    auto M = rates::power(1.0);
    // int_0^inf e^{-xt - 1/t} dt = 2 x^{-1/2} K_1(2 sqrt x).
    for (double x : {0.5, 3.0, 100.0, 1e4, 1e5}) {
        double ref = -std::log(2 * std::sqrt(x) * boost::math::cyl_bessel_k(1, 2 * std::sqrt(x)));
        CHECK(kohlbecker(M, x) == Approx(ref).epsilon(1e-10));
    }
    double k6 = kohlbecker(M, 1e6);
    CHECK(k6 / 2000.0 >= 0.9);
    CHECK(k6 / 2000.0 <= 1.1);
    CHECK(k6 / legendre(M, 1e6) == Approx(1.0).epsilon(0.05));
    for (const auto& Mf : {rates::power(1.0), rates::power(0.5), rates::log_power(2.0), rates::iterated_exp(1, 1.0)}) {
        // e^{1/t} puts h near 1e10 at x = 1e11, past what doubles resolve.
        for (double x = 10.0; x <= 1e9; x *= 100.0) {
            double l = legendre(Mf, x), k = kohlbecker(Mf, x);
            CHECK(k <= l * (1 + 1e-9));
            CHECK(k >= (l - std::log1p(l)) * (1 - 1e-9));
        }
    }
    // Bounded M near x = 0: finite limit.
    double small = kohlbecker(rates::log_power(2.0), 1e-8);
    CHECK(std::isfinite(small));
}

TEST_CASE("iterated logs and exps") {
    CHECK(iterated_log(0, 5.0) == 5.0);
    CHECK(iterated_log(2, std::exp(1.0) - 1.0) == Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(iterated_exp(2, 0.0) == Approx(std::exp(1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(iterated_log(1, -1.0), DomainError);
}

TEST_CASE("fast decay designer") {
    auto tower = Tower::powers_of_two();
    auto d = design_fast_decay(tower, target_log());
    const auto& c = d.seq;
    CHECK(d.k0 == 1);
    for (int k = d.k0; k < 200; ++k) CHECK(c.tail(k) == Approx(std::exp(-std::sqrt(k * std::log(2.0)))).epsilon(1e-12));
    CompensatedSum s;
    for (int k = 0; k <= 3000; ++k) {
        CHECK(c.coeff(k) > 0.0);
        s.add(c.coeff(k));
    }
    CHECK(s.value() + c.tail(3000) == Approx(1.0).epsilon(1e-12));
    auto trend = decay_trend(c, tower, target_log(), {1e2, 1e3, 1e4, 1e5}, true);
    CHECK(trend.monotone_from == 0);
    CHECK_THROWS_AS(design_fast_decay(tower, ScalarFunction("id", [](double t) { return t; }, Monotone::Increasing)),
                    DomainError);
    CHECK_THROWS_AS(design_fast_decay(Tower::truncated(tower, 5), target_log()), DomainError);
}

TEST_CASE("fast decay from a generic target") {
    auto tower = Tower::powers_of_two();
    auto F = ScalarFunction(
        "sqrt_log", [](double t) { return t > 1 ? std::sqrt(std::log(t)) : 0.0; }, Monotone::Increasing);
    DesignOptions opts;
    opts.table_levels = 40;
    auto d = design_fast_decay(tower, F, opts);
    for (int k = 0; k < 60; ++k) {
        CHECK(d.seq.coeff(k) > 0.0);
        CHECK(d.seq.tail(k + 1) < d.seq.tail(k));
    }
    // The numeric rate matches the closed form for power targets.
    auto P = target_power(0.5);
    auto closed = design_fast_decay(tower, P, opts);
    ScalarFunction Ft("tau^0.75", [](double t) { return std::pow(t, 0.75); }, Monotone::Increasing);
    DesignOptions numeric = opts;
    numeric.M = ScalarFunction("L*(tau^0.75)", [Ft](double s) { return conjugate_legendre(Ft, s); },
                               Monotone::Decreasing);
    auto num = design_fast_decay(tower, P, numeric);
    CHECK(num.k0 == closed.k0);
    for (int k = closed.k0; k < 40; ++k) CHECK(num.seq.tail(k) == Approx(closed.seq.tail(k)).epsilon(1e-8));
}

TEST_CASE("slow decay designer") {
    auto tower = Tower::powers_of_two();
    auto F = target_power(0.5);
    auto d = design_slow_decay(tower, F);
    for (int k = 0; k < 500; ++k) CHECK(d.seq.coeff(k) > 0.0);
    CHECK(d.seq.tail(0) <= 0.5);
    auto trend = decay_trend(d.seq, tower, F, {1e2, 1e3, 1e4, 1e5}, false);
    CHECK(trend.monotone_from == 0);
    CHECK(-log_return_probability(d.seq, tower, 1e4) / 100.0 <= 0.5);
    CHECK_THROWS_AS(design_slow_decay(tower, ScalarFunction("const", [](double) { return 3.0; }, Monotone::Increasing)),
                    DomainError);
}

TEST_CASE("spectral floor gives p(n) >= c / log n") {
    auto tower = Tower::powers_of_two();
    // g(lambda) = 1/log(1 + 1/lambda), g^{-1}(y) = 1/(e^{1/y} - 1).
    auto d = design_spectral_floor(
        tower,
        [](double log_y) {
            double inv = std::exp(-log_y);
            return -inv - std::log1p(-std::exp(-inv));
        },
        "inverse_log");
    StepSpectralDistribution N(d.seq, tower);
    for (int k = 0; k < 8; ++k) {
        double s = d.seq.tail(k);
        CHECK(N.N_at(s) >= 1.0 / std::log1p(1.0 / s) * (1 - 1e-12));
    }
    double lo = kInf;
    for (double n = 10; n <= 1e8; n *= 10) lo = std::min(lo, return_probability(d.seq, tower, n) * std::log(n));
    CHECK(lo > 0.1);
}

TEST_CASE("iterated log decay example") {
    auto tower = Tower::powers_of_two();
    auto d = design_iterated_log_decay(tower, 1, 1.0);
    for (int k = 0; k < 400; ++k) CHECK(d.seq.coeff(k) > 0.0);
    // -log p(n) l_1(n) / n stays bounded below.
    double lo = kInf;
    for (double n = 1e2; n <= 1e4; n *= 3) lo = std::min(lo, -log_return_probability(d.seq, tower, n) * iterated_log(1, n) / n);
    CHECK(lo > 0.05);
}
