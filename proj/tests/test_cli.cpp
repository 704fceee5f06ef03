#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ultrawalk/cli.hpp"
#include "ultrawalk/oracle.hpp"

using namespace ultrawalk;
using namespace ultrawalk::cli;

namespace {

double num(const Cell& c) {
    if (auto d = std::get_if<double>(&c)) return *d;
    return static_cast<double>(std::get<long long>(c));
}

std::string config_error(const std::string& text) {
    try {
        build_model(parse_config_text(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config round trip") {
    RunConfig a;
    CHECK(parse_config(to_json(a)) == a);
    auto b = parse_config_text(R"J({
        "tower": {"kind": "custom", "volumes": [1, 3, "6", 24], "extend": true, "top_level": 3},
        "coefficients": {"family": "explicit", "head": [0.5, 0.25], "tail_rule": "geometric", "tail_param": 0.5},
        "tol": 1e-12, "max_level": 200, "seed": 18446744073709551615, "format": "json", "timestamp": false,
        "grid": {"t": {"from": 10, "to": 1e6, "per_decade": 2}, "n": [1, 2, 3], "ball_levels": [0, 4],
                 "levels": 12, "walks": 500, "horizon": 50, "target": "power(0.5)", "design": "slow",
                 "rate": "iterated_exp(1, 2)"}})J");
    CHECK(b.tower.volumes == std::vector<std::string>{"1", "3", "6", "24"});
    CHECK(b.seed == 18446744073709551615ULL);
    REQUIRE(b.grid.t.size() == 11);
    CHECK(b.grid.t.front() == 10.0);
    CHECK(b.grid.t.back() == doctest::Approx(1e6).epsilon(1e-15));
    CHECK(parse_config(to_json(b)) == b);
    // Emitted text is a fixed point.
    std::string text = to_json(b).dump();
    CHECK(to_json(parse_config_text(text)).dump() == text);
    for (const char* fam : {R"J({"family": "polynomial", "p": 3})J", R"J({"family": "iterated_log", "p": 2, "depth": 2})J",
                            R"J({"family": "explicit", "head": [], "tail_rule": "inverse_factorial", "tail_param": 2})J"}) {
        auto c = parse_config_text(std::string(R"J({"coefficients": )J") + fam + "}");
        CHECK(parse_config(to_json(c)) == c);
    }
}

TEST_CASE("rejected configs name the violated invariant") {
    CHECK(config_error(R"J({"coefficients": {"family": "geometric", "q": 1.5}})J") == "q ∈ (0,1) required");
    CHECK(config_error(R"J({"coefficients": {"family": "polynomial", "p": 1}})J") == "p > 1 required");
    CHECK(config_error(R"J({"tower": {"kind": "torus"}})J").find("tower.kind") != std::string::npos);
    CHECK(config_error(R"J({"grid": {"tt": [1]}})J") == "unknown key grid.tt");
    CHECK(config_error(R"J({"seed": "one"})J") == "config.seed has the wrong type");
    CHECK(config_error(R"J({"tower": {"kind": "custom", "volumes": [1, 3, 5]}})J") == "v_k must divide v_{k+1}");
    CHECK(config_error(R"J({"tower": {"kind": "custom", "volumes": [1, "2x"]}})J").find("decimal") != std::string::npos);
    CHECK(config_error(R"J({"max_level": 0})J").find("max_level") != std::string::npos);
    CHECK(config_error(R"J({"grid": {"rate": "power(-1)"}})J").find("grid.rate") != std::string::npos);
    CHECK(config_error(R"J({"grid": {"target": "power(0.5x)"}})J") == "grid.target: bad argument \"0.5x\"");
    CHECK(config_error(R"J({"coefficients": {"family": "explicit", "head": [0.5, 0.4]}})J") ==
          "coefficients must sum to 1");
    CHECK(config_error("{not json").find("not valid JSON") != std::string::npos);
    CHECK(config_error(R"J({"coefficients": {"family": "explicit", "file": "/nonexistent/c.csv"}})J")
              .find("cannot open") != std::string::npos);
}

TEST_CASE("config hash") {
    RunConfig a;
    std::string h = config_hash(a);
    CHECK(h.size() == 16);
    RunConfig b = a;
    b.format = "json";
    b.timestamp = false;
    CHECK(config_hash(b) == h);
    b.seed = 2;
    CHECK(config_hash(b) != h);
    b = a;
    b.coefficients.q = 0.25;
    CHECK(config_hash(b) != h);
}

TEST_CASE("build_model folds onto truncated towers") {
    auto m = build_model(parse_config_text(R"J({"tower": {"kind": "powers_of_two", "top_level": 3}})J"));
    CHECK(m.tower.finite());
    CHECK(m.coeffs.finite_support());
    CHECK(m.coeffs.coeff(3) == 0.125);
    auto s = build_model(parse_config_text(
        R"J({"tower": {"kind": "factorial"}, "coefficients": {"family": "explicit", "head": [], "tail_rule": "inverse_factorial", "tail_param": 2}})J"));
    CHECK(s.coeffs.tail(3) == doctest::Approx(1.0 / 120).epsilon(1e-14));
}

TEST_CASE("spectrum and return on CFG-G") {
    RunConfig c;
    c.grid.levels = 8;
    auto s = cmd_spectrum(c);
    REQUIRE(s.table.rows.size() == 8);
    for (int k = 0; k < 8; ++k) {
        CHECK(num(s.table.rows[k][1]) == std::ldexp(1.0, -(k + 1)));
        CHECK(num(s.table.rows[k][2]) == doctest::Approx(std::ldexp(1.0, -k)).epsilon(1e-15));
    }
    c.grid.t = {};
    for (double t = 10; t <= 1e6 * 1.0001; t *= std::pow(10.0, 0.25)) c.grid.t.push_back(t);
    auto r = cmd_return(c);
    for (std::size_t i = 1; i < r.table.rows.size(); ++i) CHECK(num(r.table.rows[i][1]) < num(r.table.rows[i - 1][1]));
    double slope = std::stod(r.summary.front().second);
    CHECK(r.summary.front().first == "slope_log_p_vs_log_t");
    CHECK(std::abs(slope + 1.0) <= 0.03);
    // R = -log p / t, and the convolution-power bound dominates p.
    for (const auto& row : r.table.rows) {
        CHECK(num(row[3]) == doctest::Approx(-num(row[2]) / num(row[0])).epsilon(1e-15));
        CHECK(num(row[4]) >= num(row[1]) * (1 - 1e-12));
    }
}

TEST_CASE("recurrence, profile, heat") {
    RunConfig c;
    c.coefficients.q = 0.3;
    auto rec = cmd_recurrence(c);
    CHECK(rec.summary.front().second == "Recurrent");
    CHECK(rec.status == 0);
    c.coefficients.q = 0.9;
    CHECK(cmd_recurrence(c).summary.front().second == "Transient");

    RunConfig p;
    auto prof = cmd_profile(p);
    CHECK(prof.summary[0].second == "0");
    CHECK(prof.summary[3].second == "holds");

    RunConfig h;
    auto heat = cmd_heat(h);
    CHECK(heat.summary[0] == std::pair<std::string, std::string>{"outside_band", "0"});
    CHECK(heat.table.rows.size() == 5 * 11);
    h.grid.t = {0.5};
    CHECK_THROWS_AS(cmd_heat(h), ConfigError);
}

TEST_CASE("walk command is reproducible and agrees with the exact masses") {
    RunConfig c;
    c.grid.walks = 20000;
    c.grid.n = {2, 16};
    auto a = cmd_walk(c), b = cmd_walk(c);
    CHECK(render_csv(a, c, std::nullopt) == render_csv(b, c, std::nullopt));
    // 12 comparisons; Bonferroni z at family-wise 1%.
    CHECK(std::stod(a.summary[2].second) <= 3.35);
    c.seed = 2;
    CHECK(render_csv(cmd_walk(c), c, std::nullopt) != render_csv(a, c, std::nullopt));
}

TEST_CASE("design output loads back as a coefficient file") {
    RunConfig c;
    c.grid.levels = 60;
    auto d = cmd_design(c);
    REQUIRE(d.table.rows.size() == 60);
    std::string path = "test_cli_design.csv";
    {
        std::ofstream out(path);
        out << render_csv(d, c, std::string("2026-01-01T00:00:00Z"));
    }
    RunConfig e;
    e.coefficients.family = "explicit";
    e.coefficients.file = path;
    auto m = build_model(e);
    for (int k = 0; k < 59; ++k) CHECK(m.coeffs.coeff(k) == num(d.table.rows[k][1]));
    CHECK(m.coeffs.coeff(59) == doctest::Approx(num(d.table.rows[59][1]) + num(d.table.rows[59][2])).epsilon(1e-15));
    CHECK(m.coeffs.finite_support());
    // The JSON rendering loads too.
    std::string jpath = "test_cli_design.json";
    {
        std::ofstream out(jpath);
        out << render_json(d, c, std::nullopt);
    }
    e.coefficients.file = jpath;
    CHECK(build_model(e).coeffs.coeff(10) == m.coeffs.coeff(10));
    std::remove(path.c_str());
    std::remove(jpath.c_str());
}

TEST_CASE("transform table") {
    RunConfig c;
    auto t = cmd_transform(c);
    REQUIRE(t.table.rows.size() == 7);
    for (const auto& row : t.table.rows) {
        double x = num(row[0]);
        CHECK(num(row[1]) == doctest::Approx(2 * std::sqrt(x)).epsilon(1e-6));
        CHECK(num(row[4]) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(num(row[2]) <= num(row[1]));
        // L*(log)(1/x) = log x - 1 once the sup is interior.
        if (x > 3) CHECK(num(row[5]) == doctest::Approx(std::log(x) - 1).epsilon(1e-6));
    }
    CHECK(t.status == 0);
}

TEST_CASE("rendering") {
    RunConfig c;
    c.grid.levels = 3;
    auto r = cmd_spectrum(c);
    std::string csv = render_csv(r, c, std::nullopt);
    CHECK(csv.substr(0, csv.find('\n')) == "k,lambda,N,log_N,config_hash,seed");
    CHECK(csv.find("0,0.5,1,0," + config_hash(c) + ",1\n") != std::string::npos);
    CHECK(csv == render_csv(cmd_spectrum(c), c, std::nullopt));
    std::string stamped = render_csv(r, c, std::string("T"));
    CHECK(stamped.substr(0, stamped.find('\n')) == "k,lambda,N,log_N,config_hash,seed,generated_at");
    auto j = nlohmann::json::parse(render_json(r, c, std::nullopt));
    CHECK(j["rows"].size() == 3);
    CHECK(j["rows"][1]["lambda"].get<double>() == 0.25);
    CHECK(j["meta"]["config_hash"] == config_hash(c));
    CHECK(parse_config(j["meta"]["config"]) == c);
    CHECK_FALSE(j["meta"].contains("generated_at"));
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
    // Strings with delimiters are quoted.
    CommandResult q{"x", {{"s"}, {{std::string("a,\"b\"")}}}, {}, 0};
    CHECK(render_csv(q, c, std::nullopt).find("\"a,\"\"b\"\"\"") != std::string::npos);
}

TEST_CASE("validate command") {
    auto v = cmd_validate(RunConfig{});
    CHECK(v.status == 0);
    CHECK(v.summary[1].second == "0");
    CHECK(v.table.rows.size() == oracle_suite().size());
}
