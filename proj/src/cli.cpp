#include "ultrawalk/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "ultrawalk/oracle.hpp"
#include "ultrawalk/profile.hpp"
#include "ultrawalk/spectral.hpp"
#include "ultrawalk/transforms.hpp"
#include "ultrawalk/walk_sim.hpp"

namespace ultrawalk::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key " + where + "." + it.key());
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

std::vector<double> log_grid(double from, double to, int per_decade) {
    std::vector<double> out;
    int steps = static_cast<int>(std::round(std::log10(to / from) * per_decade));
    for (int i = 0; i <= steps; ++i) out.push_back(from * std::pow(10.0, static_cast<double>(i) / per_decade));
    return out;
}

// Explicit list, or {"from", "to", "per_decade"} on a log scale.
template <class T>
void read_grid(const json& j, const char* key, std::vector<T>& out) {
    if (!j.contains(key)) return;
    const json& g = j.at(key);
    std::string where = std::string("grid.") + key;
    if (g.is_object()) {
        only_keys(g, where, {"from", "to", "per_decade"});
        double from = 0, to = 0;
        int per = 0;
        read(g, "from", from, where);
        read(g, "to", to, where);
        read(g, "per_decade", per, where);
        if (!(from > 0 && to >= from && per >= 1)) throw ConfigError(where + ": 0 < from <= to and per_decade >= 1 required");
        out.clear();
        for (double v : log_grid(from, to, per)) {
            if constexpr (std::is_integral_v<T>) {
                T r = static_cast<T>(std::llround(v));
                if (out.empty() || out.back() != r) out.push_back(r);
            } else {
                out.push_back(v);
            }
        }
        return;
    }
    read(j, key, out, "grid");
}

// "name(a,b)" -> name and arguments.
std::pair<std::string, std::vector<double>> parse_call(const std::string& s, const std::string& what) {
    static const std::regex call(R"(^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, call)) throw ConfigError(what + ": cannot parse \"" + s + "\"");
    std::vector<double> args;
    std::stringstream in(m[2].str());
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
        }
        if (used == 0 || item.find_first_not_of(' ', used) != std::string::npos)
            throw ConfigError(what + ": bad argument \"" + item + "\"");
        args.push_back(v);
    }
    return {m[1].str(), args};
}

ScalarFunction target_of(const std::string& s) {
    auto [name, args] = parse_call(s, "grid.target");
    if (name == "log" && args.empty()) return target_log();
    if (name == "power" && args.size() == 1) {
        if (!(args[0] > 0 && args[0] < 1)) throw ConfigError("grid.target: power(a) needs a ∈ (0,1)");
        return target_power(args[0]);
    }
    throw ConfigError("grid.target: expected log or power(a)");
}

struct Rate {
    ScalarFunction M;
    std::function<double(double)> reference;
};

Rate rate_of(const std::string& s) {
    auto [name, args] = parse_call(s, "grid.rate");
    if (name == "power" && args.size() == 1 && args[0] > 0) {
        double b = args[0];
        return {rates::power(b), [b](double t) { return rates::power_exact(b, t); }};
    }
    if (name == "log_power" && args.size() == 1 && args[0] > 1) {
        double a = args[0];
        return {rates::log_power(a), [a](double t) { return rates::log_power_reference(a, t); }};
    }
    if (name == "iterated_exp" && args.size() == 2 && args[0] >= 1 && args[1] > 0) {
        int k = static_cast<int>(args[0]);
        double nu = args[1];
        return {rates::iterated_exp(k, nu), [k, nu](double t) { return rates::iterated_exp_reference(k, nu, t); }};
    }
    throw ConfigError("grid.rate: expected power(b > 0), log_power(a > 1) or iterated_exp(k >= 1, nu > 0)");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream in(line);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(item);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Coefficient table from the design command, CSV or JSON.
CoefficientSequence load_coefficient_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("coefficients.file: cannot open " + path);
    std::vector<double> c, sigma;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        json j;
        try {
            in >> j;
            for (const auto& row : j.at("rows")) {
                c.push_back(row.at("c").get<double>());
                sigma.push_back(row.contains("sigma") ? row.at("sigma").get<double>() : 0.0);
            }
        } catch (const json::exception& e) {
            throw ConfigError("coefficients.file: " + std::string(e.what()));
        }
    } else {
        std::string line;
        if (!std::getline(in, line)) throw ConfigError("coefficients.file: empty");
        auto header = split_csv_line(line);
        auto col = [&](const char* name) -> long {
            auto it = std::find(header.begin(), header.end(), name);
            return it == header.end() ? -1 : it - header.begin();
        };
        long ci = col("c"), si = col("sigma");
        if (ci < 0) throw ConfigError("coefficients.file: no c column");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_csv_line(line);
            try {
                c.push_back(std::stod(cells.at(ci)));
                sigma.push_back(si >= 0 ? std::stod(cells.at(si)) : 0.0);
            } catch (const std::exception&) {
                throw ConfigError("coefficients.file: malformed row \"" + line + "\"");
            }
        }
    }
    if (c.empty()) throw ConfigError("coefficients.file: no rows");
    c.back() += sigma.back();
    return CoefficientSequence::explicit_list(std::move(c));
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

SeriesOptions series(const RunConfig& c) { return {c.tol}; }

template <class T>
std::vector<T> or_default(const std::vector<T>& v, std::vector<T> fallback) {
    return v.empty() ? std::move(fallback) : v;
}

std::string fmt(double x) { return format_double(x); }

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    only_keys(j, "config", {"tower", "coefficients", "tol", "max_level", "seed", "format", "timestamp", "grid"});
    if (j.contains("tower")) {
        const json& t = j.at("tower");
        only_keys(t, "tower", {"kind", "volumes", "extend", "top_level"});
        read(t, "kind", c.tower.kind, "tower");
        if (t.contains("volumes")) {
            if (!t.at("volumes").is_array()) throw ConfigError("tower.volumes must be an array");
            for (const auto& v : t.at("volumes")) {
                if (v.is_number_unsigned())
                    c.tower.volumes.push_back(std::to_string(v.get<std::uint64_t>()));
                else if (v.is_string())
                    c.tower.volumes.push_back(v.get<std::string>());
                else
                    throw ConfigError("tower.volumes holds positive integers or decimal strings");
            }
        }
        read(t, "extend", c.tower.extend, "tower");
        if (t.contains("top_level")) {
            int k = 0;
            read(t, "top_level", k, "tower");
            c.tower.top_level = k;
        }
    }
    if (j.contains("coefficients")) {
        const json& s = j.at("coefficients");
        only_keys(s, "coefficients", {"family", "q", "p", "depth", "head", "tail_rule", "tail_param", "file"});
        auto& cs = c.coefficients;
        read(s, "family", cs.family, "coefficients");
        read(s, "q", cs.q, "coefficients");
        read(s, "p", cs.p, "coefficients");
        read(s, "depth", cs.depth, "coefficients");
        read(s, "head", cs.head, "coefficients");
        read(s, "tail_rule", cs.tail_rule, "coefficients");
        read(s, "tail_param", cs.tail_param, "coefficients");
        read(s, "file", cs.file, "coefficients");
    }
    read(j, "tol", c.tol, "config");
    read(j, "max_level", c.max_level, "config");
    read(j, "seed", c.seed, "config");
    read(j, "format", c.format, "config");
    read(j, "timestamp", c.timestamp, "config");
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        only_keys(g, "grid", {"t", "u", "x", "n", "ball_levels", "levels", "walks", "horizon", "target", "design", "rate"});
        read_grid(g, "t", c.grid.t);
        read_grid(g, "u", c.grid.u);
        read_grid(g, "x", c.grid.x);
        read_grid(g, "n", c.grid.n);
        read(g, "ball_levels", c.grid.ball_levels, "grid");
        read(g, "levels", c.grid.levels, "grid");
        read(g, "walks", c.grid.walks, "grid");
        read(g, "horizon", c.grid.horizon, "grid");
        read(g, "target", c.grid.target, "grid");
        read(g, "design", c.grid.design, "grid");
        read(g, "rate", c.grid.rate, "grid");
    }

    // Invariants that do not need the model.
    static const std::set<std::string> kinds{"powers_of_two", "factorial", "custom"};
    static const std::set<std::string> families{"geometric", "polynomial", "iterated_log", "explicit"};
    static const std::set<std::string> rules{"none", "inverse_factorial", "geometric"};
    if (!kinds.count(c.tower.kind)) throw ConfigError("tower.kind must be powers_of_two, factorial or custom");
    if (c.tower.kind == "custom" && c.tower.volumes.size() < 2) throw ConfigError("custom tower needs v_0 and at least one more level");
    if (c.tower.kind != "custom" && !c.tower.volumes.empty()) throw ConfigError("tower.volumes applies to custom towers only");
    if (c.tower.top_level && *c.tower.top_level < 1) throw ConfigError("tower.top_level >= 1 required");
    if (!families.count(c.coefficients.family)) throw ConfigError("coefficients.family must be geometric, polynomial, iterated_log or explicit");
    if (c.coefficients.family == "geometric" && !(c.coefficients.q > 0 && c.coefficients.q < 1)) throw ConfigError("q ∈ (0,1) required");
    if (c.coefficients.family != "geometric" && c.coefficients.family != "explicit" && !(c.coefficients.p > 1) )
        throw ConfigError("p > 1 required");
    if (c.coefficients.family == "iterated_log" && c.coefficients.depth < 1) throw ConfigError("iterated log depth >= 1 required");
    if (!rules.count(c.coefficients.tail_rule)) throw ConfigError("coefficients.tail_rule must be none, inverse_factorial or geometric");
    if (c.coefficients.family == "explicit" && c.coefficients.file.empty() && c.coefficients.head.empty() &&
        c.coefficients.tail_rule == "none")
        throw ConfigError("explicit coefficients need a head, a tail rule or a file");
    if (!(c.tol > 0 && c.tol < 1)) throw ConfigError("tol ∈ (0,1) required");
    if (c.max_level < 1 || c.max_level > kDefaultLevelCap) throw ConfigError("max_level ∈ [1, 10000] required");
    if (c.format != "csv" && c.format != "json") throw ConfigError("format must be csv or json");
    if (c.grid.levels < 1) throw ConfigError("grid.levels >= 1 required");
    if (c.grid.walks < 1) throw ConfigError("grid.walks >= 1 required");
    if (c.grid.horizon < 4) throw ConfigError("grid.horizon >= 4 required");
    if (c.grid.design != "fast" && c.grid.design != "slow") throw ConfigError("grid.design must be fast or slow");
    for (double t : c.grid.t)
        if (!(t > 0)) throw ConfigError("grid.t > 0 required");
    for (double u : c.grid.u)
        if (!(u >= 0)) throw ConfigError("grid.u >= 0 required");
    for (double x : c.grid.x)
        if (!(x > 0)) throw ConfigError("grid.x > 0 required");
    for (long n : c.grid.n)
        if (n < 1) throw ConfigError("grid.n >= 1 required");
    for (int k : c.grid.ball_levels)
        if (k < 0) throw ConfigError("grid.ball_levels >= 0 required");
    target_of(c.grid.target);
    rate_of(c.grid.rate);
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json to_json(const RunConfig& c) {
    json j;
    json t{{"kind", c.tower.kind}};
    if (c.tower.kind == "custom") {
        t["volumes"] = c.tower.volumes;
        t["extend"] = c.tower.extend;
    }
    if (c.tower.top_level) t["top_level"] = *c.tower.top_level;
    j["tower"] = t;

    const auto& cs = c.coefficients;
    json s{{"family", cs.family}};
    if (cs.family == "geometric") s["q"] = cs.q;
    if (cs.family == "polynomial" || cs.family == "iterated_log") s["p"] = cs.p;
    if (cs.family == "iterated_log") s["depth"] = cs.depth;
    if (cs.family == "explicit") {
        if (!cs.file.empty()) {
            s["file"] = cs.file;
        } else {
            s["head"] = cs.head;
            s["tail_rule"] = cs.tail_rule;
            if (cs.tail_rule != "none") s["tail_param"] = cs.tail_param;
        }
    }
    j["coefficients"] = s;
    j["tol"] = c.tol;
    j["max_level"] = c.max_level;
    j["seed"] = c.seed;
    j["format"] = c.format;
    j["timestamp"] = c.timestamp;
    const auto& g = c.grid;
    json gj{{"levels", g.levels}, {"walks", g.walks}, {"horizon", g.horizon},
            {"target", g.target}, {"design", g.design}, {"rate", g.rate}};
    if (!g.t.empty()) gj["t"] = g.t;
    if (!g.u.empty()) gj["u"] = g.u;
    if (!g.x.empty()) gj["x"] = g.x;
    if (!g.n.empty()) gj["n"] = g.n;
    if (!g.ball_levels.empty()) gj["ball_levels"] = g.ball_levels;
    j["grid"] = gj;
    return j;
}

std::string config_hash(const RunConfig& c) {
    json j = to_json(c);
    j.erase("format");
    j.erase("timestamp");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

Model build_model(const RunConfig& c) {
    try {
        Tower tower = [&] {
            if (c.tower.kind == "powers_of_two") return Tower::powers_of_two(c.max_level);
            if (c.tower.kind == "factorial") return Tower::factorial(c.max_level);
            std::vector<BigInt> v;
            for (const auto& s : c.tower.volumes) {
                if (s.empty() || !std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
                    throw ConfigError("tower.volumes: \"" + s + "\" is not a decimal integer");
                v.emplace_back(s);
            }
            return Tower::custom(std::move(v), c.tower.extend, c.max_level);
        }();
        if (c.tower.top_level) tower = Tower::truncated(tower, *c.tower.top_level);

        const auto& cs = c.coefficients;
        CoefficientSequence seq = [&] {
            if (cs.family == "geometric") return CoefficientSequence::geometric(cs.q);
            if (cs.family == "polynomial") return CoefficientSequence::polynomial(cs.p);
            if (cs.family == "iterated_log") return CoefficientSequence::iterated_log(cs.depth, cs.p);
            if (!cs.file.empty()) return load_coefficient_file(cs.file);
            TailRule rule;
            if (cs.tail_rule == "inverse_factorial") rule = {TailRule::Kind::InverseFactorial, cs.tail_param};
            if (cs.tail_rule == "geometric") rule = {TailRule::Kind::Geometric, cs.tail_param};
            return CoefficientSequence::explicit_list(cs.head, rule);
        }();
        if (tower.finite()) {
            int K = *tower.top_level();
            auto end = seq.support_end();
            if (!end || *end > K) seq = fold_truncation(seq, K);
        }
        return {tower, seq};
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

const std::vector<CommandInfo>& commands() {
    static const std::vector<CommandInfo> list{
        {"spectrum", "spectral distribution N at its jumps sigma(k)", "k, lambda, N, log_N"},
        {"return", "return probability over grid.t", "t, p, log_p, R, convolution_power_bound"},
        {"profile", "isospectral band T <= Lambda <= Lambda_F over grid.u, condition (A)", "u, T, Lambda_F, ratio"},
        {"heat", "heat kernel and its two-sided bounds over grid.t x grid.ball_levels",
         "t, level, rho, h, lower, upper, inside"},
        {"walk", "Monte-Carlo level frequencies over grid.n against the exact masses",
         "n, level, frequency, se, ci_low, ci_high, exact, z"},
        {"recurrence", "recurrence verdict from sum 1/(v_k sigma(k)) up to grid.horizon",
         "k, log_term, log_lawler_term, partial_sum"},
        {"design", "designed coefficients for grid.target (grid.design fast|slow); loadable as coefficients.file",
         "k, c, sigma"},
        {"transform", "Legendre and Kohlbecker transforms of grid.rate with its closed-form asymptotic reference, and L*(F) of grid.target",
         "x, legendre, kohlbecker, reference, ratio, conjugate_target"},
        {"validate", "oracle comparisons on the default finite fixtures", "check, passed, detail"},
    };
    return list;
}

CommandResult cmd_spectrum(const RunConfig& c) {
    Model m = build_model(c);
    CommandResult r{"spectrum", {{"k", "lambda", "N", "log_N"}, {}}, {}, 0};
    int K = std::min(c.grid.levels - 1, m.tower.max_level());
    if (auto end = m.coeffs.support_end()) K = std::min<long>(K, *end);
    auto points = spectrum_points(m.coeffs, K);
    for (int k = 0; k <= K; ++k) {
        double log_n = 0.0 - m.tower.log_volume(k);
        r.table.rows.push_back({static_cast<long long>(k), points[k], std::exp(log_n), log_n});
    }
    r.summary = {{"family", family_name(m.coeffs.family())}, {"tower", m.tower.describe()},
                 {"jumps", std::to_string(K + 1)}};
    return r;
}

CommandResult cmd_return(const RunConfig& c) {
    Model m = build_model(c);
    CommandResult r{"return", {{"t", "p", "log_p", "R", "convolution_power_bound"}, {}}, {}, 0};
    auto grid = or_default(c.grid.t, log_grid(1, 1e6, 4));
    std::vector<double> xs, ys;
    for (double t : grid) {
        double lp = log_return_probability(m.coeffs, m.tower, t, series(c));
        double bound = convolution_power_bound(m.coeffs, m.tower, t, series(c));
        r.table.rows.push_back({t, std::exp(lp), lp, -lp / t, bound});
        xs.push_back(std::log(t));
        ys.push_back(lp);
    }
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= xs.size();
        my /= ys.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
        r.summary.push_back({"slope_log_p_vs_log_t", fmt(sxx > 0 ? sxy / sxx : 0.0)});
    }
    r.summary.push_back({"t_range", fmt(grid.front()) + ".." + fmt(grid.back())});
    return r;
}

CommandResult cmd_profile(const RunConfig& c) {
    Model m = build_model(c);
    CommandResult r{"profile", {{"u", "T", "Lambda_F", "ratio"}, {}}, {}, 0};
    auto grid = or_default(c.grid.u, log_grid(10, 1e12, 2));
    ProfileBand band(m.coeffs, m.tower);
    // Lambda_F is defined for u > 1.
    for (double u : grid) {
        double lo = band.lower(u), hi = u > 1 ? band.upper(u) : std::nan("");
        r.table.rows.push_back({u, lo, hi, lo > 0 ? hi / lo : kInf});
    }
    std::vector<double> inner;
    std::copy_if(grid.begin(), grid.end(), std::back_inserter(inner), [](double u) { return u > 1; });
    auto report = check_band(band, inner);
    auto a = condition_A(m.coeffs);
    r.summary = {{"band_violations", std::to_string(report.violations)},
                 {"band_ratio_min", fmt(report.min_ratio)},
                 {"band_ratio_max", fmt(report.max_ratio)},
                 {"condition_A", a.holds ? "holds" : "fails"},
                 {"condition_A_lambda", fmt(a.lambda)},
                 {"condition_A_horizon", std::to_string(a.horizon)}};
    return r;
}

CommandResult cmd_heat(const RunConfig& c) {
    Model m = build_model(c);
    CommandResult r{"heat", {{"t", "level", "rho", "h", "lower", "upper", "inside"}, {}}, {}, 0};
    auto times = or_default(c.grid.t, log_grid(1, 1e4, 1));
    std::vector<int> levels = c.grid.ball_levels;
    if (levels.empty())
        for (int k = 0; k <= std::min(10, m.tower.max_level()); ++k) levels.push_back(k);
    std::size_t outside = 0;
    for (double t : times) {
        if (t < 1) throw ConfigError("heat: grid.t >= 1 required for the bounds");
        for (int k : levels) {
            double h = heat_kernel_at_level(m.coeffs, m.tower, t, k, series(c));
            auto b = heat_kernel_bounds(m.coeffs, m.tower, t, k, series(c));
            bool inside = b.lower <= h && h <= b.upper;
            outside += !inside;
            r.table.rows.push_back({t, static_cast<long long>(k), b.rho, h, b.lower, b.upper, inside});
        }
    }
    auto b = heat_kernel_bounds(m.coeffs, m.tower, times.front(), levels.front(), series(c));
    r.summary = {{"outside_band", std::to_string(outside)}, {"c_low", fmt(b.c_low)}, {"c_ret", fmt(b.c_ret)},
                 {"c_up", fmt(b.c_up)}, {"kappa", fmt(b.kappa)}};
    return r;
}

CommandResult cmd_walk(const RunConfig& c) {
    Model m = build_model(c);
    CommandResult r{"walk", {{"n", "level", "frequency", "se", "ci_low", "ci_high", "exact", "z"}, {}}, {}, 0};
    auto times = or_default(c.grid.n, std::vector<long>{1, 2, 4, 8, 16, 32});
    int top = std::min(5, m.tower.max_level());
    MonteCarloOptions opts{static_cast<std::uint64_t>(c.grid.walks), c.seed, 0};
    auto h = simulate_levels(m.coeffs, m.tower, times, opts);
    double max_z = 0.0;
    for (std::size_t i = 0; i < h.times.size(); ++i)
        for (int j = 0; j <= top; ++j) {
            double f = h.frequency(i, j);
            double exact = exact_level_mass(m.coeffs, m.tower, static_cast<double>(h.times[i]), j);
            double se = std::sqrt(exact * (1 - exact) / static_cast<double>(h.walks));
            double z = se > 0 ? (f - exact) / se : 0.0;
            max_z = std::max(max_z, std::abs(z));
            auto pr = proportion(h.counts[i][j], h.walks);
            r.table.rows.push_back({static_cast<long long>(h.times[i]), static_cast<long long>(j), f, pr.se,
                                    f - 1.96 * pr.se, f + 1.96 * pr.se, exact, z});
        }
    r.summary = {{"walks", std::to_string(h.walks)}, {"seed", std::to_string(h.seed)}, {"max_abs_z", fmt(max_z)},
                 {"comparisons", std::to_string(r.table.rows.size())}};
    return r;
}

CommandResult cmd_recurrence(const RunConfig& c) {
    Model m = build_model(c);
    CommandResult r{"recurrence", {{"k", "log_term", "log_lawler_term", "partial_sum"}, {}}, {}, 0};
    auto rep = recurrence_classify(m.coeffs, m.tower, c.grid.horizon);
    for (std::size_t k = 0; k < rep.log_terms.size(); ++k)
        r.table.rows.push_back({static_cast<long long>(k), rep.log_terms[k],
                                k < rep.log_lawler_terms.size() ? rep.log_lawler_terms[k] : std::nan(""),
                                k < rep.partial_sums.size() ? rep.partial_sums[k] : std::nan("")});
    r.summary = {{"verdict", verdict_name(rep.verdict)}, {"method", rep.method},
                 {"terms", std::to_string(rep.log_terms.size())}};
    if (!rep.partial_sums.empty()) r.summary.push_back({"last_partial_sum", fmt(rep.partial_sums.back())});
    if (rep.verdict == Verdict::Inconclusive) r.status = 1;
    return r;
}

CommandResult cmd_design(const RunConfig& c) {
    Model m = build_model(c);
    CommandResult r{"design", {{"k", "c", "sigma"}, {}}, {}, 0};
    ScalarFunction F = target_of(c.grid.target);
    Design d = c.grid.design == "fast" ? design_fast_decay(m.tower, F) : design_slow_decay(m.tower, F);
    int K = std::min(c.grid.levels - 1, m.tower.max_level());
    for (int k = 0; k <= K; ++k) r.table.rows.push_back({static_cast<long long>(k), d.seq.coeff(k), d.seq.tail(k)});
    r.summary = {{"rate", d.rate}, {"k0", std::to_string(d.k0)}, {"provenance", d.seq.provenance()},
                 {"folded_sigma", fmt(d.seq.tail(K))}};
    return r;
}

CommandResult cmd_transform(const RunConfig& c) {
    CommandResult r{"transform", {{"x", "legendre", "kohlbecker", "reference", "ratio", "conjugate_target"}, {}}, {}, 0};
    Rate rate = rate_of(c.grid.rate);
    ScalarFunction F = target_of(c.grid.target);
    auto grid = or_default(c.grid.x, log_grid(1, 1e6, 1));
    std::size_t failed = 0, boundary = 0;
    for (double x : grid) {
        double L = legendre(rate.M, x);
        double K = std::nan("");
        try {
            K = kohlbecker(rate.M, x);
        } catch (const RunawayError&) {
            ++failed;
        }
        double ref = rate.reference(x);
        // The sup of -tau/x + F(tau) can sit at tau -> 0 (log: x < e); left blank.
        double conj = std::nan("");
        try {
            conj = conjugate_legendre(F, 1.0 / x);
        } catch (const RunawayError&) {
            ++boundary;
        } catch (const DomainError&) {
            ++boundary;
        }
        r.table.rows.push_back({x, L, K, ref, L / ref, conj});
    }
    r.summary = {{"rate", rate.M.name()}, {"target", F.name()}, {"kohlbecker_failures", std::to_string(failed)},
                 {"conjugate_not_interior", std::to_string(boundary)}};
    if (failed) r.status = 1;
    return r;
}

CommandResult cmd_validate(const RunConfig&) {
    CommandResult r{"validate", {{"check", "passed", "detail"}, {}}, {}, 0};
    std::size_t failed = 0;
    for (const auto& chk : oracle_suite()) {
        failed += !chk.passed;
        r.table.rows.push_back({chk.name, chk.passed, chk.detail});
    }
    r.summary = {{"checks", std::to_string(r.table.rows.size())}, {"failed", std::to_string(failed)}};
    if (failed) r.status = 1;
    return r;
}

CommandResult run_command(const std::string& name, const RunConfig& c) {
    if (name == "spectrum") return cmd_spectrum(c);
    if (name == "return") return cmd_return(c);
    if (name == "profile") return cmd_profile(c);
    if (name == "heat") return cmd_heat(c);
    if (name == "walk") return cmd_walk(c);
    if (name == "recurrence") return cmd_recurrence(c);
    if (name == "design") return cmd_design(c);
    if (name == "transform") return cmd_transform(c);
    if (name == "validate") return cmd_validate(c);
    throw ConfigError("unknown command " + name);
}

namespace {

std::string csv_cell(const Cell& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, double>) {
                return format_double(x);
            } else if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (x.find_first_of(",\"\n") == std::string::npos) return x;
                std::string q = "\"";
                for (char ch : x) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                return q + "\"";
            } else {
                return std::to_string(x);
            }
        },
        v);
}

json json_cell(const Cell& v) {
    return std::visit([](const auto& x) { return json(x); }, v);
}

}  // namespace

std::string render_csv(const CommandResult& r, const RunConfig& c, const std::optional<std::string>& timestamp) {
    std::string hash = config_hash(c), seed = std::to_string(c.seed);
    std::ostringstream out;
    for (const auto& col : r.table.columns) out << col << ',';
    out << "config_hash,seed" << (timestamp ? ",generated_at" : "") << '\n';
    for (const auto& row : r.table.rows) {
        for (const auto& v : row) out << csv_cell(v) << ',';
        out << hash << ',' << seed;
        if (timestamp) out << ',' << *timestamp;
        out << '\n';
    }
    return out.str();
}

std::string render_json(const CommandResult& r, const RunConfig& c, const std::optional<std::string>& timestamp) {
    json meta{{"command", r.command}, {"config_hash", config_hash(c)}, {"seed", c.seed}, {"config", to_json(c)},
              {"columns", r.table.columns}, {"status", r.status}};
    json summary = json::object();
    for (const auto& [k, v] : r.summary) summary[k] = v;
    meta["summary"] = summary;
    if (timestamp) meta["generated_at"] = *timestamp;
    json rows = json::array();
    for (const auto& row : r.table.rows) {
        json o = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) o[r.table.columns[i]] = json_cell(row[i]);
        rows.push_back(o);
    }
    return json{{"meta", meta}, {"rows", rows}}.dump(2) + "\n";
}

}  // namespace ultrawalk::cli
