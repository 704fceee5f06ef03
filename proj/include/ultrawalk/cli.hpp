#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ultrawalk/core.hpp"
#include "ultrawalk/measure.hpp"

// Run configuration, command orchestration and table emission.
namespace ultrawalk::cli {

// A configuration that violates an invariant; the message names it.
struct ConfigError : DomainError {
    using DomainError::DomainError;
};

struct TowerSpec {
    std::string kind = "powers_of_two";  // powers_of_two | factorial | custom
    std::vector<std::string> volumes;    // custom: decimal v_0, v_1, ...
    bool extend = false;                 // custom: repeat the last index past the list
    std::optional<int> top_level;        // truncate to G_K
    bool operator==(const TowerSpec&) const = default;
};

struct CoefficientSpec {
    std::string family = "geometric";  // geometric | polynomial | iterated_log | explicit
    double q = 0.5;
    double p = 2.0;
    int depth = 1;
    // explicit: listed head and its continuation.
    std::vector<double> head;
    std::string tail_rule = "none";  // none | inverse_factorial | geometric
    double tail_param = 0.0;
    // explicit: a coefficient table with columns c and sigma, as written by
    // the design command. The last listed level absorbs sigma.
    std::string file;
    bool operator==(const CoefficientSpec&) const = default;
};

// Command grids. Empty lists take per-command defaults.
struct Grids {
    std::vector<double> t;
    std::vector<double> u;
    std::vector<double> x;
    std::vector<long> n;
    std::vector<int> ball_levels;
    int levels = 30;
    long walks = 100000;
    int horizon = 400;
    std::string target = "log";   // log | power(a)
    std::string design = "fast";  // fast | slow
    std::string rate = "power(1)";  // power(b) | log_power(a) | iterated_exp(k,nu)
    bool operator==(const Grids&) const = default;
};

struct RunConfig {
    TowerSpec tower;
    CoefficientSpec coefficients;
    double tol = kDefaultTol;
    int max_level = kDefaultLevelCap;
    std::uint64_t seed = 1;
    std::string format = "csv";  // csv | json
    bool timestamp = true;
    Grids grid;
    bool operator==(const RunConfig&) const = default;
};

// Grid lists accept explicit arrays or {"from", "to", "per_decade"}, which
// parse to the expanded list. Unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
// Canonical form: parse_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& c);
// FNV-1a over the canonical form without the output fields, as 16 hex digits.
std::string config_hash(const RunConfig& c);

// Tower and coefficients; infinite sequences on a truncated tower are folded
// to its top level.
Model build_model(const RunConfig& c);

using Cell = std::variant<long long, double, std::string, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct CommandResult {
    std::string command;
    Table table;
    // Verdicts with the realized constants behind them.
    std::vector<std::pair<std::string, std::string>> summary;
    // 0 success, 1 diverged or inconclusive.
    int status = 0;
};

struct CommandInfo {
    std::string name;
    std::string description;
    std::string columns;
};
const std::vector<CommandInfo>& commands();

CommandResult cmd_spectrum(const RunConfig& c);
CommandResult cmd_return(const RunConfig& c);
CommandResult cmd_profile(const RunConfig& c);
CommandResult cmd_heat(const RunConfig& c);
CommandResult cmd_walk(const RunConfig& c);
CommandResult cmd_recurrence(const RunConfig& c);
CommandResult cmd_design(const RunConfig& c);
CommandResult cmd_transform(const RunConfig& c);
CommandResult cmd_validate(const RunConfig& c);
CommandResult run_command(const std::string& name, const RunConfig& c);

// Row 1 holds the column names; config_hash and seed close every row, and
// generated_at follows when a timestamp is given.
std::string render_csv(const CommandResult& r, const RunConfig& c, const std::optional<std::string>& timestamp);
// {"meta": {...}, "rows": [{column: value}, ...]}.
std::string render_json(const CommandResult& r, const RunConfig& c, const std::optional<std::string>& timestamp);

// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace ultrawalk::cli
