#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ultrawalk/cli.hpp"

namespace cli = ultrawalk::cli;

namespace {

std::string utc_now() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random walks on locally finite groups: spectra, return probabilities, profiles, heat kernels."};
    app.require_subcommand(0, 1);

    std::string config_path, out_path, format;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<int> max_level;
    bool no_timestamp = false, print_config = false;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "RNG seed (u64)");
    app.add_option("--tol", tol, "series truncation tolerance");
    app.add_option("--max-level", max_level, "tower level cap");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--no-timestamp", no_timestamp, "omit generated_at for byte-identical output");
    app.add_option("--out", out_path, "write the table here instead of stdout");
    app.add_flag("--print-config", print_config, "print the canonical configuration and exit");

    for (const auto& info : cli::commands()) {
        auto* sub = app.add_subcommand(info.name, info.description);
        sub->fallthrough();
        sub->footer("Columns: " + info.columns + ", config_hash, seed[, generated_at]");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        cli::RunConfig config = config_path.empty() ? cli::RunConfig{} : cli::load_config(config_path);
        if (seed) config.seed = *seed;
        if (tol) config.tol = *tol;
        if (max_level) config.max_level = *max_level;
        if (!format.empty()) config.format = format;
        if (no_timestamp) config.timestamp = false;
        config = cli::parse_config(cli::to_json(config));

        if (print_config) {
            std::cout << cli::to_json(config).dump(2) << '\n';
            return 0;
        }
        auto subs = app.get_subcommands();
        if (subs.empty()) {
            std::cerr << "a command is required; see --help\n";
            return 2;
        }
        auto result = cli::run_command(subs.front()->get_name(), config);
        std::optional<std::string> stamp;
        if (config.timestamp) stamp = utc_now();
        std::string text = config.format == "json" ? cli::render_json(result, config, stamp)
                                                   : cli::render_csv(result, config, stamp);
        if (out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                std::cerr << "cannot write " << out_path << '\n';
                return 2;
            }
            out << text;
        }
        if (config.format == "csv")
            for (const auto& [k, v] : result.summary) std::cerr << "# " << k << ": " << v << '\n';
        return result.status;
    } catch (const ultrawalk::DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ultrawalk::RunawayError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return 1;
    }
}
