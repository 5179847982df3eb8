#include "pspin/runner/commands.hpp"
#include "pspin/runner/config.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>

int main(int argc, char** argv) {
    using namespace pspin::runner;

    CLI::App app{"pspin: multi-species spherical spin glass experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out;
    bool print_config = false;

    const std::map<std::string, std::string> about{
        {"verify", "run the property suite on the configured model"},
        {"free-energy", "free energy per seed at the configured beta"},
        {"ground-state", "constrained ground-state energy at the configured overlap"},
        {"tap-scan", "TAP inequality gap over an overlap grid"},
        {"multisamp", "coupled-replica hit rates over an overlap grid"},
    };
    for (const auto& name : command_names()) {
        const auto it = about.find(name);
        CLI::App* sub = app.add_subcommand(name, it == about.end() ? "" : it->second);
        sub->add_option("--config", config_path, "JSON experiment config (defaults when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_flag("--print-config", print_config, "print the resolved config and exit");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    ExperimentConfig config;
    try {
        if (!config_path.empty()) config = load_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (seed) config.master_seed = *seed;
    if (workers) config.workers = *workers;
    if (out) config.out_dir = *out;

    if (print_config) {
        std::cout << serialize_config(config).dump(2) << '\n';
        return 0;
    }

    try {
        const CommandResult result = run_command(command, config);
        std::cout << result.summary;
        for (const auto& f : result.files) std::cout << "wrote " << config.out_dir << '/' << f << '\n';
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << command << " failed: " << e.what() << '\n';
        return 1;
    }
}
