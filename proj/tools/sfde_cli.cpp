#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sfde/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for implicit theta-scheme"
                 " functional SDEs"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int threads = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment configuration file")->required();
        sub->add_option("--seed", seed, "override the master seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads for path loops");
    };

    for (const auto& name : sfde::known_subcommands()) {
        add_common(app.add_subcommand(name, "run the " + name + " experiment"));
    }
    add_common(app.add_subcommand("validate", "validate a configuration without running"));

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        if (sub == "validate") {
            std::cout << sfde::validate_config(config_path, "validate");
            return 0;
        }
        const sfde::ExperimentConfig cfg = sfde::load_config(config_path, sub, seed, out_dir);
        std::cout << sfde::run_experiment(sub, cfg, threads);
        return 0;
    } catch (const sfde::ConfigError& e) {
        std::cerr << "error: config_invalid field=" << e.field << " message=" << e.what() << "\n";
        return 2;
    } catch (const sfde::SolverDivergedError& e) {
        std::cerr << "error: solver_diverged step=" << e.step << " residual=" << e.residual
                  << " message=" << e.what() << "\n";
        return 3;
    } catch (const sfde::IoError& e) {
        std::cerr << "error: io message=" << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: failure message=" << e.what() << "\n";
        return 1;
    }
}
