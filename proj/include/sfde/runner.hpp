#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sfde/integrator.hpp"

namespace sfde {

// Parsed experiment configuration: one model, one scheme, one initial
// segment, one experiment block, one master seed.
struct ExperimentConfig {
    SfdeModel model;
    SchemeConfig scheme;
    Segment initial;
    std::uint64_t master_seed = 0;
    std::string output_dir;
    nlohmann::json experiment;  // subcommand-specific block, already validated
    std::string config_hash;    // hex digest of the canonical serialisation
    std::vector<std::string> warnings;  // non-fatal findings, echoed in summaries

    ExperimentConfig(SfdeModel model, SchemeConfig scheme, Segment initial);
};

// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::string& subcommand,
                             std::optional<std::uint64_t> seed_override = std::nullopt,
                             std::optional<std::string> out_override = std::nullopt);

// Validation-only entry point used by the `validate` subcommand.
std::string validate_config(const std::filesystem::path& path, const std::string& subcommand);

// Runs one subcommand; writes CSV artifacts plus a summary text block under
// the output directory and returns the summary.
std::string run_experiment(const std::string& subcommand, const ExperimentConfig& config,
                           int threads);

const std::vector<std::string>& known_subcommands();

}  // namespace sfde
