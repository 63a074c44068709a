#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace planehash::cli {

using Config = nlohmann::json;

inline constexpr std::string_view kVersion = "0.1.0";

/// Subcommands: gen, ingest, bench-collision, rho-curve, train-lbh,
/// build-index, query, eval, run-al.
const std::vector<std::string>& command_names();

/// Default configuration of a command, with every key it accepts.
Config default_config(std::string_view command);

/// Merges `user` over the defaults and validates it. Unknown keys are rejected.
/// A manifest written by a previous run is accepted as-is (its "config" member
/// is used).
Config resolve_config(std::string_view command, const Config& user);

/// Loads a JSON config or manifest file.
Config load_config(const std::string& path);

/// Runs one command, writing its outputs and manifest.json into `out_dir`.
/// Returns the paths written.
std::vector<std::string> run_command(std::string_view command, const Config& config, const std::string& out_dir);

}  // namespace planehash::cli
