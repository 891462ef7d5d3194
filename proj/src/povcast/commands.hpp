#pragma once

#include "povcast/analysis.hpp"
#include "povcast/gibbs.hpp"
#include "povcast/manifest.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace povcast {

inline constexpr std::uint64_t kDefaultSeed = 1;

// Each command takes its options as a JSON object. Every key is optional and
// unknown keys are rejected. The manifest stores the fully resolved object, so
// replay feeds it straight back.
//
// fit:       data, smooth [j1, j2] (1-based), weights [c1, c2], iterations,
//            burn_in, thin, grid, seed (integer or "random"), truncation_correction,
//            random_start
// report:    samples, typical_total, svg
// calibrate: replicates, base [6], drop_zero_rows, entities, observed_periods,
//            iterations, burn_in, thin, grid, seed, workers, truncation_correction
// validate:  data, train_rows, train_cols, target_col, split (all 1-based),
//            iterations, burn_in, thin, grid, seed, truncation_correction

using Logger = std::function<void(const std::string&)>;

struct CommandResult {
    RunManifest manifest;
    std::vector<std::string> notes;
};

CommandResult cmd_fit(const nlohmann::json& options, const std::filesystem::path& out_dir,
                      const Logger& log = {});
CommandResult cmd_report(const nlohmann::json& options, const std::filesystem::path& out_dir,
                         const Logger& log = {});
/// Writes every output, then throws DegenerateError if more than 20% of the
/// replicates failed.
CommandResult cmd_calibrate(const nlohmann::json& options, const std::filesystem::path& out_dir,
                            const Logger& log = {});
CommandResult cmd_validate(const nlohmann::json& options, const std::filesystem::path& out_dir,
                           const Logger& log = {});

/// Dispatches on the command name.
CommandResult run_command(const std::string& command, const nlohmann::json& options,
                          const std::filesystem::path& out_dir, const Logger& log = {});

struct ReplayResult {
    CommandResult run;
    std::vector<std::string> matched;
    std::vector<std::string> mismatched;
};

/// Re-runs the command recorded in a manifest into out_dir and compares artifact
/// hashes. Throws FormatError if a recorded input no longer has the same hash.
ReplayResult replay(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir,
                    const Logger& log = {});

/// Chain options as accepted by fit: iterations, burn_in, thin, grid, seed,
/// truncation_correction, random_start.
ChainConfig chain_config_from_json(const nlohmann::json& options);

/// Parses "3", "1-9" or "1,2,5-7" into ascending 1-based indices.
std::vector<std::size_t> parse_index_list(const std::string& text);

} // namespace povcast
