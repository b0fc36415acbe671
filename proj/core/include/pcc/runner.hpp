#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcc/config.hpp"
#include "pcc/parallel.hpp"

namespace pcc {

/// Commands shared by the CLI and the service.
inline constexpr std::string_view kCommands[] = {"surface", "power", "revision", "robustness", "compare", "gen-cohort"};

bool is_command(std::string_view name) noexcept;

using CohortPtr = std::shared_ptr<const Cohort>;
using CohortResolver = std::function<CohortPtr(const CohortSource&)>;

/// Generates lda/normal cohorts and loads files relative to `base_dir`.
/// Handles are rejected unless `handles` resolves them.
CohortResolver make_cohort_resolver(std::filesystem::path base_dir,
                                    std::function<CohortPtr(const std::string&)> handles = nullptr);

struct Artifact {
  std::string name;     // file name inside the output directory
  std::string content;  // exact bytes
};

struct RunOutput {
  std::string command;
  Seed seed = 0;
  Json config;  // effective config (seed filled in)
  /// Result document; its dump(2) plus a newline is result.json.
  Json result;
  std::vector<Artifact> artifacts;
  /// Unreliable or infeasible parts; the CLI exits 3 when set.
  bool flagged = false;
  std::vector<std::string> notes;
};

/// The exact bytes of result.json.
std::string result_bytes(const Json& result);

/// Parses and validates `config` for `command` without running it. Returns
/// the effective config with `seed` filled in (from the override, the
/// config, or `fallback_seed`). Throws ConfigError.
Json prepare_config(std::string_view command, const Json& config, std::optional<Seed> seed_override,
                    Seed fallback_seed);

/// Runs a prepared config. Throws InputError, InfeasibleDesign or Cancelled.
RunOutput run_command(std::string_view command, const Json& effective_config, const CohortResolver& resolve,
                      const ExecutionContext& ctx = {});

/// Applies the config's thread count unless the context already sets more.
ExecutionContext with_threads(const ExecutionContext& ctx, const Json& effective_config);

}  // namespace pcc
