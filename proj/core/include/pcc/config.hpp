#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcc/experiments.hpp"
#include "pcc/serialization.hpp"

namespace pcc {

/// Invalid configuration; the message starts with the offending field path
/// (e.g. "grid.w[3]: must lie in [0, 1]") or, for syntax errors, with
/// "source:line:column".
class ConfigError : public InputError {
 public:
  ConfigError(std::string field, const std::string& message)
      : InputError(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Parses JSON text; syntax errors carry line and column.
Json parse_json_text(std::string_view text, std::string_view source_name = "config");
Json load_json_file(const std::filesystem::path& path);

/// Canonical form (sorted keys, compact) used for hashing.
std::string canonical_dump(const Json& j);
/// 64-bit FNV-1a of the canonical form, as 16 hex digits.
std::string config_hash(const Json& j);

struct CohortSource {
  enum class Kind { lda, normal, file, handle } kind = Kind::lda;
  CohortSpec spec;     // lda, normal
  std::string path;    // file
  std::string handle;  // handle (service uploads)
  std::string name;    // optional display name (robustness)
};

struct SurfaceRequest {
  CohortSource cohort;
  std::vector<double> k_grid;  // empty: default quantile grid
  std::vector<double> w_grid;  // empty: default grid
  std::size_t k_points = 25;
  std::size_t w_points = 25;
  std::size_t n = 100;
  std::size_t replicates = 200;
  std::optional<Seed> seed;
  AssumedParams assumed;
  std::size_t threads = 1;
};

struct NamedParams {
  std::string name;
  ModificationParams params;
};

struct PowerRequest {
  CohortSource cohort;
  std::vector<NamedParams> scenarios;
  std::vector<DesignSpec> designs;
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 200;
  double level = 0.05;
  std::optional<Seed> seed;
  std::size_t threads = 1;
};

struct RevisionRequest {
  CohortSource cohort;
  ModificationParams truth;
  std::vector<DesignSpec> designs;
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 200;
  LambdaSpec lambda;
  double alt_threshold = 0.0;
  std::optional<Seed> seed;
  std::size_t threads = 1;
};

struct RobustnessRequest {
  std::vector<CohortSource> cohorts;
  std::vector<NamedParams> assumed;
  std::vector<Criterion> criteria;
  std::vector<double> k_grid;
  std::vector<double> w_grid;
  std::size_t k_points = 25;
  std::size_t w_points = 25;
  std::size_t n = 100;
  std::size_t replicates = 200;
  std::optional<Seed> seed;
  std::size_t threads = 1;
};

struct CompareRequest {
  CohortSource cohort;
  DesignConfig design{};
  std::size_t n = 100;
  std::size_t replicates = 200;
  std::optional<Seed> seed;
  AssumedParams assumed;
  std::size_t threads = 1;
};

struct GenCohortRequest {
  CohortSource cohort;  // lda or normal
  std::optional<ModificationParams> outcomes;
  Seed outcome_seed = 1;  // outcomes.seed, else the master seed
  std::optional<Seed> seed;
  enum class Format { csv, binary } format = Format::csv;
};

/// Schema validation: unknown keys, wrong types and out-of-range values are
/// reported with their field path.
SurfaceRequest parse_surface_request(const Json& j);
PowerRequest parse_power_request(const Json& j);
RevisionRequest parse_revision_request(const Json& j);
RobustnessRequest parse_robustness_request(const Json& j);
CompareRequest parse_compare_request(const Json& j);
GenCohortRequest parse_gen_cohort_request(const Json& j);

/// Seed used when a CLI config gives none.
inline constexpr Seed kDefaultSeed = 1;

}  // namespace pcc
