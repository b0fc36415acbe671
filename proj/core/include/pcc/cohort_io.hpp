#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcc/datagen.hpp"

namespace pcc {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Columnar CSV: x1..xp,score[,label]. Values are written in shortest
/// round-trip form, so read_cohort_csv(write_cohort_csv(c)) reproduces the
/// numbers exactly.
void write_cohort_csv(const Cohort& cohort, std::ostream& out);

/// Requires a `score` column; `label` is optional (0/1); every other column is
/// a feature, in file order. Errors name the 1-based data row and column.
Cohort read_cohort_csv(std::istream& in);

/// Compact little-endian binary cache that also carries generation info and
/// prevalence.
void write_cohort_binary(const Cohort& cohort, std::ostream& out);
Cohort read_cohort_binary(std::istream& in);

/// Chooses the format from the extension: ".bin" is binary, anything else CSV.
void save_cohort(const Cohort& cohort, const std::filesystem::path& path);
Cohort load_cohort(const std::filesystem::path& path);

struct ScoreSummary {
  std::size_t n = 0;
  std::size_t p = 0;
  bool has_labels = false;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> quantile_levels;
  std::vector<double> quantiles;
  std::vector<double> histogram_edges;  // bins + 1
  std::vector<std::size_t> histogram_counts;
};

/// Quantiles (type 7) at 0, 1, 5, 10, 25, 50, 75, 90, 95, 99, 100 percent and
/// an equal-width histogram over [min, max].
ScoreSummary summarize_scores(const Cohort& cohort, std::size_t bins = 30);

}  // namespace pcc
