#include "pcc/cohort_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "pcc/errors.hpp"
#include "pcc/surface.hpp"

namespace pcc {

static_assert(std::endian::native == std::endian::little, "binary cohort cache assumes a little-endian host");

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void row_error(std::size_t row, std::string_view column, const std::string& what) {
  throw InputError("row " + std::to_string(row) + " (line " + std::to_string(row + 1) + "), column '" +
                   std::string(column) + "': " + what);
}

double parse_value(std::string_view field, std::size_t row, std::string_view column) {
  if (field.empty()) row_error(row, column, "empty value");
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec == std::errc::result_out_of_range) row_error(row, column, "value out of range");
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    row_error(row, column, "not a number: '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) row_error(row, column, "non-finite value");
  return v;
}

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw InputError("binary cohort: truncated file");
  return v;
}

void put_vector(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vector(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ull << 32)) throw InputError("binary cohort: implausible vector length");
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw InputError("binary cohort: truncated file");
  return v;
}

constexpr char kMagic[8] = {'P', 'C', 'C', 'C', 'O', 'H', '1', '\0'};

}  // namespace

void write_cohort_csv(const Cohort& cohort, std::ostream& out) {
  const std::size_t p = cohort.dim();
  for (std::size_t j = 0; j < p; ++j) out << 'x' << (j + 1) << ',';
  out << "score";
  if (cohort.labels) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      out << format_double(cohort.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << ',';
    }
    out << format_double(cohort.scores[i]);
    if (cohort.labels) out << ',' << static_cast<int>((*cohort.labels)[i]);
    out << '\n';
  }
}

Cohort read_cohort_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw InputError("cohort CSV: missing header");
  const auto header = split(line);
  std::ptrdiff_t score_col = -1;
  std::ptrdiff_t label_col = -1;
  std::vector<std::size_t> feature_cols;
  std::set<std::string_view> seen;
  std::vector<std::string> names(header.begin(), header.end());
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = header[c];
    if (name.empty()) throw InputError("cohort CSV: empty column name in header (column " + std::to_string(c + 1) + ")");
    if (!seen.insert(name).second) throw InputError("cohort CSV: duplicate column '" + std::string(name) + "'");
    if (name == "score") {
      score_col = static_cast<std::ptrdiff_t>(c);
    } else if (name == "label") {
      label_col = static_cast<std::ptrdiff_t>(c);
    } else {
      feature_cols.push_back(c);
    }
  }
  if (score_col < 0) throw InputError("cohort CSV: header has no 'score' column");

  std::vector<double> scores;
  std::vector<double> feats;
  std::vector<std::uint8_t> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw InputError("row " + std::to_string(row) + " (line " + std::to_string(row + 1) + "): expected " +
                       std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    scores.push_back(parse_value(fields[static_cast<std::size_t>(score_col)], row, "score"));
    for (std::size_t c : feature_cols) feats.push_back(parse_value(fields[c], row, names[c]));
    if (label_col >= 0) {
      const std::string_view f = fields[static_cast<std::size_t>(label_col)];
      if (f != "0" && f != "1") row_error(row, "label", "label must be 0 or 1");
      labels.push_back(f == "1" ? 1 : 0);
    }
  }
  if (row == 0) throw InputError("cohort CSV: no data rows");

  Cohort c;
  c.scores = std::move(scores);
  const auto n = static_cast<Eigen::Index>(c.scores.size());
  const auto p = static_cast<Eigen::Index>(feature_cols.size());
  c.features = FeatureMatrix(n, p);
  if (p > 0) std::copy(feats.begin(), feats.end(), c.features.data());
  if (label_col >= 0) c.labels = std::move(labels);
  return c;
}

void write_cohort_binary(const Cohort& cohort, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, cohort.size());
  put<std::uint64_t>(out, cohort.dim());
  put<std::uint8_t>(out, cohort.labels ? 1 : 0);
  put<std::uint8_t>(out, cohort.generation ? 1 : 0);
  put<double>(out, cohort.prevalence_initial);
  if (cohort.generation) {
    const GenerationInfo& g = *cohort.generation;
    put<std::uint8_t>(out, g.kind == GenerationInfo::Kind::lda ? 0 : 1);
    put<double>(out, g.source.intercept);
    put_vector(out, g.source.coefficients);
    put<double>(out, g.score_mean);
    put<double>(out, g.score_sd);
    put<std::uint64_t>(out, g.seed);
    put<std::uint8_t>(out, g.outcome_params ? 1 : 0);
    if (g.outcome_params) {
      put<double>(out, g.outcome_params->alpha0);
      put<double>(out, g.outcome_params->alpha1);
      put_vector(out, g.outcome_params->gamma);
    }
    put<std::uint64_t>(out, g.outcome_seed);
  }
  out.write(reinterpret_cast<const char*>(cohort.features.data()),
            static_cast<std::streamsize>(cohort.features.size() * static_cast<Eigen::Index>(sizeof(double))));
  out.write(reinterpret_cast<const char*>(cohort.scores.data()),
            static_cast<std::streamsize>(cohort.scores.size() * sizeof(double)));
  if (cohort.labels) {
    out.write(reinterpret_cast<const char*>(cohort.labels->data()), static_cast<std::streamsize>(cohort.labels->size()));
  }
}

Cohort read_cohort_binary(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw InputError("binary cohort: bad magic");
  const auto n = get<std::uint64_t>(in);
  const auto p = get<std::uint64_t>(in);
  if (n > (1ull << 32) || p > (1ull << 20)) throw InputError("binary cohort: implausible dimensions");
  const bool has_labels = get<std::uint8_t>(in) != 0;
  const bool has_generation = get<std::uint8_t>(in) != 0;
  Cohort c;
  c.prevalence_initial = get<double>(in);
  if (has_generation) {
    GenerationInfo g;
    g.kind = get<std::uint8_t>(in) == 0 ? GenerationInfo::Kind::lda : GenerationInfo::Kind::normal_scores;
    g.source.intercept = get<double>(in);
    g.source.coefficients = get_vector(in);
    g.score_mean = get<double>(in);
    g.score_sd = get<double>(in);
    g.seed = get<std::uint64_t>(in);
    if (get<std::uint8_t>(in) != 0) {
      ModificationParams m;
      m.alpha0 = get<double>(in);
      m.alpha1 = get<double>(in);
      m.gamma = get_vector(in);
      g.outcome_params = std::move(m);
    }
    g.outcome_seed = get<std::uint64_t>(in);
    c.generation = std::move(g);
  }
  c.features = FeatureMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  in.read(reinterpret_cast<char*>(c.features.data()), static_cast<std::streamsize>(n * p * sizeof(double)));
  c.scores.resize(n);
  in.read(reinterpret_cast<char*>(c.scores.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (has_labels) {
    std::vector<std::uint8_t> labels(n);
    in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n));
    c.labels = std::move(labels);
  }
  if (!in) throw InputError("binary cohort: truncated file");
  return c;
}

void save_cohort(const Cohort& cohort, const std::filesystem::path& path) {
  const bool binary = path.extension() == ".bin";
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw InputError("cannot write cohort file '" + path.string() + "'");
  if (binary) {
    write_cohort_binary(cohort, out);
  } else {
    write_cohort_csv(cohort, out);
  }
  if (!out) throw InputError("error writing cohort file '" + path.string() + "'");
}

Cohort load_cohort(const std::filesystem::path& path) {
  const bool binary = path.extension() == ".bin";
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InputError("cannot open cohort file '" + path.string() + "'");
  try {
    return binary ? read_cohort_binary(in) : read_cohort_csv(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

ScoreSummary summarize_scores(const Cohort& cohort, std::size_t bins) {
  if (cohort.size() == 0) throw InputError("cohort is empty");
  if (bins == 0) throw InputError("histogram needs at least one bin");
  ScoreSummary s;
  s.n = cohort.size();
  s.p = cohort.dim();
  s.has_labels = cohort.labels.has_value();
  const auto [lo, hi] = std::minmax_element(cohort.scores.begin(), cohort.scores.end());
  s.min = *lo;
  s.max = *hi;
  double sum = 0.0;
  for (double v : cohort.scores) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : cohort.scores) ss += (v - s.mean) * (v - s.mean);
  s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
  s.quantile_levels = {0.0, 0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99, 1.0};
  for (double q : s.quantile_levels) s.quantiles.push_back(quantile(cohort.scores, q));

  if (s.max == s.min) bins = 1;
  const double width = s.max > s.min ? (s.max - s.min) / static_cast<double>(bins) : 1.0;
  for (std::size_t b = 0; b <= bins; ++b) {
    s.histogram_edges.push_back(b == bins ? (s.max > s.min ? s.max : s.min + 1.0)
                                          : s.min + width * static_cast<double>(b));
  }
  s.histogram_counts.assign(bins, 0);
  for (double v : cohort.scores) {
    auto b = static_cast<std::size_t>((v - s.min) / width);
    if (b >= bins) b = bins - 1;
    ++s.histogram_counts[b];
  }
  return s;
}

}  // namespace pcc
