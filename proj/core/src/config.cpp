#include "pcc/config.hpp"

#include "pcc/cohort_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pcc {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

double as_real(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
  return d;
}

std::size_t as_count(const Json& v, const std::string& path) {
  // Documents built in code store small non-negative values as signed.
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) return v.get<std::size_t>();
  if (v.is_number_integer()) throw ConfigError(path, "must be non-negative");
  throw ConfigError(path, "expected a non-negative integer");
}

// Object reader that records which keys were consumed so leftovers can be
// reported as unknown fields.
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const noexcept { return path_; }
  std::string at(const std::string& key) const { return join(path_, key); }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError(at(key), "required field missing");
    return *it;
  }

  double real(const std::string& key) { return as_real(raw(key), at(key)); }
  double real(const std::string& key, double fallback) { return has(key) ? real(key) : (used_.insert(key), fallback); }

  std::size_t count(const std::string& key) { return as_count(raw(key), at(key)); }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : (used_.insert(key), fallback);
  }

  Seed seed(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(at(key), "expected a non-negative integer seed");
    }
    return v.get<Seed>();
  }
  std::optional<Seed> optional_seed(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return seed(key);
  }

  std::string str(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& fallback) {
    return has(key) ? str(key) : (used_.insert(key), fallback);
  }

  const Json& array(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array");
    return v;
  }

  std::vector<double> reals(const std::string& key) {
    const Json& a = array(key);
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_real(a[i], index_path(at(key), i)));
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) {
    const Json& a = array(key);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_count(a[i], index_path(at(key), i)));
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

std::size_t threads_field(Obj& o) {
  const std::size_t t = o.count("threads", 1);
  require(t >= 1, o.at("threads"), "must be at least 1");
  return t;
}

CohortSource parse_cohort(const Json& j, const std::string& path) {
  Obj o(j, path);
  CohortSource src;
  src.name = o.str("name", "");
  const std::string kind = o.str("kind");
  if (kind == "lda") {
    src.kind = CohortSource::Kind::lda;
    src.spec.kind = CohortSpec::Kind::lda;
    src.spec.n = o.count("n", 20000);
    src.spec.p = o.count("p", 100);
    src.spec.prevalence = o.real("prevalence", 0.10);
    if (o.has("beta")) src.spec.beta = o.reals("beta");
    src.spec.seed = o.has("seed") ? o.seed("seed") : kDefaultSeed;
    require(src.spec.n >= 1, o.at("n"), "must be at least 1");
    require(src.spec.prevalence > 0.0 && src.spec.prevalence < 1.0, o.at("prevalence"), "must lie in (0, 1)");
    if (src.spec.beta.empty()) {
      require(src.spec.p >= 20, o.at("p"), "the default source coefficients need p >= 20; give beta explicitly");
    } else {
      require(src.spec.beta.size() == src.spec.p || !o.has("p"), o.at("beta"), "length must equal p");
      src.spec.p = src.spec.beta.size();
    }
  } else if (kind == "normal") {
    src.kind = CohortSource::Kind::normal;
    src.spec.kind = CohortSpec::Kind::normal;
    src.spec.n = o.count("n", 10000);
    src.spec.score_mean = o.real("mean", -1.5);
    src.spec.score_sd = o.real("sd", 1.0);
    src.spec.seed = o.has("seed") ? o.seed("seed") : kDefaultSeed;
    require(src.spec.n >= 1, o.at("n"), "must be at least 1");
    require(src.spec.score_sd >= 0.0, o.at("sd"), "must be non-negative");
  } else if (kind == "file") {
    src.kind = CohortSource::Kind::file;
    src.path = o.str("path");
    require(!src.path.empty(), o.at("path"), "must be nonempty");
  } else if (kind == "handle") {
    src.kind = CohortSource::Kind::handle;
    src.handle = o.str("id");
  } else {
    throw ConfigError(o.at("kind"), "expected one of lda, normal, file, handle");
  }
  o.finish();
  return src;
}

ModificationParams parse_params(const Json& j, const std::string& path, std::string* name = nullptr) {
  Obj o(j, path);
  ModificationParams m;
  if (name) *name = o.str("name", "");
  m.alpha0 = o.real("alpha0", 0.0);
  m.alpha1 = o.real("alpha1", 1.0);
  if (o.has("gamma") && o.has("gamma_support")) throw ConfigError(o.at("gamma_support"), "give gamma or gamma_support, not both");
  if (o.has("gamma")) m.gamma = o.reals("gamma");
  if (o.has("gamma_support")) {
    Obj g(o.raw("gamma_support"), o.at("gamma_support"));
    const std::size_t p = g.count("p", 100);
    const std::size_t first = g.count("first");
    const std::size_t count = g.count("count");
    const double effect = g.real("effect");
    g.finish();
    require(first + count <= p, g.path(), "support exceeds p");
    m.gamma = sparse_gamma(p, first, count, effect);
  }
  o.finish();
  return m;
}

std::vector<DesignSpec> parse_designs(Obj& parent) {
  if (!parent.has("designs")) {
    return {DesignSpec::srs(), DesignSpec::pcc(kSimulationDesign)};
  }
  const Json& a = parent.array("designs");
  require(!a.empty(), parent.at("designs"), "at least one design required");
  std::vector<DesignSpec> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Obj d(a[i], index_path(parent.at("designs"), i));
    const std::string kind = d.str("design");
    if (kind == "srs") {
      out.push_back(DesignSpec::srs());
    } else if (kind == "pcc") {
      const double k = d.real("k");
      const double w = d.real("w");
      require(w >= 0.0 && w <= 1.0, d.at("w"), "must lie in [0, 1]");
      out.push_back(DesignSpec::pcc({k, w}));
    } else {
      throw ConfigError(d.at("design"), "expected srs or pcc");
    }
    d.finish();
  }
  return out;
}

std::vector<std::size_t> parse_sizes(Obj& o) {
  auto sizes = o.counts("sample_sizes");
  require(!sizes.empty(), o.at("sample_sizes"), "at least one sample size required");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    require(sizes[i] >= 2, index_path(o.at("sample_sizes"), i), "must be at least 2");
  }
  return sizes;
}

struct GridFields {
  std::vector<double> k_grid, w_grid;
  std::size_t k_points = 25, w_points = 25, n = 100, replicates = 200;
};

GridFields parse_grid(Obj& parent) {
  GridFields g;
  if (!parent.has("grid")) {
    return g;
  }
  Obj o(parent.raw("grid"), parent.at("grid"));
  if (o.has("k")) g.k_grid = o.reals("k");
  if (o.has("w")) g.w_grid = o.reals("w");
  g.k_points = o.count("k_points", 25);
  g.w_points = o.count("w_points", 25);
  g.n = o.count("n", 100);
  g.replicates = o.count("replicates", 200);
  o.finish();
  for (std::size_t i = 0; i < g.w_grid.size(); ++i) {
    require(g.w_grid[i] >= 0.0 && g.w_grid[i] <= 1.0, index_path(o.at("w"), i), "must lie in [0, 1]");
  }
  for (std::size_t i = 1; i < g.w_grid.size(); ++i) require(g.w_grid[i] >= g.w_grid[i - 1], o.at("w"), "must be sorted");
  for (std::size_t i = 1; i < g.k_grid.size(); ++i) require(g.k_grid[i] >= g.k_grid[i - 1], o.at("k"), "must be sorted");
  if (o.has("k")) require(!g.k_grid.empty(), o.at("k"), "must be nonempty");
  if (o.has("w")) require(!g.w_grid.empty(), o.at("w"), "must be nonempty");
  require(g.k_points >= 1, o.at("k_points"), "must be at least 1");
  require(g.w_points >= 1, o.at("w_points"), "must be at least 1");
  require(g.n >= 2, o.at("n"), "must be at least 2");
  require(g.replicates >= 1, o.at("replicates"), "must be at least 1");
  return g;
}


AssumedParams parse_assumed(Obj& parent) {
  if (!parent.has("assumed")) return {};
  return parse_params(parent.raw("assumed"), parent.at("assumed"));
}

}  // namespace

Json parse_json_text(std::string_view text, std::string_view source_name) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into line and column.
    const std::size_t offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    const auto pos = what.find("parse error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw ConfigError("", std::string(source_name) + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

std::string canonical_dump(const Json& j) { return nlohmann::json::parse(j.dump()).dump(); }

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_dump(j)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SurfaceRequest parse_surface_request(const Json& j) {
  Obj o(j, "");
  SurfaceRequest r;
  r.cohort = parse_cohort(o.raw("cohort"), "cohort");
  const GridFields g = parse_grid(o);
  r.k_grid = g.k_grid;
  r.w_grid = g.w_grid;
  r.k_points = g.k_points;
  r.w_points = g.w_points;
  r.n = g.n;
  r.replicates = g.replicates;
  r.assumed = parse_assumed(o);
  r.seed = o.optional_seed("seed");
  r.threads = threads_field(o);
  o.finish();
  return r;
}

PowerRequest parse_power_request(const Json& j) {
  Obj o(j, "");
  PowerRequest r;
  r.cohort = parse_cohort(o.raw("cohort"), "cohort");
  const Json& sc = o.raw("scenarios");
  if (sc.is_string()) {
    require(sc.get<std::string>() == "recalibration_grid", "scenarios", "the only named preset is recalibration_grid");
    for (const ModificationParams& m : recalibration_grid()) {
      r.scenarios.push_back({"a0=" + format_double(m.alpha0) + ";a1=" + format_double(m.alpha1), m});
    }
  } else {
    require(sc.is_array() && !sc.empty(), "scenarios", "expected a nonempty array or \"recalibration_grid\"");
    for (std::size_t i = 0; i < sc.size(); ++i) {
      NamedParams np;
      np.params = parse_params(sc[i], index_path("scenarios", i), &np.name);
      require(!np.params.has_revision(), index_path("scenarios", i) + ".gamma", "power scenarios take gamma = 0");
      if (np.name.empty()) np.name = "scenario" + std::to_string(i + 1);
      r.scenarios.push_back(std::move(np));
    }
  }
  r.designs = parse_designs(o);
  r.sample_sizes = parse_sizes(o);
  r.replicates = o.count("replicates", 200);
  require(r.replicates >= 1, o.at("replicates"), "must be at least 1");
  r.level = o.real("level", 0.05);
  require(r.level > 0.0 && r.level < 1.0, o.at("level"), "must lie in (0, 1)");
  r.seed = o.optional_seed("seed");
  r.threads = threads_field(o);
  o.finish();
  return r;
}

RevisionRequest parse_revision_request(const Json& j) {
  Obj o(j, "");
  RevisionRequest r;
  r.cohort = parse_cohort(o.raw("cohort"), "cohort");
  const Json& t = o.raw("truth");
  if (t.is_string()) {
    require(t.get<std::string>() == "revision_default", "truth", "the only named preset is revision_default");
    r.truth = revision_truth(r.cohort.kind == CohortSource::Kind::lda ? r.cohort.spec.p : 100);
  } else {
    r.truth = parse_params(t, "truth");
  }
  require(r.truth.has_revision(), "truth.gamma", "at least one nonzero coefficient required");
  r.designs = parse_designs(o);
  r.sample_sizes = parse_sizes(o);
  r.replicates = o.count("replicates", 200);
  require(r.replicates >= 1, o.at("replicates"), "must be at least 1");
  if (o.has("lambda")) {
    Obj l(o.raw("lambda"), "lambda");
    r.lambda.log_min = l.real("log_min", r.lambda.log_min);
    r.lambda.log_max = l.real("log_max", r.lambda.log_max);
    r.lambda.count = l.count("count", r.lambda.count);
    l.finish();
    require(r.lambda.log_max >= r.lambda.log_min, "lambda.log_max", "must be >= log_min");
    require(r.lambda.count >= 1, "lambda.count", "must be at least 1");
  }
  r.alt_threshold = o.real("alt_threshold", 0.0);
  require(r.alt_threshold >= 0.0, o.at("alt_threshold"), "must be non-negative");
  r.seed = o.optional_seed("seed");
  r.threads = threads_field(o);
  o.finish();
  return r;
}

RobustnessRequest parse_robustness_request(const Json& j) {
  Obj o(j, "");
  RobustnessRequest r;
  if (o.has("cohort") && o.has("cohorts")) throw ConfigError("cohorts", "give cohort or cohorts, not both");
  if (o.has("cohorts")) {
    const Json& a = o.array("cohorts");
    require(!a.empty(), "cohorts", "at least one cohort required");
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.cohorts.push_back(parse_cohort(a[i], index_path("cohorts", i)));
      if (r.cohorts.back().name.empty()) r.cohorts.back().name = "cohort" + std::to_string(i + 1);
    }
  } else {
    r.cohorts.push_back(parse_cohort(o.raw("cohort"), "cohort"));
    if (r.cohorts.back().name.empty()) r.cohorts.back().name = "cohort1";
  }
  if (o.has("assumed")) {
    const Json& a = o.array("assumed");
    require(!a.empty(), "assumed", "at least one parameter setting required");
    for (std::size_t i = 0; i < a.size(); ++i) {
      NamedParams np;
      np.params = parse_params(a[i], index_path("assumed", i), &np.name);
      if (np.name.empty()) np.name = "assumed" + std::to_string(i + 1);
      r.assumed.push_back(std::move(np));
    }
  } else {
    r.assumed.push_back({"null", {}});
  }
  if (o.has("criteria")) {
    const Json& a = o.array("criteria");
    require(!a.empty(), "criteria", "at least one criterion required");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string path = index_path("criteria", i);
      require(a[i].is_string(), path, "expected a string");
      const std::string c = a[i].get<std::string>();
      if (c == "d_optimality") {
        r.criteria.push_back(Criterion::d_optimality);
      } else if (c == "binary_entropy") {
        r.criteria.push_back(Criterion::binary_entropy);
      } else {
        throw ConfigError(path, "expected d_optimality or binary_entropy");
      }
    }
  } else {
    r.criteria = {Criterion::d_optimality, Criterion::binary_entropy};
  }
  const GridFields g = parse_grid(o);
  r.k_grid = g.k_grid;
  r.w_grid = g.w_grid;
  r.k_points = g.k_points;
  r.w_points = g.w_points;
  r.n = g.n;
  r.replicates = g.replicates;
  r.seed = o.optional_seed("seed");
  r.threads = threads_field(o);
  o.finish();
  return r;
}

CompareRequest parse_compare_request(const Json& j) {
  Obj o(j, "");
  CompareRequest r;
  r.cohort = parse_cohort(o.raw("cohort"), "cohort");
  Obj d(o.raw("design"), "design");
  r.design.cutoff_k = d.real("k");
  r.design.weight_w = d.real("w");
  d.finish();
  require(r.design.weight_w >= 0.0 && r.design.weight_w <= 1.0, "design.w", "must lie in [0, 1]");
  r.n = o.count("n", 100);
  require(r.n >= 2, o.at("n"), "must be at least 2");
  r.replicates = o.count("replicates", 200);
  require(r.replicates >= 1, o.at("replicates"), "must be at least 1");
  r.assumed = parse_assumed(o);
  r.seed = o.optional_seed("seed");
  r.threads = threads_field(o);
  o.finish();
  return r;
}

GenCohortRequest parse_gen_cohort_request(const Json& j) {
  Obj o(j, "");
  GenCohortRequest r;
  r.cohort = parse_cohort(o.raw("cohort"), "cohort");
  require(r.cohort.kind == CohortSource::Kind::lda || r.cohort.kind == CohortSource::Kind::normal, "cohort.kind",
          "gen-cohort needs a generator (lda or normal)");
  r.seed = o.optional_seed("seed");
  r.outcome_seed = r.seed.value_or(kDefaultSeed);
  if (o.has("outcomes")) {
    const Json& oj = o.raw("outcomes");
    Json params = oj;
    if (params.is_object() && params.contains("seed")) {
      Obj so(oj, "outcomes");
      r.outcome_seed = so.seed("seed");
      params.erase("seed");
    }
    r.outcomes = parse_params(params, "outcomes");
  }
  const std::string fmt = o.str("format", "csv");
  if (fmt == "csv") {
    r.format = GenCohortRequest::Format::csv;
  } else if (fmt == "binary") {
    r.format = GenCohortRequest::Format::binary;
  } else {
    throw ConfigError(o.at("format"), "expected csv or binary");
  }
  o.finish();
  return r;
}

}  // namespace pcc
