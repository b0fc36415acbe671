#include <doctest.h>

#include <sstream>

#include "pcc/cohort_io.hpp"
#include "pcc/errors.hpp"
#include "pcc/experiments.hpp"
#include "test_support.hpp"

using namespace pcc;

namespace {

Cohort parse(const std::string& csv) {
  std::istringstream in(csv);
  return read_cohort_csv(in);
}

std::string error_of(const std::string& csv) {
  try {
    (void)parse(csv);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("cohort_io") {
  TEST_CASE("format_double round-trips") {
    for (double v : {0.1, -1.5, 1.0 / 3.0, 1e-300, 123456789.125, -0.0}) {
      CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(2.0) == "2");
  }

  TEST_CASE("three-row score file") {
    const Cohort c = parse("score\n-1.5\n0.25\n2\n");
    REQUIRE(c.size() == 3);
    CHECK(c.dim() == 0);
    CHECK(c.scores == std::vector<double>{-1.5, 0.25, 2.0});
    CHECK_FALSE(c.labels.has_value());
    CHECK(std::isnan(c.prevalence_initial));
  }

  TEST_CASE("feature and label columns in any order") {
    const Cohort c = parse("age,score,label,bmi\n1,0.5,1,3\n2, -0.5 ,0,4\r\n");
    REQUIRE(c.size() == 2);
    CHECK(c.dim() == 2);
    CHECK(c.features(1, 0) == 2.0);
    CHECK(c.features(1, 1) == 4.0);
    CHECK(c.scores[1] == -0.5);
    REQUIRE(c.labels.has_value());
    CHECK(*c.labels == std::vector<std::uint8_t>{1, 0});
  }

  TEST_CASE("rejections cite the row") {
    CHECK(error_of("score\n1\nnan\n3\n").find("row 2") != std::string::npos);
    CHECK(error_of("score\n1\n2\nabc\n").find("row 3") != std::string::npos);
    CHECK(error_of("score\n1\n2\nabc\n").find("not a number") != std::string::npos);
    CHECK(error_of("score\ninf\n").find("row 1") != std::string::npos);
    CHECK(error_of("score,x1\n1,\n").find("column 'x1'") != std::string::npos);
    CHECK(error_of("score,x1\n1,2,3\n").find("row 1") != std::string::npos);
    CHECK(error_of("score,label\n1,2\n").find("label") != std::string::npos);
    CHECK(error_of("x1\n1\n").find("score") != std::string::npos);
    CHECK(error_of("score\n").find("no data rows") != std::string::npos);
    CHECK_FALSE(error_of("").empty());
    CHECK(error_of("score,score\n1,1\n").find("duplicate") != std::string::npos);
  }

  TEST_CASE("CSV round trip is exact") {
    Cohort c = build_cohort({CohortSpec::Kind::lda, 300, 20, 0.1, {}, 0, 1, 4});
    c.labels = generate_outcomes(c, {}, 2);
    std::ostringstream out;
    write_cohort_csv(c, out);
    const Cohort back = parse(out.str());
    CHECK(back.scores == c.scores);
    CHECK(back.features == c.features);
    CHECK(back.labels == c.labels);
    CHECK(out.str().substr(0, 9) == "x1,x2,x3,");
  }

  TEST_CASE("binary round trip keeps generation info") {
    Cohort c = build_cohort({CohortSpec::Kind::lda, 200, 20, 0.1, {}, 0, 1, 4});
    c.labels = generate_outcomes(c, {-0.5, 0.8, {}}, 2);
    c.generation->outcome_params = ModificationParams{-0.5, 0.8, {}};
    c.generation->outcome_seed = 2;
    std::stringstream buf;
    write_cohort_binary(c, buf);
    const Cohort back = read_cohort_binary(buf);
    CHECK(back.scores == c.scores);
    CHECK(back.features == c.features);
    CHECK(back.labels == c.labels);
    CHECK(back.prevalence_initial == c.prevalence_initial);
    REQUIRE(back.generation.has_value());
    CHECK(back.generation->seed == 4);
    CHECK(back.generation->source.coefficients == c.generation->source.coefficients);
    REQUIRE(back.generation->outcome_params.has_value());
    CHECK(*back.generation->outcome_params == ModificationParams{-0.5, 0.8, {}});
    std::stringstream junk("PCCXXXX");
    CHECK_THROWS_AS(read_cohort_binary(junk), InputError);
    std::stringstream trunc(buf.str().substr(0, 40));
    CHECK_THROWS_AS(read_cohort_binary(trunc), InputError);
  }

  TEST_CASE("save and load pick the format from the extension") {
    const auto dir = test::scratch_dir("cohort_io");
    const Cohort c = build_cohort({CohortSpec::Kind::normal, 50, 0, 0, {}, 0.0, 1.0, 3});
    save_cohort(c, dir / "a.csv");
    save_cohort(c, dir / "a.bin");
    CHECK(load_cohort(dir / "a.csv").scores == c.scores);
    CHECK(load_cohort(dir / "a.bin").scores == c.scores);
    CHECK(test::read_file(dir / "a.csv").rfind("score\n", 0) == 0);
    CHECK_THROWS_AS(load_cohort(dir / "missing.csv"), InputError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("score summary against an offline computation") {
    const Cohort c = build_cohort({CohortSpec::Kind::normal, 41418, 0, 0, {}, -0.7, 1.3, 12});
    std::ostringstream csv;
    write_cohort_csv(c, csv);
    const Cohort up = parse(csv.str());
    const ScoreSummary s = summarize_scores(up, 30);
    CHECK(s.n == 41418);
    CHECK(s.p == 0);
    CHECK_FALSE(s.has_labels);
    REQUIRE(s.quantile_levels.size() == s.quantiles.size());
    for (std::size_t i = 0; i < s.quantiles.size(); ++i) {
      CHECK(s.quantiles[i] == doctest::Approx(test::quantile7(c.scores, s.quantile_levels[i])).epsilon(1e-12));
    }
    CHECK(s.min == *std::min_element(c.scores.begin(), c.scores.end()));
    CHECK(s.max == *std::max_element(c.scores.begin(), c.scores.end()));
    CHECK(s.mean == doctest::Approx(test::mean(c.scores)));
    REQUIRE(s.histogram_edges.size() == 31);
    REQUIRE(s.histogram_counts.size() == 30);
    std::size_t total = 0;
    for (auto k : s.histogram_counts) total += k;
    CHECK(total == 41418);
    CHECK(s.histogram_edges.front() == s.min);
    CHECK(s.histogram_edges.back() == s.max);
  }

  TEST_CASE("summary of a constant column") {
    const Cohort c = parse("score\n1\n1\n1\n");
    const ScoreSummary s = summarize_scores(c, 5);
    std::size_t total = 0;
    for (auto k : s.histogram_counts) total += k;
    CHECK(total == 3);
    CHECK(s.sd == 0.0);
  }
}
