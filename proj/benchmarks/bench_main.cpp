#include <benchmark/benchmark.h>

#include "pcc/experiments.hpp"

using namespace pcc;

namespace {

const Cohort& normal_cohort() {
  static const Cohort c = generate_normal_score_cohort(10000, -1.5, 1.0, 1);
  return c;
}

const Cohort& lda_cohort() {
  static const Cohort c = build_cohort({});
  return c;
}

void BM_PccSample(benchmark::State& state) {
  const Strata strata(normal_cohort().scores, -1.0);
  const auto n = static_cast<std::size_t>(state.range(0));
  Seed seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pcc_sample(strata, {-1.0, 0.5}, n, ++seed));
}
BENCHMARK(BM_PccSample)->Arg(100)->Arg(1000);

void BM_SrsSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Seed seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(srs_sample(normal_cohort(), n, ++seed));
}
BENCHMARK(BM_SrsSample)->Arg(100)->Arg(1000);

void BM_PhiD(benchmark::State& state) {
  const auto probs = predicted_probs(normal_cohort(), {});
  const Sample s = srs_sample(normal_cohort(), static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(sample_information(normal_cohort().scores, probs, s.indices));
}
BENCHMARK(BM_PhiD)->Arg(100)->Arg(1000);

void BM_SurfaceCell(benchmark::State& state) {
  GridSpec g;
  g.k_grid = {-1.0};
  g.w_grid = {0.5};
  g.n = 100;
  g.replicates = 200;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_surfaces(normal_cohort(), g));
}
BENCHMARK(BM_SurfaceCell)->Unit(benchmark::kMillisecond);

void BM_RecalibrationTests(benchmark::State& state) {
  const Sample s = draw_sample(lda_cohort(), DesignSpec::pcc(kSimulationDesign), 500, 2);
  const auto y = sample_labels(lda_cohort(), {-0.405, 0.8, {}}, s.indices, 4);
  std::vector<double> scores;
  for (std::size_t i : s.indices) scores.push_back(lda_cohort().scores[i]);
  for (auto _ : state) benchmark::DoNotOptimize(recalibration_tests(scores, y));
}
BENCHMARK(BM_RecalibrationTests);

void BM_LassoPath(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Sample s = draw_sample(lda_cohort(), DesignSpec::pcc(kSimulationDesign), n, 5);
  const auto y = sample_labels(lda_cohort(), revision_truth(100), s.indices, 6);
  std::vector<double> scores;
  FeatureMatrix x(static_cast<Eigen::Index>(n), lda_cohort().features.cols());
  for (std::size_t r = 0; r < n; ++r) {
    scores.push_back(lda_cohort().scores[s.indices[r]]);
    x.row(static_cast<Eigen::Index>(r)) = lda_cohort().features.row(static_cast<Eigen::Index>(s.indices[r]));
  }
  const auto grid = lambda_grid_per_observation(n, -6.0, -2.0, 40);
  for (auto _ : state) benchmark::DoNotOptimize(fit_lasso_path(scores, x, y, grid));
}
BENCHMARK(BM_LassoPath)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
