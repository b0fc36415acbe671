#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>

#include "pcc/cohort_io.hpp"
#include "pcc/experiments.hpp"
#include "pcc/modlearn.hpp"
#include "pcc/sampling.hpp"
#include "pcc/surface.hpp"

namespace pcc {

/// Insertion-ordered JSON so documents serialize in a fixed field order.
using Json = nlohmann::ordered_json;

/// Finite values as numbers; NaN as null; infinities as "inf" / "-inf".
Json real_to_json(double v);
/// Inverse of real_to_json.
double real_from_json(const Json& j);

Json to_json(const ModificationParams& params);
Json to_json(const DesignSpec& design);

/// {design, k, w, n, indices}; k and w are null for SRS.
Json to_json(const Sample& sample);
Sample sample_from_json(const Json& j);

/// {criterion, assumed, n, replicates, seed, k_grid, w_grid, values, stderr,
/// mean_prob, feasible, srs_reference, srs_stderr, srs_mean_prob, argmax}.
/// Matrices are arrays of rows, one row per k.
Json to_json(const InfoSurface& surface);
Json to_json(const SurfacePair& pair);

Json to_json(const RecalibrationTests& tests);
Json to_json(const LassoPath& path);
Json to_json(const RecoveryCurve& curve);
Json to_json(const PowerCurve& curve);
Json to_json(const RevisionResult& result);
Json to_json(const DesignComparison& comparison);
Json to_json(const ScoreSummary& summary);

/// Long format: k,w,value,stderr,feasible (one row per cell, k-major).
void write_surface_csv(const InfoSurface& surface, std::ostream& out);
/// lambda,alpha0,alpha1,gamma_1..gamma_p.
void write_lasso_path_csv(const LassoPath& path, std::ostream& out);

struct LabelledPowerCurve {
  std::string scenario;
  ModificationParams truth;
  const PowerCurve* curve = nullptr;
};
/// scenario,alpha0,alpha1,design,n,test,rejections,usable,dropped,power,stderr,feasible.
void write_power_csv(std::span<const LabelledPowerCurve> curves, std::ostream& out);
/// design,n,variant,lambda,fdr,fer.
void write_recovery_csv(const RevisionResult& result, std::ostream& out);

}  // namespace pcc
