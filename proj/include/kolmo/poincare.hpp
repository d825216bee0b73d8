#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "kolmo/grid.hpp"
#include "kolmo/kolmogorov.hpp"

namespace kolmo {

/// Space-time integration region: spatial box plus half-open time window.
struct SpaceTimeBox {
  std::vector<double> lo, hi;
  double t_lo = 0.0, t_hi = 1.0;

  static SpaceTimeBox of_field(const GridField& field);
};

/// Cell-measure-weighted mean of f over space-time cells whose centers lie in
/// the past cylinder. Throws GeometryError when no cell qualifies.
double past_average(const GridField& field, const Cylinder& q_minus);

/// Midpoint-rule integral over Q+ of ((f - <f>_{Q-})_+)^p.
double lhs_poincare(const GridField& field, const Cylinder& q_plus, const Cylinder& q_minus,
                    double p = 1.0);

/// Midpoint-rule integral over the ambient region of |sqrt(A) grad_v f|^p
/// (centered differences, one-sided at the box boundary), plus the integral
/// of |S|^p when a source is attached.
double rhs_poincare(const GridField& field, const SpaceTimeBox& ambient, double p = 1.0);

struct PoincareReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ratio_defined = false;
  double ratio = 0.0;
  double p = 1.0;
  nlohmann::json geometry;
  nlohmann::json provenance;

  nlohmann::json to_json() const;
};

PoincareReport make_report(const GridField& field, const Cylinder& q_plus,
                           const Cylinder& q_minus, const SpaceTimeBox& ambient, double p,
                           nlohmann::json provenance, double rhs_floor = 1e-14);

struct EnsembleConfig {
  int n_runs = 20;
  double lambda = 2.0;
  double p = 1.0;
  int cells_per_axis = 48;
  double box_v = 6.5;  // half-extent of the layer-0 axes
  double box_x = 6.5;  // half-extent of the higher-layer axes
  int tiles = 12;
  std::uint64_t seed = 0;
  double ratio_ceiling = 1e6;
  double gap = 1.0;
  int target_slices = 320;
  double cfl_safety = 0.4;
  // Initial bumps start offset along the transported axes with a velocity
  // aimed at the origin, so mass crosses the future cylinder while the past
  // average stays a small tail and the positive part is genuinely active.
  double bump_offset_lo = 3.5;
  double bump_offset_hi = 4.2;
  double bump_width_lo = 0.7;
  double bump_width_hi = 1.0;
};

struct EnsembleSummary {
  int n_ok = 0;
  int n_failed = 0;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  std::vector<int> flagged;  // runs whose ratio exceeds the ceiling
};

struct RunRecord {
  PoincareReport report;
  bool failed = false;
  std::string failure;
  std::uint64_t seed = 0;
};

struct EnsembleResult {
  std::vector<RunRecord> runs;
  EnsembleSummary summary;
};

/// Evolves n_runs random non-negative bumps through rough coefficient fields
/// over the full three-cylinder time span and reports lhs, rhs and their
/// ratio per run. Solver failures mark the run failed and are excluded from
/// the summary.
EnsembleResult ensemble_estimate(const SystemSpec& spec, const EnsembleConfig& cfg);

}  // namespace kolmo
