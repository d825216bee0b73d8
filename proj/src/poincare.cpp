#include "kolmo/poincare.hpp"

#include <algorithm>
#include <cmath>

#include "kolmo/rng.hpp"

namespace kolmo {

namespace {

// Fast membership for the common pure time-shift cylinders (center spatially
// at the origin); falls back to the full group pullback otherwise.
struct CylinderTester {
  const SystemSpec& spec;
  const Cylinder& cyl;
  bool time_shift_only;

  CylinderTester(const SystemSpec& s, const Cylinder& c) : spec(s), cyl(c) {
    time_shift_only = true;
    for (const auto& l : cyl.center.layers) time_shift_only = time_shift_only && l.isZero(0.0);
  }

  bool spatial(const Eigen::VectorXd& x) const {
    int off = 0;
    for (int i = 0; i <= spec.kappa; ++i) {
      const double bound = std::pow(cyl.radius, 1.0 + 2.0 * i * spec.beta);
      double norm2 = 0.0;
      for (int c = 0; c < spec.dims[static_cast<std::size_t>(i)]; ++c) {
        const double v = x(off + c);
        norm2 += v * v;
      }
      if (norm2 > bound * bound) return false;
      off += spec.dims[static_cast<std::size_t>(i)];
    }
    return true;
  }

  bool time(double t) const { return t > cyl.t_lo && t <= cyl.t_hi; }

  bool operator()(const Eigen::VectorXd& x, double t) const {
    if (time_shift_only) return time(t) && spatial(x);
    return cylinder_contains(spec, cyl, KineticPoint::from_control(spec, x, t));
  }
};

double slice_weight(const GridField& field, int k) {
  // Midpoint rule in time over stored slices: each slice represents half the
  // gap to each neighbour; interior uniform storage gives the storage step.
  const int m = field.slices();
  if (m == 1) return 0.0;
  const double lo = k == 0 ? field.times[0] : 0.5 * (field.times[static_cast<std::size_t>(k - 1)] + field.times[static_cast<std::size_t>(k)]);
  const double hi = k == m - 1 ? field.times[static_cast<std::size_t>(k)]
                               : 0.5 * (field.times[static_cast<std::size_t>(k)] + field.times[static_cast<std::size_t>(k + 1)]);
  return hi - lo;
}

}  // namespace

SpaceTimeBox SpaceTimeBox::of_field(const GridField& field) {
  SpaceTimeBox box;
  box.lo = field.grid.lo;
  box.hi = field.grid.hi;
  box.t_lo = field.times.empty() ? 0.0 : field.times.front();
  box.t_hi = field.times.empty() ? 0.0 : field.times.back();
  return box;
}

namespace {

// Spatial membership per cell; valid across slices for pure time-shift
// cylinders (empty when the cylinder needs the full per-time pullback).
std::vector<char> spatial_mask(const GridField& field, const CylinderTester& tester) {
  std::vector<char> mask;
  if (!tester.time_shift_only) return mask;
  const long cells = field.cells();
  mask.resize(static_cast<std::size_t>(cells));
  for (long c = 0; c < cells; ++c)
    mask[static_cast<std::size_t>(c)] = tester.spatial(field.grid.cell_center(c)) ? 1 : 0;
  return mask;
}

}  // namespace

double past_average(const GridField& field, const Cylinder& q_minus) {
  const CylinderTester tester(field.spec, q_minus);
  const std::vector<char> mask = spatial_mask(field, tester);
  const long cells = field.cells();
  const double cell_vol = field.grid.cell_volume();
  double sum = 0.0, measure = 0.0;
  for (int k = 0; k < field.slices(); ++k) {
    const double t = field.times[static_cast<std::size_t>(k)];
    if (!tester.time(t)) continue;
    const double w = slice_weight(field, k) * cell_vol;
    if (w <= 0.0) continue;
    const double* f = field.slice(k);
    for (long c = 0; c < cells; ++c) {
      const bool in = mask.empty() ? tester(field.grid.cell_center(c), t)
                                   : mask[static_cast<std::size_t>(c)] != 0;
      if (!in) continue;
      sum += w * f[c];
      measure += w;
    }
  }
  if (measure <= 0.0) throw GeometryError("past cylinder meets no grid cell");
  return sum / measure;
}

double lhs_poincare(const GridField& field, const Cylinder& q_plus, const Cylinder& q_minus,
                    double p) {
  if (!(p >= 1.0)) throw InvalidParametersError("exponent p must be >= 1");
  const double avg = past_average(field, q_minus);
  const CylinderTester tester(field.spec, q_plus);
  const std::vector<char> mask = spatial_mask(field, tester);
  const long cells = field.cells();
  const double cell_vol = field.grid.cell_volume();
  double acc = 0.0;
  for (int k = 0; k < field.slices(); ++k) {
    const double t = field.times[static_cast<std::size_t>(k)];
    if (!tester.time(t)) continue;
    const double w = slice_weight(field, k) * cell_vol;
    const double* f = field.slice(k);
    for (long c = 0; c < cells; ++c) {
      const bool in = mask.empty() ? tester(field.grid.cell_center(c), t)
                                   : mask[static_cast<std::size_t>(c)] != 0;
      if (!in) continue;
      const double pos = f[c] - avg;
      if (pos > 0.0) acc += w * (p == 1.0 ? pos : std::pow(pos, p));
    }
  }
  return acc;
}

double rhs_poincare(const GridField& field, const SpaceTimeBox& ambient, double p) {
  if (!(p >= 1.0)) throw InvalidParametersError("exponent p must be >= 1");
  const SystemSpec& spec = field.spec;
  const int d0 = spec.dims[0];
  const long cells = field.cells();
  const double cell_vol = field.grid.cell_volume();
  const std::vector<long> strides = field.grid.strides();
  const int axes = field.grid.axes();

  // Spatial mask for the ambient box.
  std::vector<char> inside(static_cast<std::size_t>(cells), 1);
  for (long c = 0; c < cells; ++c) {
    const Eigen::VectorXd x = field.grid.cell_center(c);
    for (int a = 0; a < axes; ++a)
      if (x(a) < ambient.lo[static_cast<std::size_t>(a)] || x(a) > ambient.hi[static_cast<std::size_t>(a)]) {
        inside[static_cast<std::size_t>(c)] = 0;
        break;
      }
  }
  std::vector<int> idx_a(static_cast<std::size_t>(cells));
  Eigen::VectorXd grad(d0);

  double acc = 0.0;
  for (int k = 0; k < field.slices(); ++k) {
    const double t = field.times[static_cast<std::size_t>(k)];
    if (!(t > ambient.t_lo && t <= ambient.t_hi)) continue;
    const double w = slice_weight(field, k) * cell_vol;
    const double* f = field.slice(k);
    for (long c = 0; c < cells; ++c) {
      if (!inside[static_cast<std::size_t>(c)]) continue;
      for (int a = 0; a < d0; ++a) {
        const long stride = strides[static_cast<std::size_t>(a)];
        const int na = field.grid.n[static_cast<std::size_t>(a)];
        const int ia = static_cast<int>((c / stride) % na);
        const double h = field.grid.h(a);
        if (ia > 0 && ia < na - 1)
          grad(a) = (f[c + stride] - f[c - stride]) / (2.0 * h);
        else if (ia == 0)
          grad(a) = (f[c + stride] - f[c]) / h;
        else
          grad(a) = (f[c] - f[c - stride]) / h;
      }
      double quad;  // |sqrt(A) grad|^2 = grad . A grad
      if (d0 == 1) {
        quad = field.coeff[static_cast<std::size_t>(c)] * grad(0) * grad(0);
      } else {
        quad = grad.dot(field.coeff_at(c) * grad);
      }
      const double norm = std::sqrt(std::max(0.0, quad));
      acc += w * (p == 1.0 ? norm : std::pow(norm, p));
      if (!field.source.empty()) {
        const double s = field.source[static_cast<std::size_t>(k) * static_cast<std::size_t>(cells) + static_cast<std::size_t>(c)];
        acc += w * (p == 1.0 ? std::abs(s) : std::pow(std::abs(s), p));
      }
    }
  }
  return acc;
}

nlohmann::json PoincareReport::to_json() const {
  nlohmann::json j;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["ratio_defined"] = ratio_defined;
  if (ratio_defined) j["ratio"] = ratio;
  j["p"] = p;
  j["geometry"] = geometry;
  j["provenance"] = provenance;
  return j;
}

PoincareReport make_report(const GridField& field, const Cylinder& q_plus,
                           const Cylinder& q_minus, const SpaceTimeBox& ambient, double p,
                           nlohmann::json provenance, double rhs_floor) {
  PoincareReport report;
  report.p = p;
  report.lhs = lhs_poincare(field, q_plus, q_minus, p);
  report.rhs = rhs_poincare(field, ambient, p);
  report.ratio_defined = report.rhs > rhs_floor;
  if (report.ratio_defined) report.ratio = report.lhs / report.rhs;
  report.geometry = {
      {"q_plus", {{"t_lo", q_plus.t_lo}, {"t_hi", q_plus.t_hi}, {"radius", q_plus.radius}}},
      {"q_minus", {{"t_lo", q_minus.t_lo}, {"t_hi", q_minus.t_hi}, {"radius", q_minus.radius}}},
      {"ambient", {{"lo", ambient.lo}, {"hi", ambient.hi}, {"t_lo", ambient.t_lo}, {"t_hi", ambient.t_hi}}},
      {"grid", field.grid.n},
  };
  report.provenance = std::move(provenance);
  return report;
}

EnsembleResult ensemble_estimate(const SystemSpec& spec, const EnsembleConfig& cfg) {
  if (spec.beta < 1.0)
    throw UnsupportedModeError("ensemble verification covers the local case beta = 1");
  EnsembleResult result;
  const CylinderTriple layout = three_cylinder_layout(spec, cfg.gap);

  std::vector<double> half_extent;
  std::vector<int> counts;
  for (int i = 0; i <= spec.kappa; ++i)
    for (int c = 0; c < spec.dims[static_cast<std::size_t>(i)]; ++c) {
      half_extent.push_back(i == 0 ? cfg.box_v : cfg.box_x);
      counts.push_back(cfg.cells_per_axis);
    }
  const GridGeometry grid = GridGeometry::box(half_extent, counts);
  const double extent = *std::max_element(half_extent.begin(), half_extent.end());

  const double t0 = layout.past.t_lo;
  const double t1 = layout.future.t_hi;

  std::vector<double> ratios;
  for (int run = 0; run < cfg.n_runs; ++run) {
    RunRecord record;
    std::uint64_t mix_state = cfg.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(run + 1);
    record.seed = rng::splitmix64(mix_state);
    rng::Stream bump = rng::Stream(record.seed, rng::fnv1a("bump"));
    const int axes = grid.axes();
    const double span = -t0;  // travel time available to reach t ~ 0
    Eigen::VectorXd center(axes), width(axes);
    for (int a = 0; a < axes; ++a) width(a) = bump.uniform(cfg.bump_width_lo, cfg.bump_width_hi);
    // Offset the transported axes, then aim the layer-0 slot at the origin.
    for (int a = spec.dims[0]; a < axes; ++a) {
      const double sign = bump.next_double() < 0.5 ? -1.0 : 1.0;
      center(a) = sign * bump.uniform(cfg.bump_offset_lo, cfg.bump_offset_hi);
    }
    for (int a = 0; a < spec.dims[0]; ++a) {
      const double target = spec.kappa >= 1 ? center(spec.layer_offset(1) + a % spec.dims[1]) : 0.0;
      center(a) = -target / span + bump.uniform(-0.2, 0.2);
    }
    auto initial = [center, width](const Eigen::VectorXd& x) {
      double q = 0.0;
      for (int a = 0; a < x.size(); ++a) {
        const double z = (x(a) - center(a)) / width(a);
        q += z * z;
      }
      return std::exp(-0.5 * q);
    };

    const CoefficientField coeff =
        cfg.lambda == 1.0 ? CoefficientField::identity(spec.dims[0])
                          : rough_coefficient_field(spec, extent, cfg.tiles, cfg.lambda,
                                                    record.seed);
    FdConfig fd;
    fd.t0 = t0;
    fd.t1 = t1;
    fd.cfl_safety = cfg.cfl_safety;
    fd.target_slices = cfg.target_slices;
    try {
      const GridField field = fd_solve(spec, grid, coeff, initial, fd);
      SpaceTimeBox ambient = SpaceTimeBox::of_field(field);
      nlohmann::json provenance = {{"run", run},
                                   {"seed", record.seed},
                                   {"lambda", cfg.lambda},
                                   {"scheme", "explicit-upwind-divergence"},
                                   {"dt", field.dt},
                                   {"bump_center", std::vector<double>(center.data(), center.data() + axes)},
                                   {"bump_width", std::vector<double>(width.data(), width.data() + axes)}};
      record.report = make_report(field, layout.future, layout.past, ambient, cfg.p,
                                  std::move(provenance));
      if (record.report.ratio_defined) ratios.push_back(record.report.ratio);
      ++result.summary.n_ok;
    } catch (const Error& e) {
      record.failed = true;
      record.failure = e.what();
      ++result.summary.n_failed;
    }
    result.runs.push_back(std::move(record));
  }

  if (!ratios.empty()) {
    result.summary.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    result.summary.median_ratio = sorted[sorted.size() / 2];
  }
  for (std::size_t r = 0; r < result.runs.size(); ++r)
    if (!result.runs[r].failed && result.runs[r].report.ratio_defined &&
        result.runs[r].report.ratio > cfg.ratio_ceiling)
      result.summary.flagged.push_back(static_cast<int>(r));
  return result;
}

}  // namespace kolmo
