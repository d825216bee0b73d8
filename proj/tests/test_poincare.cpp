#include "kolmo/poincare.hpp"

#include <cmath>

#include "doctest.h"
#include "kolmo/rng.hpp"

using kolmo::Cylinder;
using kolmo::CylinderTriple;
using kolmo::GridGeometry;
using kolmo::GridField;
using kolmo::SpaceTimeBox;
using kolmo::SystemSpec;

namespace {

// Analytic field fixture: values from a closed-form f(x, t), scalar
// coefficient from a(x), uniformly stored time slices.
GridField make_field(const SystemSpec& spec, const GridGeometry& grid, double t0, double t1,
                     int n_slices, const std::function<double(const Eigen::VectorXd&, double)>& f,
                     const std::function<double(const Eigen::VectorXd&)>& a, double lambda) {
  GridField field;
  field.spec = spec;
  field.grid = grid;
  field.lambda = lambda;
  const long cells = grid.cells();
  field.coeff.resize(static_cast<std::size_t>(cells));
  for (long c = 0; c < cells; ++c) field.coeff[static_cast<std::size_t>(c)] = a(grid.cell_center(c));
  for (int k = 0; k <= n_slices; ++k) {
    const double t = t0 + (t1 - t0) * k / n_slices;
    field.times.push_back(t);
    for (long c = 0; c < cells; ++c) field.values.push_back(f(grid.cell_center(c), t));
  }
  field.dt = (t1 - t0) / n_slices;
  return field;
}

const SystemSpec& spec11() {
  static const SystemSpec spec = SystemSpec::kolmogorov(1, 1, 2.0);
  return spec;
}

GridGeometry default_grid(int cells = 48) {
  return GridGeometry::box({4.0, 4.0}, {cells, cells});
}

}  // namespace

TEST_CASE("past average") {
  const CylinderTriple layout = kolmo::three_cylinder_layout(spec11());
  const GridGeometry grid = default_grid();

  SUBCASE("constant field gives the constant exactly") {
    const GridField field = make_field(
        spec11(), grid, -5.0, 0.0, 200, [](const Eigen::VectorXd&, double) { return 3.25; },
        [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
    CHECK(kolmo::past_average(field, layout.past) == doctest::Approx(3.25).epsilon(1e-12));
  }

  SUBCASE("time indicator measures the covered fraction") {
    const GridField field = make_field(
        spec11(), grid, -5.0, 0.0, 200,
        [](const Eigen::VectorXd&, double t) { return t <= -4.5 ? 1.0 : 0.0; },
        [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
    const double slice = 5.0 / 200;
    CHECK(std::abs(kolmo::past_average(field, layout.past) - 0.5) <= slice + 1e-12);
  }

  SUBCASE("linear-in-time field averages to the midpoint") {
    const GridField field = make_field(
        spec11(), grid, -5.0, 0.0, 200, [](const Eigen::VectorXd&, double t) { return t; },
        [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
    const double slice = 5.0 / 200;
    CHECK(std::abs(kolmo::past_average(field, layout.past) - (-4.5)) <= slice);
  }

  SUBCASE("empty intersection is a geometry error") {
    const GridField field = make_field(
        spec11(), grid, -1.0, 0.0, 20, [](const Eigen::VectorXd&, double) { return 1.0; },
        [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
    CHECK_THROWS_AS(kolmo::past_average(field, layout.past), kolmo::GeometryError);
  }
}

TEST_CASE("lhs and rhs fixtures annihilate") {
  const CylinderTriple layout = kolmo::three_cylinder_layout(spec11());
  const GridGeometry grid = default_grid();

  SUBCASE("constant non-negative field") {
    const GridField field = make_field(
        spec11(), grid, -5.0, 0.0, 150, [](const Eigen::VectorXd&, double) { return 1.7; },
        [](const Eigen::VectorXd&) { return 1.3; }, 2.0);
    CHECK(kolmo::lhs_poincare(field, layout.future, layout.past) == 0.0);
    CHECK(kolmo::rhs_poincare(field, SpaceTimeBox::of_field(field)) == 0.0);
  }

  SUBCASE("decreasing time indicator") {
    const GridField field = make_field(
        spec11(), grid, -5.0, 0.0, 150,
        [](const Eigen::VectorXd&, double t) { return t <= -4.0 ? 1.0 : 0.0; },
        [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
    CHECK(kolmo::lhs_poincare(field, layout.future, layout.past) == 0.0);
    CHECK(kolmo::rhs_poincare(field, SpaceTimeBox::of_field(field)) == 0.0);
  }
}

TEST_CASE("shift invariance") {
  const CylinderTriple layout = kolmo::three_cylinder_layout(spec11());
  const GridGeometry grid = default_grid();
  auto bump = [](const Eigen::VectorXd& x, double t) {
    return std::exp(-0.5 * x.squaredNorm() - 0.1 * (t + 2.0) * (t + 2.0));
  };
  const GridField base = make_field(spec11(), grid, -5.0, 0.0, 150, bump,
                                    [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
  const GridField shifted = make_field(
      spec11(), grid, -5.0, 0.0, 150,
      [&](const Eigen::VectorXd& x, double t) { return bump(x, t) + 2.3; },
      [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
  const double lhs_a = kolmo::lhs_poincare(base, layout.future, layout.past);
  const double lhs_b = kolmo::lhs_poincare(shifted, layout.future, layout.past);
  CHECK(std::abs(lhs_a - lhs_b) <= 1e-12 * std::max(1.0, lhs_a));
  const double rhs_a = kolmo::rhs_poincare(base, SpaceTimeBox::of_field(base));
  const double rhs_b = kolmo::rhs_poincare(shifted, SpaceTimeBox::of_field(shifted));
  CHECK(std::abs(rhs_a - rhs_b) <= 1e-12 * std::max(1.0, rhs_a));
}

TEST_CASE("shrinking the future cylinder cannot increase the lhs") {
  const CylinderTriple layout = kolmo::three_cylinder_layout(spec11());
  const GridGeometry grid = default_grid();
  const GridField field = make_field(
      spec11(), grid, -5.0, 0.0, 150,
      [](const Eigen::VectorXd& x, double t) {
        // Grows toward the future so the positive part is active on Q+.
        return std::exp(-0.3 * x.squaredNorm()) * (6.0 + t);
      },
      [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
  const double full = kolmo::lhs_poincare(field, layout.future, layout.past);
  kolmo::KineticPoint c = kolmo::KineticPoint::origin(spec11());
  const Cylinder smaller = Cylinder::at(spec11(), c, 0.6);
  const double shrunk = kolmo::lhs_poincare(field, smaller, layout.past);
  CHECK(full > 0.0);
  CHECK(shrunk <= full + 1e-14);
}

TEST_CASE("rhs bounded by the ellipticity envelope") {
  const GridGeometry grid = default_grid();
  const double lambda = 2.0;
  auto f = [](const Eigen::VectorXd& x, double t) {
    return std::exp(-0.4 * x.squaredNorm() + 0.05 * t);
  };
  const GridField ident = make_field(spec11(), grid, -5.0, 0.0, 100, f,
                                     [](const Eigen::VectorXd&) { return 1.0; }, lambda);
  const kolmo::CoefficientField checker = kolmo::checkerboard_field(spec11(), lambda, 0.9);
  const GridField rough = make_field(spec11(), grid, -5.0, 0.0, 100, f,
                                     [&](const Eigen::VectorXd& x) { return checker.matrix_at(x)(0, 0); },
                                     lambda);
  const double rhs_id = kolmo::rhs_poincare(ident, SpaceTimeBox::of_field(ident));
  const double rhs_ck = kolmo::rhs_poincare(rough, SpaceTimeBox::of_field(rough));
  CHECK(rhs_ck / rhs_id >= 1.0 / std::sqrt(lambda) - 1e-12);
  CHECK(rhs_ck / rhs_id <= std::sqrt(lambda) + 1e-12);
}

TEST_CASE("scaling covariance of the ratio under dilations") {
  // g := f o delta_r on the unit geometry against f on the dilated geometry:
  // the ratio lhs/rhs picks up exactly one factor 1/r (beta = 1).
  const SystemSpec& spec = spec11();
  const double r = 1.2;
  auto f = [](const Eigen::VectorXd& x, double t) {
    return std::exp(-0.5 * (x(0) * x(0) / 6.0 + x(1) * x(1) / 20.0) - 0.08 * (t + 3.0) * (t + 3.0));
  };
  auto g = [&](const Eigen::VectorXd& x, double t) {
    Eigen::VectorXd xs(2);
    xs << r * x(0), r * r * r * x(1);
    return f(xs, r * r * t);
  };

  const int cells = 64, slices = 240;
  // Unit geometry for g.
  const GridGeometry grid_unit = GridGeometry::box({3.0, 3.0}, {cells, cells});
  const GridField field_g = make_field(spec, grid_unit, -5.0, 0.0, slices, g,
                                       [](const Eigen::VectorXd&) { return 1.0; }, 1.0);
  const CylinderTriple unit_layout = kolmo::three_cylinder_layout(spec);
  const double lhs_g = kolmo::lhs_poincare(field_g, unit_layout.future, unit_layout.past);
  const double rhs_g = kolmo::rhs_poincare(field_g, SpaceTimeBox::of_field(field_g));

  // Dilated geometry for f: cylinders delta_r(Q), box delta_r(box).
  const GridGeometry grid_dil =
      GridGeometry::box({3.0 * r, 3.0 * r * r * r}, {cells, cells});
  const GridField field_f = make_field(spec, grid_dil, -5.0 * r * r, 0.0, slices, f,
                                       [](const Eigen::VectorXd&) { return 1.0; }, 1.0);
  kolmo::KineticPoint top = kolmo::KineticPoint::origin(spec);
  const Cylinder q_plus_dil = Cylinder::at(spec, top, r);
  top.t = -4.0 * r * r;
  const Cylinder q_minus_dil = Cylinder::at(spec, top, r);
  const double lhs_f = kolmo::lhs_poincare(field_f, q_plus_dil, q_minus_dil);
  const double rhs_f = kolmo::rhs_poincare(field_f, SpaceTimeBox::of_field(field_f));

  const double ratio_g = lhs_g / rhs_g;
  const double ratio_f = lhs_f / rhs_f;
  CHECK(ratio_g / ratio_f == doctest::Approx(1.0 / r).epsilon(0.05));
}

TEST_CASE("attached source feeds the right-hand side") {
  const GridGeometry grid = default_grid(24);
  auto f = [](const Eigen::VectorXd& x, double t) {
    return std::exp(-0.4 * x.squaredNorm() + 0.02 * t);
  };
  GridField field = make_field(spec11(), grid, -5.0, 0.0, 80, f,
                               [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
  const double base = kolmo::rhs_poincare(field, SpaceTimeBox::of_field(field));
  const double s0 = 0.37;
  field.source.assign(field.values.size(), s0);
  const double with_source = kolmo::rhs_poincare(field, SpaceTimeBox::of_field(field));
  // The L1 norm of the constant source over box x (t0, t1] is added; the
  // half-open window drops the leading half-slice of the midpoint rule.
  const double time_measure = 5.0 - 0.5 * (5.0 / 80);
  const double box_measure = grid.cell_volume() * static_cast<double>(grid.cells()) * time_measure;
  CHECK(with_source - base == doctest::Approx(s0 * box_measure).epsilon(1e-10));
}

TEST_CASE("report assembly and the rhs floor") {
  const CylinderTriple layout = kolmo::three_cylinder_layout(spec11());
  const GridGeometry grid = default_grid(32);
  const GridField constant = make_field(
      spec11(), grid, -5.0, 0.0, 60, [](const Eigen::VectorXd&, double) { return 1.0; },
      [](const Eigen::VectorXd&) { return 1.0; }, 2.0);
  const kolmo::PoincareReport report = kolmo::make_report(
      constant, layout.future, layout.past, SpaceTimeBox::of_field(constant), 1.0, {{"tag", "fixture"}});
  CHECK(report.lhs == 0.0);
  CHECK(report.rhs == 0.0);
  CHECK(!report.ratio_defined);
  const nlohmann::json j = report.to_json();
  CHECK(j["provenance"]["tag"] == "fixture");
  CHECK(j.contains("geometry"));
}

TEST_CASE("mini ensemble end to end") {
  kolmo::EnsembleConfig cfg;
  cfg.n_runs = 3;
  cfg.lambda = 2.0;
  cfg.cells_per_axis = 32;
  cfg.tiles = 10;
  cfg.seed = 7;
  cfg.target_slices = 120;
  const kolmo::EnsembleResult result = kolmo::ensemble_estimate(spec11(), cfg);
  CHECK(result.summary.n_failed == 0);
  REQUIRE(result.runs.size() == 3);
  for (const auto& run : result.runs) {
    CHECK(!run.failed);
    CHECK(run.report.ratio_defined);
    CHECK(std::isfinite(run.report.ratio));
    CHECK(run.report.lhs >= 0.0);
    CHECK(run.report.rhs > 0.0);
  }
  CHECK(result.summary.max_ratio >= result.summary.median_ratio);

  SUBCASE("deterministic rerun") {
    const kolmo::EnsembleResult again = kolmo::ensemble_estimate(spec11(), cfg);
    for (std::size_t k = 0; k < result.runs.size(); ++k) {
      CHECK(again.runs[k].report.lhs == result.runs[k].report.lhs);
      CHECK(again.runs[k].report.rhs == result.runs[k].report.rhs);
    }
  }

  SUBCASE("ratio ceiling flags offending runs") {
    kolmo::EnsembleConfig tight = cfg;
    tight.ratio_ceiling = 1e-9;
    const kolmo::EnsembleResult flagged = kolmo::ensemble_estimate(spec11(), tight);
    CHECK(flagged.summary.flagged.size() == flagged.runs.size());
  }

  SUBCASE("p = 2 variant stays finite") {
    kolmo::EnsembleConfig cfg2 = cfg;
    cfg2.p = 2.0;
    const kolmo::EnsembleResult r2 = kolmo::ensemble_estimate(spec11(), cfg2);
    CHECK(r2.summary.n_failed == 0);
    for (const auto& run : r2.runs) {
      CHECK(run.report.ratio_defined);
      CHECK(std::isfinite(run.report.ratio));
    }
  }

  SUBCASE("beta < 1 is out of scope") {
    SystemSpec frac = spec11();
    frac.beta = 0.5;
    CHECK_THROWS_AS(kolmo::ensemble_estimate(frac, cfg), kolmo::UnsupportedModeError);
  }
}
