#include "kolmo/trajectory.hpp"

#include <cmath>

namespace kolmo {

TrajectoryBundle::TrajectoryBundle(WronskianBundle wr, KineticPoint endpoint, KineticPoint target,
                                   TrajectoryOptions opts)
    : wr_(std::move(wr)), endpoint_(std::move(endpoint)), target_(std::move(target)),
      opts_(opts) {}

TrajectoryBundle TrajectoryBundle::solve(const SystemSpec& spec, const ControlBasis& basis,
                                         const KineticPoint& z_endpoint, const KineticPoint& z_0,
                                         TrajectoryOptions opts) {
  check_point(spec, z_endpoint);
  check_point(spec, z_0);
  const double delta = z_0.t - z_endpoint.t;
  if (delta == 0.0) throw TimeDegenerateError("endpoint and target share the same time");
  WronskianOptions wopts;
  wopts.delta_min = opts.delta_min;
  wopts.det_check_rel = opts.det_check_rel;
  wopts.pinv_cutoff = opts.pinv_cutoff;
  WronskianBundle wr(spec, basis, delta, wopts);
  TrajectoryBundle bundle(std::move(wr), z_endpoint, z_0, opts);
  bundle.y_ = z_0.control_vector() - bundle.wr_.t1() * z_endpoint.control_vector();
  // Solve W(1) m = R^+ Y in extended precision: tightly spread alphas make
  // W(1) nearly Vandermonde-degenerate and a plain double solve loses the
  // endpoint residual budget.
  const Eigen::VectorXd u = bundle.wr_.r_pinv() * bundle.y_;
  bundle.m_ld_ = bundle.wr_.solve_w1_ld(u.cast<long double>());
  bundle.m_ = bundle.m_ld_.cast<double>();
  bundle.xe_ld_ = z_endpoint.control_vector().cast<long double>();
  return bundle;
}

WronskianBundle::VecLD TrajectoryBundle::at_ld(double s) const {
  if (s < 0.0 || s > 1.0) throw InvalidParametersError("trajectory parameter must be in [0, 1]");
  return wr_.transport_T(s).cast<long double>() * xe_ld_ +
         wr_.scaling_R_ld() * (wr_.wronskian_ld(s) * m_ld_);
}

KineticPoint TrajectoryBundle::at(double s) const {
  const Eigen::VectorXd x = at_ld(s).cast<double>();
  const double t = s * target_.t + (1.0 - s) * endpoint_.t;
  return KineticPoint::from_control(spec(), x, t);
}

Eigen::VectorXd TrajectoryBundle::tangent(double s) const {
  if (!(s > 0.0) || s > 1.0)
    throw SingularEvaluationError("tangent requires s in (0, 1] (speed diverges at 0)");
  const SystemSpec& sp = spec();
  const int n = sp.total_dim();
  const int d0 = sp.dims[0];
  const int k = sp.kappa;
  const double delta = wr_.delta();
  // dX^(0)/ds = sum_i m_i g_i^{(kappa+1)}(s); dX^(i)/ds = delta B_i X^(i-1).
  Eigen::VectorXd out(n + 1);
  Eigen::VectorXd dx0 = Eigen::VectorXd::Zero(d0);
  for (int i = 0; i <= k; ++i)
    dx0 += m_.segment(i * d0, d0) * g_eval(wr_.basis(), i, k + 1, s);
  out.segment(0, d0) = dx0;
  const KineticPoint gamma = at(s);
  for (int i = 1; i <= k; ++i)
    out.segment(sp.layer_offset(i), sp.dims[i]) =
        delta * sp.blocks[static_cast<std::size_t>(i - 1)] * gamma.layers[static_cast<std::size_t>(i - 1)];
  out(n) = delta;
  return out;
}

AffineMap TrajectoryBundle::phi(double s) const {
  if (!(s > 0.0)) throw SingularMapError("Phi^s is singular at s = 0");
  if (s > 1.0) throw InvalidParametersError("Phi^s requires s in (0, 1]");
  AffineMap map;
  map.kind = AffineMap::Kind::Phi;
  map.s = s;
  map.matrix = wr_.wdelta(s) * wr_.pseudo_inverse_wdelta1();
  map.offset = wr_.transport_T(s) * endpoint_.control_vector() -
               map.matrix * (wr_.t1() * endpoint_.control_vector());
  return map;
}

AffineMap TrajectoryBundle::psi(double s) const {
  if (s < 0.0 || s > opts_.s0_psi)
    throw InvalidParametersError("Psi^s is served on [0, s0] only");
  AffineMap map;
  map.kind = AffineMap::Kind::Psi;
  map.s = s;
  const Eigen::MatrixXd wg = wr_.wdelta(s) * wr_.pseudo_inverse_wdelta1();
  map.matrix = wr_.transport_T(s) - wg * wr_.t1();
  map.offset = wg * target_.control_vector();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(map.matrix);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > opts_.psi_cond_warn)
    map.near_singular = true;
  return map;
}

Eigen::MatrixXd TrajectoryBundle::grad_phi_inverse(double s) const {
  if (!(s > 0.0)) throw SingularMapError("grad of the inverse map is singular at s = 0");
  if (s > 1.0) throw InvalidParametersError("grad_phi_inverse requires s in (0, 1]");
  const SystemSpec& sp = spec();
  const int d0 = sp.dims[0];
  if (sp.total_dim() == wr_.stacked_dim()) {
    // Square case: [W^delta(s)]^{-1} restricted to the leading block column
    // reduces to W(s)^{-1} there, because the leading block of R is the
    // identity and R is block diagonal.
    Eigen::MatrixXd selector = Eigen::MatrixXd::Zero(wr_.stacked_dim(), d0);
    selector.topRows(d0) = Eigen::MatrixXd::Identity(d0, d0);
    return wr_.wdelta(1.0) * wr_.wronskian(s).partialPivLu().solve(selector);
  }
  // Non-square case: generalized inverse of W^delta(s); its first d_0 columns
  // are exactly pinv * (Id_{d_0}; O; ...).
  return wr_.wdelta(1.0) *
         pseudo_inverse(wr_.wdelta(s), opts_.pinv_cutoff).leftCols(d0);
}

SlopeFit singularity_slope(const TrajectoryBundle& bundle, double s_lo, double s_hi, int n) {
  SlopeFit fit;
  fit.degenerate_control = bundle.coefficients().lpNorm<Eigen::Infinity>() < 1e-12;
  fit.n_points = n;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < n; ++k) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
    const double s = s_lo * std::pow(s_hi / s_lo, frac);
    const double x = std::log(s);
    const double y = std::log(bundle.grad_phi_inverse(s).norm());
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

BoundingRadius bounding_radius(const SystemSpec& spec, const ControlBasis& basis,
                               const CylinderTriple& layout, int n_samples, std::uint64_t seed,
                               TrajectoryOptions opts) {
  BoundingRadius result;
  result.max_layer_norms.assign(static_cast<std::size_t>(spec.kappa) + 1, 0.0);
  const auto future = cylinder_sample(spec, layout.future, n_samples, seed ^ 0x66757475ULL);
  const auto middle = cylinder_sample(spec, layout.middle, n_samples, seed ^ 0x6d696464ULL);
  const auto past = cylinder_sample(spec, layout.past, n_samples, seed ^ 0x70617374ULL);

  std::vector<double> s_grid;
  for (int k = 0; k <= 8; ++k) s_grid.push_back(1e-4 * std::pow(1e3, k / 8.0));  // up to 0.1
  for (int k = 1; k <= 18; ++k) s_grid.push_back(0.1 + 0.9 * k / 18.0);
  s_grid.push_back(0.0);

  double max_time = 0.0;
  for (int p = 0; p < n_samples; ++p) {
    for (const KineticPoint* end : {&future[static_cast<std::size_t>(p)],
                                    &past[static_cast<std::size_t>(p)]}) {
      const TrajectoryBundle bundle =
          TrajectoryBundle::solve(spec, basis, *end, middle[static_cast<std::size_t>(p)], opts);
      for (double s : s_grid) {
        const KineticPoint g = bundle.at(s);
        for (int i = 0; i <= spec.kappa; ++i) {
          const double norm = g.layers[static_cast<std::size_t>(i)].norm();
          if (norm > result.max_layer_norms[static_cast<std::size_t>(i)])
            result.max_layer_norms[static_cast<std::size_t>(i)] = norm;
        }
        max_time = std::max(max_time, std::abs(g.t));
      }
    }
  }
  for (int i = 0; i <= spec.kappa; ++i) {
    const double norm = result.max_layer_norms[static_cast<std::size_t>(i)];
    const double r = norm > 0.0 ? std::pow(norm, 1.0 / (1.0 + 2.0 * i * spec.beta)) : 0.0;
    if (r > result.radius) {
      result.radius = r;
      result.worst_layer = i;
    }
  }
  result.time_radius = std::pow(max_time, 1.0 / (2.0 * spec.beta));
  result.radius = std::max(result.radius, result.time_radius);
  return result;
}

}  // namespace kolmo
