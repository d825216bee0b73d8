#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kolmo/wronskian.hpp"

namespace kolmo {

struct TrajectoryOptions {
  double delta_min = 1.0;
  double s0_psi = 0.5;          // psi maps are served on [0, s0_psi]
  double psi_cond_warn = 1e8;   // condition number beyond which psi is flagged
  double det_check_rel = 1e-9;
  double pinv_cutoff = 1e-12;
};

/// Affine connection map x -> matrix * x + offset in stacked layer
/// coordinates. Phi maps the intermediate point x_0 to the path position at s;
/// Psi maps the endpoint x_pm there instead.
struct AffineMap {
  enum class Kind { Phi, Psi };
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;
  double s = 0.0;
  Kind kind = Kind::Phi;
  bool near_singular = false;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return matrix * x + offset; }
};

/// Solved control problem connecting z_endpoint (s=0) to z_0 (s=1): the
/// coefficient vector M, the boundary defect Y = x_0 - T(1) x_endpoint, and
/// evaluators for the path and its connection maps.
class TrajectoryBundle {
 public:
  static TrajectoryBundle solve(const SystemSpec& spec, const ControlBasis& basis,
                                const KineticPoint& z_endpoint, const KineticPoint& z_0,
                                TrajectoryOptions opts = {});

  const SystemSpec& spec() const { return wr_.spec(); }
  const WronskianBundle& wronskian_bundle() const { return wr_; }
  const KineticPoint& endpoint() const { return endpoint_; }
  const KineticPoint& target() const { return target_; }
  double delta() const { return wr_.delta(); }
  const Eigen::VectorXd& coefficients() const { return m_; }
  const Eigen::VectorXd& boundary_defect() const { return y_; }
  const TrajectoryOptions& options() const { return opts_; }

  /// Gamma(s) for s in [0, 1]: T(s) x_endpoint + W^delta(s) M in space,
  /// affine interpolation s t_0 + (1-s) t_endpoint in time.
  KineticPoint at(double s) const;

  /// Spatial part of Gamma(s) in extended precision (control order). Paths
  /// with clustered alphas legitimately swing to 1e3..1e4, so double output
  /// alone cannot support tight finite-difference residuals.
  WronskianBundle::VecLD at_ld(double s) const;

  /// d Gamma / ds (space part stacked, time slot appended).
  Eigen::VectorXd tangent(double s) const;

  /// Phi^s with matrix W^delta(s) G and offset (T(s) - matrix T(1)) x_endpoint.
  AffineMap phi(double s) const;

  /// Psi^s with matrix T(s) - W^delta(s) G T(1) and offset W^delta(s) G x_0.
  AffineMap psi(double s) const;

  /// Derivative of (Phi^s)^{-1} along the layer-0 slot:
  /// W^delta(1) [W^delta(s)]^{-1} (Id_{d_0}; O; ...), N x d_0.
  Eigen::MatrixXd grad_phi_inverse(double s) const;

 private:
  TrajectoryBundle(WronskianBundle wr, KineticPoint endpoint, KineticPoint target,
                   TrajectoryOptions opts);

  WronskianBundle wr_;
  KineticPoint endpoint_, target_;
  TrajectoryOptions opts_;
  Eigen::VectorXd m_, y_;
  WronskianBundle::VecLD m_ld_, xe_ld_;
};

inline TrajectoryBundle solve_control(const SystemSpec& spec, const ControlBasis& basis,
                                      const KineticPoint& z_endpoint, const KineticPoint& z_0,
                                      TrajectoryOptions opts = {}) {
  return TrajectoryBundle::solve(spec, basis, z_endpoint, z_0, opts);
}
inline KineticPoint eval_trajectory(const TrajectoryBundle& b, double s) { return b.at(s); }
inline AffineMap phi_map(const TrajectoryBundle& b, double s) { return b.phi(s); }
inline AffineMap psi_map(const TrajectoryBundle& b, double s) { return b.psi(s); }
inline Eigen::MatrixXd grad_phi_inverse(const TrajectoryBundle& b, double s) {
  return b.grad_phi_inverse(s);
}

struct SlopeFit {
  double slope = 0.0;
  bool degenerate_control = false;  // pure transport: excluded from slope sweeps
  int n_points = 0;
};

/// Least-squares slope of log ||grad_phi_inverse|| against log s on a
/// logarithmic window; the expected value is -1 - max_i alpha_i.
SlopeFit singularity_slope(const TrajectoryBundle& bundle, double s_lo = 1e-6, double s_hi = 1e-3,
                           int n = 20);

struct BoundingRadius {
  double radius = 0.0;                 // dilation-consistent empirical R
  double time_radius = 0.0;            // R needed to cover the time span
  int worst_layer = 0;                 // layer attaining the radius
  std::vector<double> max_layer_norms; // raw per-layer trajectory bounds
};

/// Monte Carlo sweep over endpoint pairs of the three-cylinder layout: solves
/// both half-trajectories and records the largest per-layer norms of Gamma(s).
BoundingRadius bounding_radius(const SystemSpec& spec, const ControlBasis& basis,
                               const CylinderTriple& layout, int n_samples, std::uint64_t seed,
                               TrajectoryOptions opts = {});

}  // namespace kolmo
