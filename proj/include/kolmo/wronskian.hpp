#pragma once

#include <Eigen/Dense>

#include "kolmo/controls.hpp"
#include "kolmo/geometry.hpp"

namespace kolmo {

struct WronskianOptions {
  double delta_min = 1.0;      // cylinders are disjoint in time, so |delta| stays away from 0
  double det_check_rel = 1e-9; // construction-time closed-form vs numeric determinant check
  double pinv_cutoff = 1e-12;  // singular values below cutoff * sigma_max are treated as zero
};

/// Cached matrices of the boundary-value control solve for one signed time
/// increment delta = t_0 - t_endpoint: the scaling matrix R, the transport
/// matrix T(s), the Wronskian W(s) of the control family, and the
/// pseudo-inverse of W^delta(1) = R W(1).
class WronskianBundle {
 public:
  using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  WronskianBundle(SystemSpec spec, ControlBasis basis, double delta, WronskianOptions opts = {});

  const SystemSpec& spec() const { return spec_; }
  const ControlBasis& basis() const { return basis_; }
  double delta() const { return delta_; }
  const WronskianOptions& options() const { return opts_; }

  /// Block i of the stacked coefficient/Wronskian layout has size d_0; the
  /// stacked dimension is (kappa+1) d_0.
  int stacked_dim() const { return (spec_.kappa + 1) * spec_.dims[0]; }

  /// W(s): block (i, j) is g_j^{(kappa-i)}(s) Id_{d_0}, i, j = 0..kappa.
  Eigen::MatrixXd wronskian(double s) const;

  /// W^delta(s) = R W(s), shape N x (kappa+1) d_0.
  Eigen::MatrixXd wdelta(double s) const;

  /// Block-diagonal scaling matrix R = diag(Id_{d_0}, delta Btilde_{1,1}, ...,
  /// delta^kappa Btilde_{kappa,1}), shape N x (kappa+1) d_0.
  const Eigen::MatrixXd& scaling_R() const { return R_; }

  /// Lower block-triangular free-transport matrix T(s) with unit diagonal and
  /// (i, j) sub-block (s delta)^{i-j}/(i-j)! Btilde_{i,j+1}.
  Eigen::MatrixXd transport_T(double s) const;

  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::MatrixXd& w1_inverse() const { return w1_inv_; }
  const Eigen::MatrixXd& t1() const { return t1_; }

  /// G = W(1)^{-1} R^+ with R^+ the Moore-Penrose pseudo-inverse of R;
  /// satisfies W^delta(1) G = Id_N.
  const Eigen::MatrixXd& pseudo_inverse_wdelta1() const { return wdelta1_pinv_; }

  /// Closed-form det W(s): Vandermonde factor in the alphas times
  /// s^{d_0 ((kappa+1)(kappa+2)/2 + sum alpha_i)}.
  double det_closed_form(double s) const;

  /// LU determinant of the assembled W(s), evaluated in extended precision.
  long double det_numeric(double s) const;

  // Extended-precision companions. Nearly balanced alpha spreads make W(1)
  // Vandermonde-ill-conditioned; the control solve and path evaluation go
  // through these to keep endpoint residuals at the 1e-12 level.
  const Eigen::MatrixXd& r_pinv() const { return r_pinv_; }
  MatLD wronskian_ld(double s) const;
  const MatLD& scaling_R_ld() const { return r_ld_; }
  VecLD solve_w1_ld(const VecLD& rhs) const { return w1_lu_ld_.solve(rhs); }

 private:
  SystemSpec spec_;
  ControlBasis basis_;
  double delta_;
  WronskianOptions opts_;
  Eigen::MatrixXd R_;
  Eigen::MatrixXd t1_;
  Eigen::MatrixXd w1_;
  Eigen::MatrixXd w1_inv_;
  Eigen::MatrixXd r_pinv_;
  Eigen::MatrixXd wdelta1_pinv_;
  MatLD r_ld_;
  Eigen::PartialPivLU<MatLD> w1_lu_ld_;
};

/// Moore-Penrose pseudo-inverse via SVD with relative cutoff.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double cutoff = 1e-12);

// Spec-facing free functions.
inline Eigen::MatrixXd wronskian_matrix(const WronskianBundle& b, double s) {
  return b.wronskian(s);
}
inline double det_closed_form(const WronskianBundle& b, double s) { return b.det_closed_form(s); }
inline Eigen::MatrixXd scaling_matrix_R(const WronskianBundle& b) { return b.scaling_R(); }
inline Eigen::MatrixXd transport_matrix_T(const WronskianBundle& b, double s) {
  return b.transport_T(s);
}
inline Eigen::MatrixXd pseudo_inverse_Wdelta1(const WronskianBundle& b) {
  return b.pseudo_inverse_wdelta1();
}

}  // namespace kolmo
