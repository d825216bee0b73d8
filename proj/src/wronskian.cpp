#include "kolmo/wronskian.hpp"

#include <cmath>

namespace kolmo {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double cutoff) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = sv.size() ? cutoff * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > tol) inv(k) = 1.0 / sv(k);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

WronskianBundle::WronskianBundle(SystemSpec spec, ControlBasis basis, double delta,
                                 WronskianOptions opts)
    : spec_(std::move(spec)), basis_(std::move(basis)), delta_(delta), opts_(opts) {
  validate_spec(spec_);
  if (basis_.kappa != spec_.kappa)
    throw InvalidParametersError("control basis and spec disagree on kappa");
  if (std::abs(delta_) < opts_.delta_min)
    throw TimeDegenerateError("|delta| below the configured floor");

  const int n = spec_.total_dim();
  const int d0 = spec_.dims[0];
  R_ = Eigen::MatrixXd::Zero(n, stacked_dim());
  R_.block(0, 0, d0, d0) = Eigen::MatrixXd::Identity(d0, d0);
  for (int i = 1; i <= spec_.kappa; ++i)
    R_.block(spec_.layer_offset(i), i * d0, spec_.dims[i], d0) =
        std::pow(delta_, i) * composed_block(spec_, i, 1);

  t1_ = transport_T(1.0);
  w1_ = wronskian(1.0);

  const double det_cf = det_closed_form(1.0);
  const long double det_num = det_numeric(1.0);
  if (det_cf == 0.0 || !std::isfinite(det_cf))
    throw DegenerateBasisError("W(1) is singular: alpha exponents too close");
  const double rel = std::abs(static_cast<double>(det_num) - det_cf) / std::abs(det_cf);
  if (rel > opts_.det_check_rel)
    throw DegenerateBasisError("closed-form and numeric det W(1) disagree (rel " +
                               std::to_string(rel) + ")");

  w1_inv_ = w1_.partialPivLu().inverse();
  r_pinv_ = pseudo_inverse(R_, opts_.pinv_cutoff);
  wdelta1_pinv_ = w1_inv_ * r_pinv_;
  r_ld_ = R_.cast<long double>();
  w1_lu_ld_ = Eigen::PartialPivLU<MatLD>(wronskian_ld(1.0));
}

WronskianBundle::MatLD WronskianBundle::wronskian_ld(double s) const {
  const int k = spec_.kappa;
  const int d0 = spec_.dims[0];
  MatLD w = MatLD::Zero(stacked_dim(), stacked_dim());
  const long double sl = s;
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) {
      const long double alpha = basis_.alphas[static_cast<std::size_t>(j)];
      long double den = 1.0L;
      for (int q = 1; q <= i + 1; ++q) den *= (q + alpha);
      const long double entry = s == 0.0 ? 0.0L : powl(sl, 1.0L + i + alpha) / den;
      for (int c = 0; c < d0; ++c) w(i * d0 + c, j * d0 + c) = entry;
    }
  return w;
}

Eigen::MatrixXd WronskianBundle::wronskian(double s) const {
  const int d0 = spec_.dims[0];
  const int k = spec_.kappa;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(stacked_dim(), stacked_dim());
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j)
      w.block(i * d0, j * d0, d0, d0) =
          g_eval(basis_, j, k - i, s) * Eigen::MatrixXd::Identity(d0, d0);
  return w;
}

Eigen::MatrixXd WronskianBundle::wdelta(double s) const { return R_ * wronskian(s); }

Eigen::MatrixXd WronskianBundle::transport_T(double s) const {
  const int n = spec_.total_dim();
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(n, n);
  double factorial = 1.0;
  // Sub-block (i, j), i > j: (s delta)^(i-j)/(i-j)! * Btilde_{i,j+1}.
  for (int i = 1; i <= spec_.kappa; ++i)
    for (int j = 0; j < i; ++j) {
      const int m = i - j;
      factorial = 1.0;
      for (int q = 2; q <= m; ++q) factorial *= q;
      t.block(spec_.layer_offset(i), spec_.layer_offset(j), spec_.dims[i], spec_.dims[j]) =
          (std::pow(s * delta_, m) / factorial) * composed_block(spec_, i, j + 1);
    }
  return t;
}

double WronskianBundle::det_closed_form(double s) const {
  if (s < 0.0) throw InvalidParametersError("det closed form requires s >= 0");
  const int k = spec_.kappa;
  const int d0 = spec_.dims[0];
  const auto& a = basis_.alphas;
  double vandermonde = 1.0;
  for (int i = 0; i <= k; ++i)
    for (int j = i + 1; j <= k; ++j) vandermonde *= (a[i] - a[j]);
  double denom = 1.0;
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) denom *= (1.0 + i + a[j]);
  double alpha_sum = 0.0;
  for (double ai : a) alpha_sum += ai;
  const double exponent = d0 * (0.5 * (k + 1) * (k + 2) + alpha_sum);
  if (s == 0.0) return exponent == 0.0 ? std::pow(vandermonde / denom, d0) : 0.0;
  return std::pow(vandermonde / denom, d0) * std::pow(s, exponent);
}

long double WronskianBundle::det_numeric(double s) const {
  // Entries rebuilt from the derivative formula in extended precision; this
  // is the plain-LU side of the closed-form determinant oracle.
  return Eigen::PartialPivLU<MatLD>(wronskian_ld(s)).determinant();
}

}  // namespace kolmo
