#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kolmo/errors.hpp"

namespace kolmo {

/// The equation class: commutator depth kappa, homogeneity beta in (0,1],
/// layer dimensions d_0 >= ... >= d_kappa >= 1, sub-diagonal blocks B_i of
/// shape d_i x d_{i-1} with full row rank, and the ellipticity bound Lambda.
struct SystemSpec {
  int kappa = 1;
  double beta = 1.0;
  std::vector<int> dims;                // d_0 ... d_kappa
  std::vector<Eigen::MatrixXd> blocks;  // B_1 ... B_kappa
  double lambda = 1.0;

  /// N = d_0 + ... + d_kappa.
  int total_dim() const;
  /// Offset of layer i in the stacked (x0, x1, ..., xkappa) coordinate order.
  int layer_offset(int i) const;

  /// Validates every structural invariant; throws InvalidSpecError.
  static SystemSpec validated(int kappa, double beta, std::vector<int> dims,
                              std::vector<Eigen::MatrixXd> blocks, double lambda);

  /// The prototype chain: all layers of dimension d, B_i = Id_d, beta = 1.
  static SystemSpec kolmogorov(int kappa, int d, double lambda = 1.0);
};

/// Checks all SystemSpec invariants; throws InvalidSpecError on violation.
void validate_spec(const SystemSpec& spec);

/// Layered point z = (x^(0), ..., x^(kappa), t). Layers are stored in
/// ascending order; the reversed display order (x^(kappa), ..., x^(0)) is
/// used only at matrix-facing boundaries.
struct KineticPoint {
  std::vector<Eigen::VectorXd> layers;  // layers[i] = x^(i)
  double t = 0.0;

  static KineticPoint origin(const SystemSpec& spec);
  /// From the stacked vector (x0; x1; ...; xkappa).
  static KineticPoint from_control(const SystemSpec& spec, const Eigen::VectorXd& x, double t);
  /// From the stacked vector (xkappa; ...; x1; x0).
  static KineticPoint from_display(const SystemSpec& spec, const Eigen::VectorXd& x, double t);

  Eigen::VectorXd control_vector() const;
  Eigen::VectorXd display_vector() const;
};

/// Throws InvalidSpecError if the point's layer dimensions do not match.
void check_point(const SystemSpec& spec, const KineticPoint& z);

/// Assembles the N x N transport matrix with B_i blocks on the
/// super-subdiagonal in display order; nilpotent of index kappa+1.
Eigen::MatrixXd assemble_B(const SystemSpec& spec);

/// Ordered product B_i B_{i-1} ... B_j (1 <= j <= i <= kappa), d_i x d_{j-1}.
Eigen::MatrixXd composed_block(const SystemSpec& spec, int i, int j);

/// exp(tB) as the terminating series sum_{m=0}^{kappa} (tB)^m / m!.
Eigen::MatrixXd exp_tB(const SystemSpec& spec, double t);

/// Group law z_tilde o z = (x + exp(tB) x_tilde, t + t_tilde).
KineticPoint group_compose(const SystemSpec& spec, const KineticPoint& z_tilde,
                           const KineticPoint& z);

/// The unique inverse (-exp(-tB) x, -t).
KineticPoint group_inverse(const SystemSpec& spec, const KineticPoint& z);

/// Anisotropic dilation: layer i scaled by r^(1+2*i*beta), time by r^(2*beta).
KineticPoint dilate(const SystemSpec& spec, double r, const KineticPoint& z);

enum class CylinderKind { UnitTemplate, Dilated, Translated };

/// Q_r(center) = center o delta_r(Q_1), where Q_1 is the unit template
/// B_1 x ... x B_1 x (-1, 0]. The center's time is the top of the window.
struct Cylinder {
  KineticPoint center;
  double radius = 1.0;
  double t_lo = -1.0;  // half-open window (t_lo, t_hi]
  double t_hi = 0.0;
  CylinderKind kind = CylinderKind::UnitTemplate;

  static Cylinder unit(const SystemSpec& spec);
  static Cylinder at(const SystemSpec& spec, const KineticPoint& center, double r);
};

bool cylinder_contains(const SystemSpec& spec, const Cylinder& cyl, const KineticPoint& z);

/// n points uniformly distributed in the cylinder: per-layer ball rejection
/// sampling on the unit template, pushed forward by dilation and group
/// translation. Deterministic per seed.
std::vector<KineticPoint> cylinder_sample(const SystemSpec& spec, const Cylinder& cyl, int n,
                                          std::uint64_t seed);

/// The future/middle/past cylinders of the main inequality, parametrised by
/// the time gap between consecutive windows. gap = 1 gives
/// Q+ = (-1,0], Q0 = (-3,-2], Q- = (-5,-4], all with unit spatial balls.
struct CylinderTriple {
  Cylinder future, middle, past;
};

CylinderTriple three_cylinder_layout(const SystemSpec& spec, double gap = 1.0);

}  // namespace kolmo
