#include "kolmo/geometry.hpp"

#include <cmath>
#include <numeric>

#include "kolmo/rng.hpp"

namespace kolmo {

int SystemSpec::total_dim() const {
  return std::accumulate(dims.begin(), dims.end(), 0);
}

int SystemSpec::layer_offset(int i) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += dims[k];
  return off;
}

SystemSpec SystemSpec::validated(int kappa, double beta, std::vector<int> dims,
                                 std::vector<Eigen::MatrixXd> blocks, double lambda) {
  SystemSpec spec;
  spec.kappa = kappa;
  spec.beta = beta;
  spec.dims = std::move(dims);
  spec.blocks = std::move(blocks);
  spec.lambda = lambda;
  validate_spec(spec);
  return spec;
}

SystemSpec SystemSpec::kolmogorov(int kappa, int d, double lambda) {
  std::vector<int> dims(static_cast<std::size_t>(kappa) + 1, d);
  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(kappa),
                                      Eigen::MatrixXd::Identity(d, d));
  return validated(kappa, 1.0, std::move(dims), std::move(blocks), lambda);
}

void validate_spec(const SystemSpec& spec) {
  if (spec.kappa < 1) throw InvalidSpecError("kappa must be >= 1");
  if (!(spec.beta > 0.0) || spec.beta > 1.0) throw InvalidSpecError("beta must lie in (0, 1]");
  if (spec.lambda < 1.0) throw InvalidSpecError("lambda must be >= 1");
  if (static_cast<int>(spec.dims.size()) != spec.kappa + 1)
    throw InvalidSpecError("dims must list d_0 ... d_kappa");
  for (int i = 0; i <= spec.kappa; ++i) {
    if (spec.dims[i] < 1) throw InvalidSpecError("all layer dimensions must be >= 1");
    if (i > 0 && spec.dims[i] > spec.dims[i - 1])
      throw InvalidSpecError("layer dimensions must be non-increasing");
  }
  if (static_cast<int>(spec.blocks.size()) != spec.kappa)
    throw InvalidSpecError("blocks must list B_1 ... B_kappa");
  for (int i = 1; i <= spec.kappa; ++i) {
    const Eigen::MatrixXd& b = spec.blocks[i - 1];
    if (b.rows() != spec.dims[i] || b.cols() != spec.dims[i - 1])
      throw InvalidSpecError("block B_" + std::to_string(i) + " must be d_i x d_{i-1}");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * sv(0))
      throw InvalidSpecError("block B_" + std::to_string(i) + " is numerically rank-deficient");
  }
  Eigen::MatrixXd B = assemble_B(spec);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  const double norm = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  if (norm > spec.lambda * (1.0 + 1e-12) + 1e-12)
    throw InvalidSpecError("operator norm of B exceeds lambda");
}

KineticPoint KineticPoint::origin(const SystemSpec& spec) {
  KineticPoint z;
  z.layers.reserve(spec.dims.size());
  for (int d : spec.dims) z.layers.push_back(Eigen::VectorXd::Zero(d));
  z.t = 0.0;
  return z;
}

KineticPoint KineticPoint::from_control(const SystemSpec& spec, const Eigen::VectorXd& x,
                                        double t) {
  if (x.size() != spec.total_dim()) throw InvalidSpecError("control vector has wrong length");
  KineticPoint z;
  z.t = t;
  int off = 0;
  for (int d : spec.dims) {
    z.layers.push_back(x.segment(off, d));
    off += d;
  }
  return z;
}

KineticPoint KineticPoint::from_display(const SystemSpec& spec, const Eigen::VectorXd& x,
                                        double t) {
  if (x.size() != spec.total_dim()) throw InvalidSpecError("display vector has wrong length");
  KineticPoint z;
  z.t = t;
  z.layers.resize(spec.dims.size());
  int off = 0;
  for (int i = static_cast<int>(spec.dims.size()) - 1; i >= 0; --i) {
    z.layers[i] = x.segment(off, spec.dims[i]);
    off += spec.dims[i];
  }
  return z;
}

Eigen::VectorXd KineticPoint::control_vector() const {
  int n = 0;
  for (const auto& l : layers) n += static_cast<int>(l.size());
  Eigen::VectorXd x(n);
  int off = 0;
  for (const auto& l : layers) {
    x.segment(off, l.size()) = l;
    off += static_cast<int>(l.size());
  }
  return x;
}

Eigen::VectorXd KineticPoint::display_vector() const {
  int n = 0;
  for (const auto& l : layers) n += static_cast<int>(l.size());
  Eigen::VectorXd x(n);
  int off = 0;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    x.segment(off, it->size()) = *it;
    off += static_cast<int>(it->size());
  }
  return x;
}

void check_point(const SystemSpec& spec, const KineticPoint& z) {
  if (static_cast<int>(z.layers.size()) != spec.kappa + 1)
    throw InvalidSpecError("point has wrong number of layers");
  for (int i = 0; i <= spec.kappa; ++i)
    if (z.layers[i].size() != spec.dims[i])
      throw InvalidSpecError("layer " + std::to_string(i) + " has wrong dimension");
}

Eigen::MatrixXd assemble_B(const SystemSpec& spec) {
  const int n = spec.total_dim();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  // Display order: rows are (x^kappa, ..., x^1, x^0); row block for x^(i)
  // receives B_i applied to x^(i-1).
  int row = 0;
  for (int i = spec.kappa; i >= 1; --i) {
    const int col = row + spec.dims[i];
    B.block(row, col, spec.dims[i], spec.dims[i - 1]) = spec.blocks[i - 1];
    row += spec.dims[i];
  }
  return B;
}

Eigen::MatrixXd composed_block(const SystemSpec& spec, int i, int j) {
  if (j < 1 || i < j || i > spec.kappa)
    throw InvalidParametersError("composed_block requires 1 <= j <= i <= kappa");
  Eigen::MatrixXd prod = spec.blocks[i - 1];
  for (int k = i - 1; k >= j; --k) prod = prod * spec.blocks[k - 1];
  return prod;
}

Eigen::MatrixXd exp_tB(const SystemSpec& spec, double t) {
  const int n = spec.total_dim();
  const Eigen::MatrixXd B = assemble_B(spec);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int m = 1; m <= spec.kappa; ++m) {
    term = (term * B) * (t / m);
    sum += term;
  }
  return sum;
}

KineticPoint group_compose(const SystemSpec& spec, const KineticPoint& z_tilde,
                           const KineticPoint& z) {
  check_point(spec, z_tilde);
  check_point(spec, z);
  Eigen::VectorXd x = z.display_vector() + exp_tB(spec, z.t) * z_tilde.display_vector();
  return KineticPoint::from_display(spec, x, z.t + z_tilde.t);
}

KineticPoint group_inverse(const SystemSpec& spec, const KineticPoint& z) {
  check_point(spec, z);
  Eigen::VectorXd x = -(exp_tB(spec, -z.t) * z.display_vector());
  return KineticPoint::from_display(spec, x, -z.t);
}

KineticPoint dilate(const SystemSpec& spec, double r, const KineticPoint& z) {
  if (!(r > 0.0)) throw InvalidParametersError("dilation requires r > 0");
  check_point(spec, z);
  KineticPoint out = z;
  for (int i = 0; i <= spec.kappa; ++i)
    out.layers[i] *= std::pow(r, 1.0 + 2.0 * i * spec.beta);
  out.t *= std::pow(r, 2.0 * spec.beta);
  return out;
}

Cylinder Cylinder::unit(const SystemSpec& spec) {
  Cylinder cyl;
  cyl.center = KineticPoint::origin(spec);
  cyl.radius = 1.0;
  cyl.t_lo = -1.0;
  cyl.t_hi = 0.0;
  cyl.kind = CylinderKind::UnitTemplate;
  return cyl;
}

Cylinder Cylinder::at(const SystemSpec& spec, const KineticPoint& center, double r) {
  if (!(r > 0.0)) throw InvalidParametersError("cylinder radius must be positive");
  check_point(spec, center);
  Cylinder cyl;
  cyl.center = center;
  cyl.radius = r;
  cyl.t_hi = center.t;
  cyl.t_lo = center.t - std::pow(r, 2.0 * spec.beta);
  bool centered = center.t == 0.0;
  for (const auto& l : center.layers) centered = centered && l.isZero(0.0);
  cyl.kind = centered ? (r == 1.0 ? CylinderKind::UnitTemplate : CylinderKind::Dilated)
                      : CylinderKind::Translated;
  return cyl;
}

bool cylinder_contains(const SystemSpec& spec, const Cylinder& cyl, const KineticPoint& z) {
  check_point(spec, z);
  KineticPoint w = group_compose(spec, group_inverse(spec, cyl.center), z);
  KineticPoint u = dilate(spec, 1.0 / cyl.radius, w);
  for (const auto& layer : u.layers)
    if (layer.norm() > 1.0) return false;
  return u.t > -1.0 && u.t <= 0.0;
}

std::vector<KineticPoint> cylinder_sample(const SystemSpec& spec, const Cylinder& cyl, int n,
                                          std::uint64_t seed) {
  std::vector<KineticPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  rng::Stream stream = rng::Stream::named(seed, "cylinder_sample");
  for (int k = 0; k < n; ++k) {
    KineticPoint w = KineticPoint::origin(spec);
    for (int i = 0; i <= spec.kappa; ++i) {
      Eigen::VectorXd v(spec.dims[i]);
      do {
        for (int c = 0; c < spec.dims[i]; ++c) v(c) = stream.uniform(-1.0, 1.0);
      } while (v.norm() > 1.0);
      w.layers[i] = v;
    }
    w.t = -stream.next_double();  // uniform in (-1, 0]
    out.push_back(group_compose(spec, cyl.center, dilate(spec, cyl.radius, w)));
  }
  return out;
}

CylinderTriple three_cylinder_layout(const SystemSpec& spec, double gap) {
  if (!(gap > 0.0)) throw InvalidParametersError("cylinder time gap must be positive");
  CylinderTriple triple;
  KineticPoint c = KineticPoint::origin(spec);
  triple.future = Cylinder::at(spec, c, 1.0);
  c.t = -1.0 - gap;
  triple.middle = Cylinder::at(spec, c, 1.0);
  c.t = -2.0 - 2.0 * gap;
  triple.past = Cylinder::at(spec, c, 1.0);
  return triple;
}

}  // namespace kolmo
