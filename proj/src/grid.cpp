#include "kolmo/grid.hpp"

#include <Eigen/Eigenvalues>

namespace kolmo {

long GridGeometry::cells() const {
  long c = 1;
  for (int count : n) c *= count;
  return c;
}

double GridGeometry::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < axes(); ++a) v *= h(a);
  return v;
}

std::vector<long> GridGeometry::strides() const {
  std::vector<long> s(n.size());
  long acc = 1;
  for (std::size_t a = 0; a < n.size(); ++a) {
    s[a] = acc;
    acc *= n[a];
  }
  return s;
}

void GridGeometry::decompose(long flat, std::vector<int>& idx) const {
  idx.resize(n.size());
  for (std::size_t a = 0; a < n.size(); ++a) {
    idx[a] = static_cast<int>(flat % n[a]);
    flat /= n[a];
  }
}

Eigen::VectorXd GridGeometry::cell_center(long flat) const {
  Eigen::VectorXd x(axes());
  for (int a = 0; a < axes(); ++a) {
    x(a) = center(a, static_cast<int>(flat % n[static_cast<std::size_t>(a)]));
    flat /= n[static_cast<std::size_t>(a)];
  }
  return x;
}

GridGeometry GridGeometry::box(const std::vector<double>& half_extent,
                               const std::vector<int>& counts) {
  if (half_extent.size() != counts.size())
    throw InvalidParametersError("box extents and counts must align");
  GridGeometry g;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] < 1 || !(half_extent[a] > 0.0))
      throw InvalidParametersError("box axes need positive extent and count");
    g.lo.push_back(-half_extent[a]);
    g.hi.push_back(half_extent[a]);
    g.n.push_back(counts[a]);
  }
  return g;
}

CoefficientField CoefficientField::identity(int d0) {
  CoefficientField f;
  f.matrix_at = [d0](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(d0, d0); };
  f.min_eig = 1.0;
  f.max_eig = 1.0;
  f.is_identity = true;
  return f;
}

Eigen::MatrixXd GridField::coeff_at(long cell) const {
  const int d0 = spec.dims[0];
  const int packed = d0 * (d0 + 1) / 2;
  Eigen::MatrixXd a(d0, d0);
  int k = 0;
  const double* base = coeff.data() + static_cast<std::size_t>(cell) * packed;
  for (int r = 0; r < d0; ++r)
    for (int c = 0; c <= r; ++c) {
      a(r, c) = base[k];
      a(c, r) = base[k];
      ++k;
    }
  return a;
}

void check_coefficient_bounds(const GridField& field) {
  const int d0 = field.spec.dims[0];
  const double lo = 1.0 / field.lambda - 1e-12;
  const double hi = field.lambda + 1e-12;
  const long cells = field.cells();
  if (d0 == 1) {
    for (long c = 0; c < cells; ++c) {
      const double a = field.coeff[static_cast<std::size_t>(c)];
      if (a < lo || a > hi)
        throw InvalidSpecError("coefficient outside the ellipticity interval");
    }
    return;
  }
  for (long c = 0; c < cells; ++c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(field.coeff_at(c));
    if (es.eigenvalues().minCoeff() < lo || es.eigenvalues().maxCoeff() > hi)
      throw InvalidSpecError("coefficient eigenvalues outside the ellipticity interval");
  }
}

}  // namespace kolmo
