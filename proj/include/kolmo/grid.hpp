#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "kolmo/geometry.hpp"

namespace kolmo {

/// Tensor grid over the stacked spatial coordinates (layer 0 axes first,
/// then layer 1, ...). Cell-centered; axis 0 varies fastest in flat indices.
struct GridGeometry {
  std::vector<double> lo, hi;
  std::vector<int> n;

  int axes() const { return static_cast<int>(n.size()); }
  long cells() const;
  double h(int a) const { return (hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)]) / n[static_cast<std::size_t>(a)]; }
  double cell_volume() const;
  double center(int a, int i) const { return lo[static_cast<std::size_t>(a)] + (i + 0.5) * h(a); }
  std::vector<long> strides() const;
  void decompose(long flat, std::vector<int>& idx) const;
  Eigen::VectorXd cell_center(long flat) const;

  /// Uniform box: per-axis half-extents (one entry per axis) and counts.
  static GridGeometry box(const std::vector<double>& half_extent, const std::vector<int>& counts);
};

enum class BoundaryPolicy { Periodic, DirichletZero, DirichletFrozenInflow };

/// Symmetric d0 x d0 diffusion coefficient as a function of the spatial
/// point; eigenvalues confined to [1/Lambda, Lambda]. Time-constant.
struct CoefficientField {
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> matrix_at;
  double min_eig = 1.0;
  double max_eig = 1.0;
  bool is_identity = true;

  static CoefficientField identity(int d0);
};

/// Discretized f over the tensor grid and a set of stored time slices,
/// carrying the materialized per-cell coefficient field (packed lower
/// triangle, row-major) and, when attached, the per-slice source values.
struct GridField {
  SystemSpec spec;
  GridGeometry grid;
  std::vector<double> times;    // stored snapshot times (ascending)
  std::vector<double> values;   // times.size() x cells, slice-major
  std::vector<double> coeff;    // cells x d0(d0+1)/2
  std::vector<double> source;   // optional, same layout as values
  double dt = 0.0;              // solver step actually used
  double lambda = 1.0;

  long cells() const { return grid.cells(); }
  int slices() const { return static_cast<int>(times.size()); }
  double at(int k, long cell) const { return values[static_cast<std::size_t>(k) * static_cast<std::size_t>(cells()) + static_cast<std::size_t>(cell)]; }
  const double* slice(int k) const { return values.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(cells()); }
  double* slice(int k) { return values.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(cells()); }
  /// A(cell) as a dense symmetric matrix.
  Eigen::MatrixXd coeff_at(long cell) const;
};

/// Validates that every materialized coefficient cell has eigenvalues in
/// [1/Lambda - 1e-12, Lambda + 1e-12]; throws InvalidSpecError otherwise.
void check_coefficient_bounds(const GridField& field);

}  // namespace kolmo
