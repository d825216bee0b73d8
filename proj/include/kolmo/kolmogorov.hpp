#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "kolmo/grid.hpp"

namespace kolmo {

struct FdConfig {
  double t0 = 0.0;
  double t1 = 1.0;
  int n_steps = 0;            // 0: choose from the stability bound
  double cfl_safety = 0.4;
  int store_every = 0;        // 0: aim for ~target_slices stored slices
  int target_slices = 400;
  std::vector<BoundaryPolicy> boundary;  // per axis; empty = v Dirichlet-zero, x periodic
  std::function<double(const Eigen::VectorXd&, double)> source;  // optional
};

/// Largest stable explicit step for this grid/coefficient/transport data.
double cfl_max_dt(const SystemSpec& spec, const GridGeometry& grid, double lambda,
                  double safety);

/// Explicit scheme for  d_t f + (Bx) . grad_x f = div_v [A grad_v f] (+ S):
/// conservative centered fluxes with harmonic-mean face coefficients for the
/// diffusion, first-order upwind for the transport, explicit Euler in time.
/// Requires beta = 1. Throws CflError (with a suggested dt) or DivergenceError.
GridField fd_solve(const SystemSpec& spec, const GridGeometry& grid,
                   const CoefficientField& coeff,
                   const std::function<double(const Eigen::VectorXd&)>& initial,
                   const FdConfig& cfg);

/// Gaussian law at z_query of the degenerate diffusion started at z_source
/// (kappa = 1): velocity marginal variance sigma2 * tau, spatial layer
/// covariance sigma2 * tau^3/3 * B1 B1^T, cross block sigma2 * tau^2/2 * B1,
/// mean following free transport. sigma2 is the velocity quadratic variation
/// per unit time: 1 for the driftless unit-noise process, 2a for the Green
/// function of the equation with A = a Id.
double fundamental_solution(const SystemSpec& spec, const KineticPoint& z_source,
                            const KineticPoint& z_query, double sigma2 = 1.0);

struct SdeConfig {
  long n_paths = 1000;
  double dt = 1e-3;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::optional<KineticPoint> initial;   // default: origin
  std::vector<double> snapshot_times;    // optional intermediate dumps
  int threads = 0;                       // 0: hardware concurrency
};

struct PathEnsemble {
  SystemSpec spec;
  SdeConfig cfg;
  int n_steps = 0;
  double dt_actual = 0.0;
  std::vector<double> terminal;                 // n_paths x N, control order
  std::vector<std::vector<double>> snapshots;   // one block per snapshot time
};

/// Euler-Maruyama paths of  dX^(0) = dW,  dX^(i) = B_i X^(i-1) dt.
/// Deterministic per seed (per-path substreams), regardless of thread count.
PathEnsemble sde_simulate(const SystemSpec& spec, const SdeConfig& cfg);

struct MomentSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
MomentSummary ensemble_moments(const PathEnsemble& ens);

struct Histogram {
  GridGeometry grid;
  std::vector<double> density;  // count / (n_paths * cell volume)
  long in_range = 0;
};
Histogram empirical_density(const PathEnsemble& ens, const GridGeometry& boxes);

/// Piecewise-constant symmetric coefficient field on a fixed tile lattice
/// over [-extent, extent]^axes: eigenvalues log-uniform in [1/Lambda, Lambda],
/// deterministic per seed, independent of any solver grid resolution.
CoefficientField rough_coefficient_field(const SystemSpec& spec, double extent, int tiles,
                                         double lambda, std::uint64_t seed);

/// Adversarial preset: alternating 1/Lambda, Lambda diagonal tiles.
CoefficientField checkerboard_field(const SystemSpec& spec, double lambda, double tile_size);

/// Materializes a coefficient field at the cell centers of a grid (packed
/// lower-triangle storage, as carried by GridField).
std::vector<double> materialize_coefficient(const SystemSpec& spec, const GridGeometry& grid,
                                            const CoefficientField& coeff);

}  // namespace kolmo
