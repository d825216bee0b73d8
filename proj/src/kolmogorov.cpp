#include "kolmo/kolmogorov.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <thread>

#include "kolmo/rng.hpp"

namespace kolmo {

namespace {

int packed_size(int d0) { return d0 * (d0 + 1) / 2; }

double packed_diag(const std::vector<double>& coeff, long cell, int d0, int a) {
  // Lower-triangle row-major: entry (a, a) sits at a(a+1)/2 + a.
  return coeff[static_cast<std::size_t>(cell) * packed_size(d0) + a * (a + 1) / 2 + a];
}

struct AxisLayout {
  int axes = 0;
  int v_axes = 0;                  // layer-0 axes carry the diffusion
  std::vector<int> layer_of_axis;  // layer index per axis
  std::vector<int> comp_of_axis;   // component within the layer
};

AxisLayout classify_axes(const SystemSpec& spec) {
  AxisLayout lay;
  lay.axes = spec.total_dim();
  lay.v_axes = spec.dims[0];
  for (int i = 0; i <= spec.kappa; ++i)
    for (int c = 0; c < spec.dims[static_cast<std::size_t>(i)]; ++c) {
      lay.layer_of_axis.push_back(i);
      lay.comp_of_axis.push_back(c);
    }
  return lay;
}

}  // namespace

double cfl_max_dt(const SystemSpec& spec, const GridGeometry& grid, double lambda,
                  double safety) {
  const AxisLayout lay = classify_axes(spec);
  double worst = 0.0;
  // Diffusion bound with the ellipticity ceiling, plus the largest upwind
  // transport rate over the box corners.
  for (int a = 0; a < lay.v_axes; ++a) worst += 2.0 * lambda / (grid.h(a) * grid.h(a));
  for (int a = lay.v_axes; a < grid.axes(); ++a) {
    const int layer = lay.layer_of_axis[static_cast<std::size_t>(a)];
    const int comp = lay.comp_of_axis[static_cast<std::size_t>(a)];
    const Eigen::MatrixXd& b = spec.blocks[static_cast<std::size_t>(layer - 1)];
    double vmax = 0.0;
    int off = spec.layer_offset(layer - 1);
    for (int c = 0; c < spec.dims[static_cast<std::size_t>(layer - 1)]; ++c)
      vmax += std::abs(b(comp, c)) *
              std::max(std::abs(grid.lo[static_cast<std::size_t>(off + c)]),
                       std::abs(grid.hi[static_cast<std::size_t>(off + c)]));
    worst += vmax / grid.h(a);
  }
  return worst > 0.0 ? safety / worst : std::numeric_limits<double>::infinity();
}

GridField fd_solve(const SystemSpec& spec, const GridGeometry& grid,
                   const CoefficientField& coeff,
                   const std::function<double(const Eigen::VectorXd&)>& initial,
                   const FdConfig& cfg) {
  if (spec.beta < 1.0)
    throw UnsupportedModeError("the finite-difference solver covers the local case beta = 1");
  if (spec.kappa >= 2)
    for (int i = 1; i <= spec.kappa; ++i)
      if (spec.dims[static_cast<std::size_t>(i)] != spec.dims[0] ||
          !spec.blocks[static_cast<std::size_t>(i - 1)].isIdentity(1e-14))
        throw InvalidParametersError(
            "for kappa >= 2 the chain solver supports identity blocks with equal dims only");
  if (grid.axes() != spec.total_dim())
    throw InvalidParametersError("grid must have one axis per spatial dimension");
  if (!(cfg.t1 > cfg.t0)) throw InvalidParametersError("time interval must be increasing");

  const AxisLayout lay = classify_axes(spec);
  const int axes = grid.axes();
  const long cells = grid.cells();
  const int d0 = spec.dims[0];
  const std::vector<long> strides = grid.strides();

  std::vector<BoundaryPolicy> policy = cfg.boundary;
  if (policy.empty()) {
    policy.assign(static_cast<std::size_t>(axes), BoundaryPolicy::Periodic);
    for (int a = 0; a < lay.v_axes; ++a)
      policy[static_cast<std::size_t>(a)] = BoundaryPolicy::DirichletZero;
  }
  if (static_cast<int>(policy.size()) != axes)
    throw InvalidParametersError("need one boundary policy per axis");

  // Per-axis index of every cell, and cell centers.
  std::vector<std::vector<int>> idx(static_cast<std::size_t>(axes),
                                    std::vector<int>(static_cast<std::size_t>(cells)));
  std::vector<double> centers(static_cast<std::size_t>(cells) * axes);
  {
    std::vector<int> multi;
    for (long c = 0; c < cells; ++c) {
      grid.decompose(c, multi);
      for (int a = 0; a < axes; ++a) {
        idx[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)] = multi[static_cast<std::size_t>(a)];
        centers[static_cast<std::size_t>(c) * axes + a] = grid.center(a, multi[static_cast<std::size_t>(a)]);
      }
    }
  }

  // Transport velocity per x-axis: (B_layer x^{(layer-1)})_comp at the center.
  std::vector<std::vector<double>> vel(static_cast<std::size_t>(axes - lay.v_axes));
  for (int a = lay.v_axes; a < axes; ++a) {
    auto& va = vel[static_cast<std::size_t>(a - lay.v_axes)];
    va.resize(static_cast<std::size_t>(cells));
    const int layer = lay.layer_of_axis[static_cast<std::size_t>(a)];
    const int comp = lay.comp_of_axis[static_cast<std::size_t>(a)];
    const Eigen::MatrixXd& b = spec.blocks[static_cast<std::size_t>(layer - 1)];
    const int off = spec.layer_offset(layer - 1);
    for (long c = 0; c < cells; ++c) {
      double v = 0.0;
      for (int k = 0; k < spec.dims[static_cast<std::size_t>(layer - 1)]; ++k)
        v += b(comp, k) * centers[static_cast<std::size_t>(c) * axes + off + k];
      va[static_cast<std::size_t>(c)] = v;
    }
  }

  GridField field;
  field.spec = spec;
  field.grid = grid;
  field.lambda = spec.lambda;
  field.coeff = materialize_coefficient(spec, grid, coeff);
  check_coefficient_bounds(field);

  // Harmonic-mean face coefficients (diagonal entries) per v-axis; the entry
  // at cell c is the face between c and its +1 neighbour along the axis.
  std::vector<std::vector<double>> faceA(static_cast<std::size_t>(lay.v_axes));
  for (int a = 0; a < lay.v_axes; ++a) {
    auto& fa = faceA[static_cast<std::size_t>(a)];
    fa.resize(static_cast<std::size_t>(cells));
    for (long c = 0; c < cells; ++c) {
      const double here = packed_diag(field.coeff, c, d0, a);
      const int ia = idx[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
      double there = here;
      if (ia < grid.n[static_cast<std::size_t>(a)] - 1)
        there = packed_diag(field.coeff, c + strides[static_cast<std::size_t>(a)], d0, a);
      else if (policy[static_cast<std::size_t>(a)] == BoundaryPolicy::Periodic)
        there = packed_diag(field.coeff,
                            c - static_cast<long>(grid.n[static_cast<std::size_t>(a)] - 1) *
                                    strides[static_cast<std::size_t>(a)],
                            d0, a);
      fa[static_cast<std::size_t>(c)] = 2.0 * here * there / (here + there);
    }
  }

  // Stability bound from the materialized data.
  double rate_bound = 0.0;
  for (long c = 0; c < cells; ++c) {
    double r = 0.0;
    for (int a = 0; a < lay.v_axes; ++a)
      r += 2.0 * packed_diag(field.coeff, c, d0, a) / (grid.h(a) * grid.h(a));
    for (int a = lay.v_axes; a < axes; ++a)
      r += std::abs(vel[static_cast<std::size_t>(a - lay.v_axes)][static_cast<std::size_t>(c)]) /
           grid.h(a);
    rate_bound = std::max(rate_bound, r);
  }
  const double dt_max = rate_bound > 0.0 ? cfg.cfl_safety / rate_bound
                                         : std::numeric_limits<double>::infinity();
  int n_steps = cfg.n_steps;
  if (n_steps <= 0) n_steps = static_cast<int>(std::ceil((cfg.t1 - cfg.t0) / dt_max));
  const double dt = (cfg.t1 - cfg.t0) / n_steps;
  if (dt > dt_max * (1.0 + 1e-12))
    throw CflError("explicit step " + std::to_string(dt) + " exceeds the stability bound", dt_max);
  field.dt = dt;

  const int store_every = cfg.store_every > 0
                              ? cfg.store_every
                              : std::max(1, n_steps / std::max(1, cfg.target_slices));

  std::vector<double> f(static_cast<std::size_t>(cells));
  for (long c = 0; c < cells; ++c) {
    Eigen::Map<const Eigen::VectorXd> x(&centers[static_cast<std::size_t>(c) * axes], axes);
    f[static_cast<std::size_t>(c)] = initial(x);
  }
  std::vector<double> fn(f.size());

  const bool has_source = static_cast<bool>(cfg.source);
  auto store_slice = [&](const std::vector<double>& slice, double t) {
    field.times.push_back(t);
    field.values.insert(field.values.end(), slice.begin(), slice.end());
    if (has_source) {
      for (long c = 0; c < cells; ++c) {
        Eigen::Map<const Eigen::VectorXd> x(&centers[static_cast<std::size_t>(c) * axes], axes);
        field.source.push_back(cfg.source(x, t));
      }
    }
  };
  store_slice(f, cfg.t0);

  // Ghost value beyond the boundary face, per policy.
  auto ghost = [&](long cell, int axis, bool upper) -> double {
    switch (policy[static_cast<std::size_t>(axis)]) {
      case BoundaryPolicy::DirichletZero:
        return 0.0;
      case BoundaryPolicy::DirichletFrozenInflow: {
        Eigen::VectorXd x(axes);
        for (int a = 0; a < axes; ++a) x(a) = centers[static_cast<std::size_t>(cell) * axes + a];
        x(axis) += upper ? grid.h(axis) : -grid.h(axis);
        return initial(x);
      }
      case BoundaryPolicy::Periodic:
        break;  // handled by index wrap, never reaches here
    }
    return 0.0;
  };

  for (int step = 0; step < n_steps; ++step) {
    const double t = cfg.t0 + step * dt;
    for (long c = 0; c < cells; ++c) {
      const double val = f[static_cast<std::size_t>(c)];
      double rate = 0.0;
      for (int a = 0; a < lay.v_axes; ++a) {
        const double h = grid.h(a);
        const int ia = idx[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
        const long stride = strides[static_cast<std::size_t>(a)];
        const int na = grid.n[static_cast<std::size_t>(a)];
        double flux_up, flux_dn;
        if (ia < na - 1) {
          flux_up = faceA[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)] *
                    (f[static_cast<std::size_t>(c + stride)] - val) / h;
        } else if (policy[static_cast<std::size_t>(a)] == BoundaryPolicy::Periodic) {
          flux_up = faceA[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)] *
                    (f[static_cast<std::size_t>(c - static_cast<long>(na - 1) * stride)] - val) / h;
        } else {
          flux_up = faceA[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)] *
                    (ghost(c, a, true) - val) / h;
        }
        if (ia > 0) {
          flux_dn = faceA[static_cast<std::size_t>(a)][static_cast<std::size_t>(c - stride)] *
                    (val - f[static_cast<std::size_t>(c - stride)]) / h;
        } else if (policy[static_cast<std::size_t>(a)] == BoundaryPolicy::Periodic) {
          const long wrap = c + static_cast<long>(na - 1) * stride;
          flux_dn = faceA[static_cast<std::size_t>(a)][static_cast<std::size_t>(wrap)] *
                    (val - f[static_cast<std::size_t>(wrap)]) / h;
        } else {
          flux_dn = packed_diag(field.coeff, c, d0, a) * (val - ghost(c, a, false)) / h;
        }
        rate += (flux_up - flux_dn) / h;
      }
      // Mixed second derivatives for matrix coefficients.
      if (d0 > 1) {
        for (int a = 0; a < lay.v_axes; ++a)
          for (int b = 0; b < lay.v_axes; ++b) {
            if (a == b) continue;
            const double ab =
                field.coeff[static_cast<std::size_t>(c) * packed_size(d0) +
                            (a > b ? a * (a + 1) / 2 + b : b * (b + 1) / 2 + a)];
            if (ab == 0.0) continue;
            // A_ab d^2 f / da db, centered in both directions; interior only
            // (boundary cells fall back to one-sided zero contribution).
            const int ia = idx[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
            const int ib = idx[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)];
            if (ia < 1 || ia > grid.n[static_cast<std::size_t>(a)] - 2 || ib < 1 ||
                ib > grid.n[static_cast<std::size_t>(b)] - 2)
              continue;
            const long sa = strides[static_cast<std::size_t>(a)];
            const long sb = strides[static_cast<std::size_t>(b)];
            const double mixed =
                (f[static_cast<std::size_t>(c + sa + sb)] - f[static_cast<std::size_t>(c + sa - sb)] -
                 f[static_cast<std::size_t>(c - sa + sb)] + f[static_cast<std::size_t>(c - sa - sb)]) /
                (4.0 * grid.h(a) * grid.h(b));
            rate += ab * mixed;
          }
      }
      for (int a = lay.v_axes; a < axes; ++a) {
        const double v = vel[static_cast<std::size_t>(a - lay.v_axes)][static_cast<std::size_t>(c)];
        if (v == 0.0) continue;
        const double h = grid.h(a);
        const int ia = idx[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
        const long stride = strides[static_cast<std::size_t>(a)];
        const int na = grid.n[static_cast<std::size_t>(a)];
        double grad;
        if (v > 0.0) {
          double behind;
          if (ia > 0)
            behind = f[static_cast<std::size_t>(c - stride)];
          else if (policy[static_cast<std::size_t>(a)] == BoundaryPolicy::Periodic)
            behind = f[static_cast<std::size_t>(c + static_cast<long>(na - 1) * stride)];
          else
            behind = ghost(c, a, false);
          grad = (val - behind) / h;
        } else {
          double ahead;
          if (ia < na - 1)
            ahead = f[static_cast<std::size_t>(c + stride)];
          else if (policy[static_cast<std::size_t>(a)] == BoundaryPolicy::Periodic)
            ahead = f[static_cast<std::size_t>(c - static_cast<long>(na - 1) * stride)];
          else
            ahead = ghost(c, a, true);
          grad = (ahead - val) / h;
        }
        rate -= v * grad;
      }
      double next = val + dt * rate;
      if (has_source) {
        Eigen::Map<const Eigen::VectorXd> x(&centers[static_cast<std::size_t>(c) * axes], axes);
        next += dt * cfg.source(x, t);
      }
      fn[static_cast<std::size_t>(c)] = next;
    }
    f.swap(fn);

    if ((step & 63) == 0 || step == n_steps - 1) {
      for (double v : f)
        if (!std::isfinite(v)) throw DivergenceError("scheme produced non-finite values");
    }
    const int done = step + 1;
    if (done % store_every == 0 || done == n_steps) store_slice(f, cfg.t0 + done * dt);
  }
  return field;
}

double fundamental_solution(const SystemSpec& spec, const KineticPoint& z_source,
                            const KineticPoint& z_query, double sigma2) {
  if (spec.kappa != 1)
    throw InvalidParametersError("the explicit Gaussian law covers kappa = 1 only");
  check_point(spec, z_source);
  check_point(spec, z_query);
  if (!(sigma2 > 0.0)) throw InvalidParametersError("sigma2 must be positive");
  const double tau = z_query.t - z_source.t;
  if (!(tau > 0.0)) throw InvalidParametersError("elapsed time must be positive");
  const int d0 = spec.dims[0];
  const int d1 = spec.dims[1];
  const Eigen::MatrixXd& b1 = spec.blocks[0];

  const int n = d0 + d1;
  Eigen::MatrixXd sigma(n, n);
  sigma.topLeftCorner(d0, d0) = sigma2 * tau * Eigen::MatrixXd::Identity(d0, d0);
  sigma.topRightCorner(d0, d1) = sigma2 * tau * tau / 2.0 * b1.transpose();
  sigma.bottomLeftCorner(d1, d0) = sigma2 * tau * tau / 2.0 * b1;
  sigma.bottomRightCorner(d1, d1) = sigma2 * tau * tau * tau / 3.0 * b1 * b1.transpose();

  Eigen::VectorXd u(n);
  u.head(d0) = z_query.layers[0] - z_source.layers[0];
  u.tail(d1) = z_query.layers[1] - z_source.layers[1] - tau * b1 * z_source.layers[0];

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw SingularEvaluationError("degenerate covariance in the Gaussian law");
  const Eigen::VectorXd w = llt.solve(u);
  double logdet = 0.0;
  for (int k = 0; k < n; ++k) logdet += std::log(llt.matrixL()(k, k));
  const double quad = u.dot(w);
  return std::exp(-0.5 * quad - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi));
}

PathEnsemble sde_simulate(const SystemSpec& spec, const SdeConfig& cfg) {
  if (cfg.n_paths < 1) throw InvalidParametersError("need at least one path");
  if (!(cfg.dt > 0.0)) throw InvalidParametersError("dt must be positive");
  if (cfg.horizon < 0.0) throw InvalidParametersError("horizon must be non-negative");
  const int n = spec.total_dim();
  const int d0 = spec.dims[0];
  KineticPoint start = cfg.initial.value_or(KineticPoint::origin(spec));
  check_point(spec, start);
  const Eigen::VectorXd x0 = start.control_vector();

  PathEnsemble ens;
  ens.spec = spec;
  ens.cfg = cfg;
  ens.n_steps = cfg.horizon == 0.0
                    ? 0
                    : std::max(1, static_cast<int>(std::llround(std::ceil(cfg.horizon / cfg.dt - 1e-12))));
  ens.dt_actual = ens.n_steps > 0 ? cfg.horizon / ens.n_steps : 0.0;
  ens.terminal.resize(static_cast<std::size_t>(cfg.n_paths) * n);

  std::vector<int> snap_steps;
  for (double ts : cfg.snapshot_times) {
    int k = ens.n_steps > 0 ? static_cast<int>(std::llround(ts / ens.dt_actual)) : 0;
    snap_steps.push_back(std::clamp(k, 0, ens.n_steps));
  }
  ens.snapshots.assign(snap_steps.size(),
                       std::vector<double>(static_cast<std::size_t>(cfg.n_paths) * n));

  bool identity_chain = true;
  for (int i = 1; i <= spec.kappa; ++i)
    identity_chain = identity_chain && spec.dims[static_cast<std::size_t>(i)] == d0 &&
                     spec.blocks[static_cast<std::size_t>(i - 1)].isIdentity(0.0);

  const double sqrt_dt = std::sqrt(ens.dt_actual);
  auto run_block = [&](long begin, long end) {
    std::vector<double> state(static_cast<std::size_t>(n));
    std::vector<double> scratch(static_cast<std::size_t>(n));
    for (long p = begin; p < end; ++p) {
      rng::Stream stream(cfg.seed, static_cast<std::uint64_t>(p));
      for (int k = 0; k < n; ++k) state[static_cast<std::size_t>(k)] = x0(k);
      auto snap_if_due = [&](int step) {
        for (std::size_t j = 0; j < snap_steps.size(); ++j)
          if (snap_steps[j] == step)
            std::copy(state.begin(), state.end(),
                      ens.snapshots[j].begin() + static_cast<std::ptrdiff_t>(p) * n);
      };
      snap_if_due(0);
      for (int step = 1; step <= ens.n_steps; ++step) {
        if (identity_chain) {
          for (int i = spec.kappa; i >= 1; --i) {
            const int off = spec.layer_offset(i);
            const int prev = spec.layer_offset(i - 1);
            for (int c = 0; c < d0; ++c)
              state[static_cast<std::size_t>(off + c)] +=
                  ens.dt_actual * state[static_cast<std::size_t>(prev + c)];
          }
        } else {
          for (int i = spec.kappa; i >= 1; --i) {
            const Eigen::MatrixXd& b = spec.blocks[static_cast<std::size_t>(i - 1)];
            const int off = spec.layer_offset(i);
            const int prev = spec.layer_offset(i - 1);
            for (int r = 0; r < spec.dims[static_cast<std::size_t>(i)]; ++r) {
              double acc = 0.0;
              for (int c = 0; c < spec.dims[static_cast<std::size_t>(i - 1)]; ++c)
                acc += b(r, c) * state[static_cast<std::size_t>(prev + c)];
              scratch[static_cast<std::size_t>(r)] = acc;
            }
            for (int r = 0; r < spec.dims[static_cast<std::size_t>(i)]; ++r)
              state[static_cast<std::size_t>(off + r)] += ens.dt_actual * scratch[static_cast<std::size_t>(r)];
          }
        }
        for (int c = 0; c < d0; ++c) state[static_cast<std::size_t>(c)] += sqrt_dt * stream.normal();
        snap_if_due(step);
      }
      std::copy(state.begin(), state.end(),
                ens.terminal.begin() + static_cast<std::ptrdiff_t>(p) * n);
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<long>(threads, cfg.n_paths));
  if (threads <= 1) {
    run_block(0, cfg.n_paths);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (cfg.n_paths + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const long b = w * chunk;
      const long e = std::min<long>(cfg.n_paths, b + chunk);
      if (b < e) pool.emplace_back(run_block, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return ens;
}

MomentSummary ensemble_moments(const PathEnsemble& ens) {
  const int n = ens.spec.total_dim();
  const long paths = ens.cfg.n_paths;
  std::vector<long double> mean(static_cast<std::size_t>(n), 0.0L);
  for (long p = 0; p < paths; ++p)
    for (int k = 0; k < n; ++k)
      mean[static_cast<std::size_t>(k)] += ens.terminal[static_cast<std::size_t>(p) * n + k];
  MomentSummary out;
  out.mean.resize(n);
  for (int k = 0; k < n; ++k) out.mean(k) = static_cast<double>(mean[static_cast<std::size_t>(k)] / paths);
  std::vector<long double> cov(static_cast<std::size_t>(n) * n, 0.0L);
  for (long p = 0; p < paths; ++p)
    for (int r = 0; r < n; ++r) {
      const double dr = ens.terminal[static_cast<std::size_t>(p) * n + r] - out.mean(r);
      for (int c = 0; c <= r; ++c) {
        const double dc = ens.terminal[static_cast<std::size_t>(p) * n + c] - out.mean(c);
        cov[static_cast<std::size_t>(r) * n + c] += dr * dc;
      }
    }
  out.cov.resize(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c <= r; ++c) {
      const double v = static_cast<double>(cov[static_cast<std::size_t>(r) * n + c] / (paths - 1));
      out.cov(r, c) = v;
      out.cov(c, r) = v;
    }
  return out;
}

Histogram empirical_density(const PathEnsemble& ens, const GridGeometry& boxes) {
  const int n = ens.spec.total_dim();
  if (boxes.axes() != n) throw InvalidParametersError("histogram boxes must match the dimension");
  Histogram h;
  h.grid = boxes;
  std::vector<long> counts(static_cast<std::size_t>(boxes.cells()), 0);
  const std::vector<long> strides = boxes.strides();
  for (long p = 0; p < ens.cfg.n_paths; ++p) {
    long flat = 0;
    bool inside = true;
    for (int a = 0; a < n && inside; ++a) {
      const double x = ens.terminal[static_cast<std::size_t>(p) * n + a];
      const double rel = (x - boxes.lo[static_cast<std::size_t>(a)]) / boxes.h(a);
      if (rel < 0.0 || rel >= boxes.n[static_cast<std::size_t>(a)]) {
        inside = false;
        break;
      }
      flat += static_cast<long>(rel) * strides[static_cast<std::size_t>(a)];
    }
    if (inside) {
      ++counts[static_cast<std::size_t>(flat)];
      ++h.in_range;
    }
  }
  const double norm = static_cast<double>(ens.cfg.n_paths) * boxes.cell_volume();
  h.density.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) h.density[k] = counts[k] / norm;
  return h;
}

CoefficientField rough_coefficient_field(const SystemSpec& spec, double extent, int tiles,
                                         double lambda, std::uint64_t seed) {
  if (lambda < 1.0) throw InvalidParametersError("lambda must be >= 1");
  if (tiles < 1 || !(extent > 0.0)) throw InvalidParametersError("need positive tiles and extent");
  const int d0 = spec.dims[0];
  const int axes = spec.total_dim();
  const int packed = packed_size(d0);
  long n_tiles = 1;
  for (int a = 0; a < axes; ++a) n_tiles *= tiles;

  auto values = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n_tiles) * packed);
  rng::Stream stream = rng::Stream::named(seed, "rough_coefficient");
  const double log_lambda = std::log(lambda);
  for (long t = 0; t < n_tiles; ++t) {
    if (d0 == 1) {
      (*values)[static_cast<std::size_t>(t)] = std::exp(stream.uniform(-1.0, 1.0) * log_lambda);
      continue;
    }
    Eigen::VectorXd eig(d0);
    for (int k = 0; k < d0; ++k) eig(k) = std::exp(stream.uniform(-1.0, 1.0) * log_lambda);
    Eigen::MatrixXd gauss(d0, d0);
    for (int r = 0; r < d0; ++r)
      for (int c = 0; c < d0; ++c) gauss(r, c) = stream.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd a = q * eig.asDiagonal() * q.transpose();
    int k = 0;
    for (int r = 0; r < d0; ++r)
      for (int c = 0; c <= r; ++c) (*values)[static_cast<std::size_t>(t) * packed + k++] = a(r, c);
  }

  CoefficientField field;
  field.min_eig = 1.0 / lambda;
  field.max_eig = lambda;
  field.is_identity = lambda == 1.0;
  field.matrix_at = [values, extent, tiles, axes, d0](const Eigen::VectorXd& x) {
    long flat = 0;
    long stride = 1;
    for (int a = 0; a < axes; ++a) {
      double rel = (x(a) + extent) / (2.0 * extent) * tiles;
      long idx = std::clamp(static_cast<long>(std::floor(rel)), 0L, static_cast<long>(tiles - 1));
      flat += idx * stride;
      stride *= tiles;
    }
    const int packed_n = d0 * (d0 + 1) / 2;
    Eigen::MatrixXd a(d0, d0);
    int k = 0;
    for (int r = 0; r < d0; ++r)
      for (int c = 0; c <= r; ++c) {
        const double v = (*values)[static_cast<std::size_t>(flat) * packed_n + k++];
        a(r, c) = v;
        a(c, r) = v;
      }
    return a;
  };
  if (field.is_identity)
    field.matrix_at = [d0](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(d0, d0); };
  return field;
}

CoefficientField checkerboard_field(const SystemSpec& spec, double lambda, double tile_size) {
  if (lambda < 1.0) throw InvalidParametersError("lambda must be >= 1");
  if (!(tile_size > 0.0)) throw InvalidParametersError("tile size must be positive");
  const int d0 = spec.dims[0];
  CoefficientField field;
  field.min_eig = 1.0 / lambda;
  field.max_eig = lambda;
  field.is_identity = lambda == 1.0;
  field.matrix_at = [d0, lambda, tile_size](const Eigen::VectorXd& x) {
    long parity = 0;
    for (int a = 0; a < x.size(); ++a)
      parity += static_cast<long>(std::floor(x(a) / tile_size));
    const double v = (parity & 1) ? lambda : 1.0 / lambda;
    return (v * Eigen::MatrixXd::Identity(d0, d0)).eval();
  };
  return field;
}

std::vector<double> materialize_coefficient(const SystemSpec& spec, const GridGeometry& grid,
                                            const CoefficientField& coeff) {
  const int d0 = spec.dims[0];
  const int packed = packed_size(d0);
  const long cells = grid.cells();
  std::vector<double> out(static_cast<std::size_t>(cells) * packed);
  for (long c = 0; c < cells; ++c) {
    const Eigen::MatrixXd a = coeff.matrix_at(grid.cell_center(c));
    int k = 0;
    for (int r = 0; r < d0; ++r)
      for (int col = 0; col <= r; ++col)
        out[static_cast<std::size_t>(c) * packed + k++] = a(r, col);
  }
  return out;
}

}  // namespace kolmo
