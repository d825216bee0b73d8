#pragma once

// Shared helpers for the test suites.

#include <Eigen/Dense>

#include "kolmo/geometry.hpp"
#include "kolmo/rng.hpp"

namespace testutil {

/// Random spec with decreasing layer dimensions and full-row-rank blocks;
/// lambda is set just above the assembled operator norm.
inline kolmo::SystemSpec random_spec(int kappa, const std::vector<int>& dims,
                                     kolmo::rng::Stream& stream, double beta = 1.0) {
  std::vector<Eigen::MatrixXd> blocks;
  for (int i = 1; i <= kappa; ++i) {
    Eigen::MatrixXd b(dims[static_cast<std::size_t>(i)], dims[static_cast<std::size_t>(i - 1)]);
    while (true) {
      for (int r = 0; r < b.rows(); ++r)
        for (int c = 0; c < b.cols(); ++c) b(r, c) = stream.uniform(-1.0, 1.0);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
      if (svd.singularValues()(svd.singularValues().size() - 1) >
          0.05 * svd.singularValues()(0))
        break;
    }
    blocks.push_back(b);
  }
  kolmo::SystemSpec raw;
  raw.kappa = kappa;
  raw.beta = beta;
  raw.dims = dims;
  raw.blocks = blocks;
  raw.lambda = 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(kolmo::assemble_B(raw));
  const double norm = svd.singularValues()(0);
  return kolmo::SystemSpec::validated(kappa, beta, dims, std::move(blocks),
                                      std::max(1.0, 1.25 * norm));
}

inline kolmo::KineticPoint random_point(const kolmo::SystemSpec& spec,
                                        kolmo::rng::Stream& stream, double scale = 2.0) {
  kolmo::KineticPoint z = kolmo::KineticPoint::origin(spec);
  for (auto& layer : z.layers)
    for (int c = 0; c < layer.size(); ++c) layer(c) = stream.uniform(-scale, scale);
  z.t = stream.uniform(-scale, scale);
  return z;
}

}  // namespace testutil
