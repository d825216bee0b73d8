#pragma once

#include <Eigen/Dense>
#include <functional>

namespace kolmo {

struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Gauss-Legendre rule on [-1, 1].
Quadrature gauss_legendre(int n);

/// Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b, a, b > -1.
Quadrature gauss_jacobi(int n, double a, double b);

/// Affine image of a rule on [lo, hi] (weights scaled by (hi-lo)/2).
Quadrature mapped(const Quadrature& q, double lo, double hi);

/// Integral over (0, 1] of an integrand behaving like s^gamma * (smooth) near
/// s = 0, gamma > -1: Gauss-Jacobi with weight s^gamma on (0, s0], then
/// Gauss-Legendre on [s0, 1].
double integrate_singular01(const std::function<double(double)>& f, double gamma, double s0 = 0.5,
                            int n = 48);

}  // namespace kolmo
