#include "kolmo/quadrature.hpp"

#include <cmath>

#include "kolmo/errors.hpp"

namespace kolmo {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal recurrence
// matrix, weights are mu0 times the squared first eigenvector components.
Quadrature golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    J(k, k) = diag(k);
    if (k + 1 < n) {
      J(k, k + 1) = offdiag(k);
      J(k + 1, k) = offdiag(k);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Quadrature q;
  q.nodes = es.eigenvalues();
  q.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    q.weights(k) = mu0 * v0 * v0;
  }
  return q;
}

}  // namespace

Quadrature gauss_legendre(int n) {
  if (n < 1) throw InvalidParametersError("quadrature order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(diag, off, 2.0);
}

Quadrature gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw InvalidParametersError("quadrature order must be >= 1");
  if (a <= -1.0 || b <= -1.0) throw InvalidParametersError("Jacobi exponents must exceed -1");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(n > 1 ? n - 1 : 0);
  const double apb = a + b;
  diag(0) = (b - a) / (apb + 2.0);
  for (int k = 1; k < n; ++k) {
    const double den = (2.0 * k + apb) * (2.0 * k + apb + 2.0);
    diag(k) = (b * b - a * a) / den;
  }
  if (n > 1) {
    off(0) = std::sqrt(4.0 * (a + 1.0) * (b + 1.0) / ((apb + 2.0) * (apb + 2.0) * (apb + 3.0)));
    for (int k = 2; k < n; ++k) {
      const double num = 4.0 * k * (k + a) * (k + b) * (k + apb);
      const double den =
          (2.0 * k + apb) * (2.0 * k + apb) * (2.0 * k + apb + 1.0) * (2.0 * k + apb - 1.0);
      off(k - 1) = std::sqrt(num / den);
    }
  }
  const double mu0 = std::exp((apb + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                              std::lgamma(b + 1.0) - std::lgamma(apb + 2.0));
  return golub_welsch(diag, off, mu0);
}

Quadrature mapped(const Quadrature& q, double lo, double hi) {
  Quadrature out;
  const double half = 0.5 * (hi - lo);
  out.nodes = (q.nodes.array() * half + 0.5 * (hi + lo)).matrix();
  out.weights = q.weights * half;
  return out;
}

double integrate_singular01(const std::function<double(double)>& f, double gamma, double s0,
                            int n) {
  if (gamma <= -1.0) throw InvalidParametersError("endpoint power must be integrable");
  if (!(s0 > 0.0) || s0 >= 1.0) throw InvalidParametersError("split point must lie in (0, 1)");
  // (0, s0]: substitute s = s0 (1+x)/2, weight s^gamma -> Jacobi (a=0, b=gamma).
  Quadrature ja = gauss_jacobi(n, 0.0, gamma);
  double singular_part = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = s0 * 0.5 * (1.0 + ja.nodes(k));
    singular_part += ja.weights(k) * f(s) * std::pow(s, -gamma);
  }
  singular_part *= std::pow(s0 * 0.5, gamma + 1.0);
  Quadrature gl = mapped(gauss_legendre(n), s0, 1.0);
  double regular_part = 0.0;
  for (int k = 0; k < n; ++k) regular_part += gl.weights(k) * f(gl.nodes(k));
  return singular_part + regular_part;
}

}  // namespace kolmo
