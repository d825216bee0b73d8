#include "kolmo/controls.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kolmo {

double ControlBasis::default_epsilon(double beta) {
  if (beta >= 1.0) return 0.0;
  return std::min(0.01, 0.5 * (1.0 - beta));
}

double alpha_center(double beta, double epsilon) {
  return 1.0 / (2.0 + beta + epsilon) - 1.0;
}

std::vector<double> default_alphas(int kappa, double beta, double epsilon, double spread) {
  if (kappa < 1) throw InvalidParametersError("kappa must be >= 1");
  if (!(spread > 0.0)) throw InvalidParametersError("alpha spread must be positive");
  const double center = alpha_center(beta, epsilon);
  std::vector<double> alphas(static_cast<std::size_t>(kappa) + 1);
  for (int i = 0; i <= kappa; ++i)
    alphas[static_cast<std::size_t>(i)] = center + (i - 0.5 * kappa) * spread;
  if (alphas.front() <= -1.0 || alphas.back() >= 0.0)
    throw InvalidParametersError("alpha values escape (-1, 0); reduce the spread");
  return alphas;
}

ControlBasis ControlBasis::make(std::vector<double> alphas, int kappa, double beta,
                                double epsilon) {
  if (kappa < 1) throw InvalidParametersError("kappa must be >= 1");
  if (static_cast<int>(alphas.size()) != kappa + 1)
    throw InvalidParametersError("need kappa+1 alpha exponents");
  for (double a : alphas)
    if (a <= -1.0 || a >= 0.0)
      throw InvalidParametersError("alpha " + std::to_string(a) + " outside (-1, 0)");
  for (std::size_t i = 0; i < alphas.size(); ++i)
    for (std::size_t j = i + 1; j < alphas.size(); ++j)
      if (std::abs(alphas[i] - alphas[j]) <= 1e-9)
        throw DegenerateBasisError("alpha exponents must be pairwise distinct");
  ControlBasis basis;
  basis.alphas = std::move(alphas);
  basis.kappa = kappa;
  basis.beta = beta;
  basis.epsilon = epsilon;
  return basis;
}

ControlBasis ControlBasis::balanced(int kappa, double beta, double epsilon, double spread) {
  return make(default_alphas(kappa, beta, epsilon, spread), kappa, beta, epsilon);
}

double g_eval(const ControlBasis& basis, int i, int order, double s) {
  if (i < 0 || i > basis.kappa) throw InvalidParametersError("control index out of range");
  if (order < 0 || order > basis.kappa + 1)
    throw InvalidParametersError("derivative order out of range");
  if (s < 0.0 || s > 1.0) throw InvalidParametersError("g_eval requires s in [0, 1]");
  const double alpha = basis.alphas[static_cast<std::size_t>(i)];
  if (order == basis.kappa + 1) {
    if (s == 0.0)
      throw SingularEvaluationError("g^(kappa+1) diverges at s = 0 (exponent alpha < 0)");
    return std::pow(s, alpha);
  }
  if (s == 0.0) return 0.0;
  const int factors = basis.kappa + 1 - order;  // (1+a)...(factors+a)
  const double exponent = 1.0 + basis.kappa + alpha - order;
  if (factors > 9) {
    // Deep chains: falling products in log space (all factors positive).
    double log_den = 0.0;
    for (int n = 1; n <= factors; ++n) log_den += std::log(n + alpha);
    return std::exp(exponent * std::log(s) - log_den);
  }
  double den = 1.0;
  for (int n = 1; n <= factors; ++n) den *= (n + alpha);
  return std::pow(s, exponent) / den;
}

}  // namespace kolmo
