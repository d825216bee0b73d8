#pragma once

#include <vector>

#include "kolmo/errors.hpp"

namespace kolmo {

/// Family of control power functions g_i(s) = s^(1+kappa+alpha_i) /
/// ((1+alpha_i)(2+alpha_i)...(1+kappa+alpha_i)) with exponents alpha_i in
/// (-1, 0), pairwise distinct. The (kappa+1)-th derivative is exactly
/// s^alpha_i; all lower derivatives vanish at s = 0.
struct ControlBasis {
  std::vector<double> alphas;  // alpha_0 ... alpha_kappa
  int kappa = 1;
  double beta = 1.0;
  double epsilon = 0.0;

  static ControlBasis make(std::vector<double> alphas, int kappa, double beta, double epsilon);
  /// Balanced default: equally spaced around (2+beta+epsilon)^(-1) - 1.
  static ControlBasis balanced(int kappa, double beta, double epsilon, double spread = 0.02);
  static ControlBasis balanced(int kappa, double beta) {
    return balanced(kappa, beta, default_epsilon(beta));
  }

  static double default_epsilon(double beta);
};

/// The balancing center (2+beta+epsilon)^(-1) - 1 in (-1, 0).
double alpha_center(double beta, double epsilon);

/// kappa+1 equally spaced exponents centered at alpha_center with the given
/// spacing; throws InvalidParametersError if any value escapes (-1, 0) or the
/// spacing is non-positive.
std::vector<double> default_alphas(int kappa, double beta, double epsilon, double spread);

/// m-th derivative of g_i at s, for 0 <= m <= kappa+1 and s in [0, 1].
/// m = kappa+1 at s = 0 diverges and throws SingularEvaluationError.
double g_eval(const ControlBasis& basis, int i, int order, double s);

}  // namespace kolmo
