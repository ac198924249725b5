#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tstab {

using Vec = std::vector<double>;
// Dense row-major matrix: rows() x cols() with rows stored as Vec.
using Mat = std::vector<Vec>;

// Raised when an evaluation produced NaN/Inf; the message names the probe point.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ConstraintMode { gradient, submersion };

// The pair (V, grad V) or (g, Dg) defining the attractor set V^-1(0) resp.
// g^-1(0) and the direction of the transversal correction. Evaluation
// callbacks must be reentrant; the library calls them from multiple threads.
struct ConstraintSpec {
  ConstraintMode mode = ConstraintMode::gradient;

  // gradient mode: V >= 0 and its gradient.
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;

  // submersion mode: g: R^n -> R^k and its k x n Jacobian.
  std::function<Vec(const Vec&)> residual;
  std::function<Mat(const Vec&)> jacobian;

  // Optional closed-form bound on lambda_max of the second derivative
  // (of V, or of the composite Dg^T Dg + sum_i g_i D^2 g_i).
  std::function<double(const Vec&)> hessian_lambda_max;

  // The Lyapunov value in either mode (1/2 ||g||^2 in submersion mode).
  double lyapunov(const Vec& x) const;
};

// alpha plus the certified constants of the contraction argument.
struct StabilizerGains {
  double alpha = 0.0;
  double epsilon = 0.0;   // sublevel radius
  double delta = 0.0;     // tube margin
  double L = 0.0;         // bound on ||grad V|| (or sigma_max(Dg))
  double d = 0.0;         // bound on lambda_max of the second derivative
  double b = 0.0;         // gradient-dominance constant
  double alpha_max = 0.0; // admissible upper bound for alpha
  double c = 0.0;         // alpha - alpha^2 d / 2, set when alpha is known
  double contraction = 0.0;  // 1 - b c, set when alpha is known
};

struct ContractionReport {
  bool satisfied = false;
  double ratio = 0.0;  // v_after / v_before, 0 when v_before == 0
};

// One modified step in gradient mode: f_of_x - alpha * grad V(f_of_x).
// The caller supplies the already-evaluated raw step so controlled and
// autonomous systems share this path.
Vec stabilized_step_gradient(const Vec& f_of_x, const ConstraintSpec& spec, double alpha);

// One modified step in submersion mode: f_of_x - alpha * Dg(f_of_x)^T g(.).
// By default g is evaluated at f_of_x, which coincides with evaluation at
// the pre-step point whenever g o f = g holds; pass `residual_point` to pin
// the evaluation point explicitly.
Vec stabilized_step_submersion(const Vec& f_of_x, const ConstraintSpec& spec, double alpha,
                               const Vec* residual_point = nullptr);

// Checks the one-step decrease v_after <= contraction * v_before, with
// 1e-12 absolute slack for rounding.
ContractionReport check_contraction(double v_before, double v_after,
                                    const StabilizerGains& gains);

// True iff alpha lies strictly inside the admissible interval:
// (0, min(2/d, delta/L)) in gradient mode,
// (0, min(2/d, 2 delta / (L epsilon^2))) in submersion mode.
bool validate_alpha(double alpha, const StabilizerGains& gains, ConstraintMode mode);

// The unit-sphere constraint in gradient form: V(x) = (x.x - 1)^2,
// grad V(x) = 4 x (x.x - 1), with the bound lambda_max(D^2 V) <= 12 x.x.
ConstraintSpec s3_gradient_spec();

// The same manifold in submersion form: g(x) = x.x - 1 (k = 1), Dg = 2 x^T.
ConstraintSpec s3_submersion_spec();

}  // namespace tstab
