#include "tstab/stabilizer.hpp"

#include <cmath>
#include <sstream>

namespace tstab {

namespace {

bool all_finite(const Vec& v) {
  for (double e : v) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

std::string format_point(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << ")";
  return os.str();
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double ConstraintSpec::lyapunov(const Vec& x) const {
  if (mode == ConstraintMode::gradient) {
    return value(x);
  }
  const Vec g = residual(x);
  return 0.5 * dot(g, g);
}

Vec stabilized_step_gradient(const Vec& f_of_x, const ConstraintSpec& spec, double alpha) {
  const Vec grad = spec.gradient(f_of_x);
  if (!all_finite(grad)) {
    throw NumericError("stabilized_step_gradient: non-finite gradient at " +
                       format_point(f_of_x));
  }
  Vec next = f_of_x;
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] -= alpha * grad[i];
  }
  return next;
}

Vec stabilized_step_submersion(const Vec& f_of_x, const ConstraintSpec& spec, double alpha,
                               const Vec* residual_point) {
  const Vec g = spec.residual(residual_point ? *residual_point : f_of_x);
  const Mat jac = spec.jacobian(f_of_x);
  if (!all_finite(g)) {
    throw NumericError("stabilized_step_submersion: non-finite residual at " +
                       format_point(f_of_x));
  }
  Vec next = f_of_x;
  for (std::size_t i = 0; i < jac.size(); ++i) {
    const Vec& row = jac[i];
    if (!all_finite(row)) {
      throw NumericError("stabilized_step_submersion: non-finite Jacobian row at " +
                         format_point(f_of_x));
    }
    for (std::size_t j = 0; j < next.size(); ++j) {
      next[j] -= alpha * row[j] * g[i];
    }
  }
  return next;
}

ContractionReport check_contraction(double v_before, double v_after,
                                    const StabilizerGains& gains) {
  ContractionReport report;
  report.ratio = v_before == 0.0 ? 0.0 : v_after / v_before;
  report.satisfied = v_after <= gains.contraction * v_before + 1e-12;
  return report;
}

bool validate_alpha(double alpha, const StabilizerGains& gains, ConstraintMode mode) {
  const double hessian_cap = 2.0 / gains.d;
  const double tube_cap = mode == ConstraintMode::gradient
                              ? gains.delta / gains.L
                              : 2.0 * gains.delta / (gains.L * gains.epsilon * gains.epsilon);
  return alpha > 0.0 && alpha < std::min(hessian_cap, tube_cap);
}

ConstraintSpec s3_gradient_spec() {
  ConstraintSpec spec;
  spec.mode = ConstraintMode::gradient;
  spec.value = [](const Vec& x) {
    const double g = dot(x, x) - 1.0;
    return g * g;
  };
  spec.gradient = [](const Vec& x) {
    const double g = dot(x, x) - 1.0;
    Vec grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = 4.0 * x[i] * g;
    return grad;
  };
  spec.hessian_lambda_max = [](const Vec& x) { return 12.0 * dot(x, x); };
  return spec;
}

ConstraintSpec s3_submersion_spec() {
  ConstraintSpec spec;
  spec.mode = ConstraintMode::submersion;
  spec.residual = [](const Vec& x) { return Vec{dot(x, x) - 1.0}; };
  spec.jacobian = [](const Vec& x) {
    Vec row(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) row[i] = 2.0 * x[i];
    return Mat{row};
  };
  return spec;
}

}  // namespace tstab
