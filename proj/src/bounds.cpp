#include "tstab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tstab {

namespace {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Cyclic Jacobi eigenvalue sweep for small dense symmetric matrices.
// Returns all eigenvalues, unsorted.
Vec symmetric_eigenvalues(Mat a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cos = 1.0 / std::sqrt(t * t + 1.0);
        const double sin = t * cos;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = cos * akp - sin * akq;
          a[k][q] = sin * akp + cos * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = cos * apk - sin * aqk;
          a[q][k] = sin * apk + cos * aqk;
        }
      }
    }
  }
  Vec eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  return eig;
}

double lambda_max(const Mat& a) {
  const Vec eig = symmetric_eigenvalues(a);
  return *std::max_element(eig.begin(), eig.end());
}

double lambda_min(const Mat& a) {
  const Vec eig = symmetric_eigenvalues(a);
  return *std::min_element(eig.begin(), eig.end());
}

// Central-difference Hessian of a scalar function; symmetric by construction.
Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h = 5e-4) {
  const std::size_t n = x.size();
  Mat hess(n, Vec(n, 0.0));
  const double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    hess[i][i] = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      Vec xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h; xpp[j] += h;
      xpm[i] += h; xpm[j] -= h;
      xmp[i] -= h; xmp[j] += h;
      xmm[i] -= h; xmm[j] -= h;
      hess[i][j] = hess[j][i] = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
    }
  }
  return hess;
}

Vec uniform_ball_point(RngStream& rng, std::size_t n, double radius) {
  Vec u(n);
  double nrm = 0.0;
  do {
    nrm = 0.0;
    for (auto& e : u) {
      e = rng.normal();
      nrm += e * e;
    }
  } while (nrm == 0.0);
  nrm = std::sqrt(nrm);
  const double r = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(n));
  for (auto& e : u) e *= r / nrm;
  return u;
}

void fill_alpha_dependent(StabilizerGains& gains, ConstraintMode mode) {
  if (gains.alpha > 0.0) {
    gains.c = gains.alpha - gains.alpha * gains.alpha * gains.d / 2.0;
    // In submersion form V = 1/2 ||g||^2 and ||grad V||^2 >= 2 b^2 V.
    const double dominance =
        mode == ConstraintMode::gradient ? gains.b : 2.0 * gains.b * gains.b;
    gains.contraction = 1.0 - dominance * gains.c;
  }
}

}  // namespace

StabilizerGains s3_bounds(double epsilon, double delta, std::optional<double> alpha) {
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw std::domain_error("s3_bounds: epsilon must lie in (0, 1)");
  }
  if (delta <= 0.0) {
    throw std::domain_error("s3_bounds: delta must be positive");
  }
  const double root_eps = std::sqrt(epsilon);
  const double outer_radius = std::sqrt(1.0 + root_eps);

  StabilizerGains gains;
  gains.epsilon = epsilon;
  gains.delta = delta;
  // max of ||grad V|| = 4 ||x|| |(||x||^2 - 1)| over the sublevel set,
  // attained on the outer boundary.
  gains.L = 4.0 * outer_radius * root_eps;
  gains.b = 16.0 * (1.0 - root_eps);
  // max of the 12 x.x curvature bound over the delta-inflated norm ball.
  gains.d = 12.0 * (outer_radius + delta) * (outer_radius + delta);
  gains.alpha_max = std::min(2.0 / gains.d, delta / gains.L);
  if (alpha) {
    gains.alpha = *alpha;
    fill_alpha_dependent(gains, ConstraintMode::gradient);
  }
  return gains;
}

Vec sample_s3_tube(RngStream& rng, double epsilon, double delta) {
  const double root_eps = std::sqrt(epsilon);
  const double lo = std::max(0.0, std::sqrt(1.0 - root_eps) - delta);
  const double hi = std::sqrt(1.0 + root_eps) + delta;
  Vec dir(4);
  double nrm = 0.0;
  do {
    nrm = 0.0;
    for (auto& e : dir) {
      e = rng.normal();
      nrm += e * e;
    }
  } while (nrm == 0.0);
  nrm = std::sqrt(nrm);
  const double radius = rng.uniform(lo, hi);
  for (auto& e : dir) e *= radius / nrm;
  return dir;
}

SampledBounds sampled_bounds(const BoundsRequest& request, RngStream& rng) {
  const ConstraintSpec& spec = request.constraint;
  if (request.sample_count < 1000) {
    throw std::invalid_argument("sampled_bounds: sample_count must be >= 1000");
  }
  if (request.domain_lo.empty() || request.domain_lo.size() != request.domain_hi.size()) {
    throw std::invalid_argument("sampled_bounds: sampling box required");
  }
  const std::size_t n = request.domain_lo.size();
  const bool gradient_mode = spec.mode == ConstraintMode::gradient;

  double raw_L = 0.0;
  double raw_d = -std::numeric_limits<double>::infinity();
  double raw_b = std::numeric_limits<double>::infinity();

  long accepted = 0;
  long attempts = 0;
  Vec x(n);
  while (accepted < request.sample_count) {
    ++attempts;
    if (attempts >= 100000 && accepted * 1000 < attempts) {
      throw std::runtime_error(
          "sampled_bounds: acceptance rate below 0.1%, tube too thin for naive sampling");
    }
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(request.domain_lo[i], request.domain_hi[i]);
    }
    // Sublevel membership: V <= eps, or ||g|| <= eps in submersion form.
    if (gradient_mode) {
      if (spec.value(x) > request.epsilon) continue;
    } else {
      const Vec g = spec.residual(x);
      if (std::sqrt(dot(g, g)) > request.epsilon) continue;
    }
    ++accepted;

    if (gradient_mode) {
      const Vec grad = spec.gradient(x);
      const double gn = std::sqrt(dot(grad, grad));
      raw_L = std::max(raw_L, gn);
      const double v = spec.value(x);
      if (v > 1e-12) {
        raw_b = std::min(raw_b, gn * gn / v);
      }
    } else {
      const Mat jac = spec.jacobian(x);
      const std::size_t k = jac.size();
      Mat gram(k, Vec(k, 0.0));  // Dg Dg^T, k x k
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) gram[i][j] = dot(jac[i], jac[j]);
      raw_L = std::max(raw_L, std::sqrt(std::max(0.0, lambda_max(gram))));
      raw_b = std::min(raw_b, std::sqrt(std::max(0.0, lambda_min(gram))));
    }

    // Tube point: ball perturbation of radius delta around the accepted point.
    Vec y = x;
    const Vec shift = uniform_ball_point(rng, n, request.delta);
    for (std::size_t i = 0; i < n; ++i) y[i] += shift[i];
    if (gradient_mode) {
      raw_d = std::max(raw_d, lambda_max(fd_hessian(spec.value, y)));
    } else {
      const Mat jac = spec.jacobian(y);
      const Vec g = spec.residual(y);
      const std::size_t k = jac.size();
      Mat comp(n, Vec(n, 0.0));  // Dg^T Dg + sum_i g_i D^2 g_i
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t r = 0; r < k; ++r) comp[i][j] += jac[r][i] * jac[r][j];
      for (std::size_t r = 0; r < k; ++r) {
        const std::size_t row = r;
        const Mat hess = fd_hessian(
            [&spec, row](const Vec& p) { return spec.residual(p)[row]; }, y);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) comp[i][j] += g[row] * hess[i][j];
      }
      raw_d = std::max(raw_d, lambda_max(comp));
    }
  }

  if (!(raw_b > 1e-9) || !std::isfinite(raw_b)) {
    throw std::domain_error(
        "sampled_bounds: degenerate constraint, gradient-dominance estimate is zero");
  }

  SampledBounds out;
  out.raw_L = raw_L;
  out.raw_d = raw_d;
  out.raw_b = raw_b;
  out.certified.epsilon = request.epsilon;
  out.certified.delta = request.delta;
  out.certified.L = raw_L * (1.0 + out.safety_margin);
  out.certified.d = raw_d * (1.0 + out.safety_margin);
  out.certified.b = raw_b * (1.0 - out.safety_margin);
  const double tube_cap =
      gradient_mode ? request.delta / out.certified.L
                    : 2.0 * request.delta /
                          (out.certified.L * request.epsilon * request.epsilon);
  out.certified.alpha_max = std::min(2.0 / out.certified.d, tube_cap);
  if (request.alpha) {
    out.certified.alpha = *request.alpha;
    fill_alpha_dependent(out.certified, spec.mode);
  }
  return out;
}

}  // namespace tstab
