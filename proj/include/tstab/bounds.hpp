#pragma once

#include <optional>

#include "tstab/rng.hpp"
#include "tstab/stabilizer.hpp"

namespace tstab {

// Request for an empirical certification of a generic constraint.
struct BoundsRequest {
  double epsilon = 0.0;
  double delta = 0.0;
  std::optional<double> alpha;
  ConstraintSpec constraint;
  int sample_count = 100000;
  // Rejection-sampling box for the sublevel set.
  Vec domain_lo;
  Vec domain_hi;
};

// Certified constants plus the raw empirical maxima they were derived from.
// L and d carry a 10% safety inflation, b a 10% deflation.
struct SampledBounds {
  StabilizerGains certified;
  double raw_L = 0.0;
  double raw_d = 0.0;
  double raw_b = 0.0;
  double safety_margin = 0.10;
};

// Closed-form gains for the unit-sphere constraint V(x) = (x.x - 1)^2:
//   L = 4 sqrt(1 + sqrt(eps)) sqrt(eps)          over V <= eps,
//   b = 16 (1 - sqrt(eps)),
//   d = 12 (sqrt(1 + sqrt(eps)) + delta)^2       over the delta-tube,
//   alpha_max = min(2/d, delta/L).
// c and contraction are filled in when alpha is supplied.
// Requires 0 < eps < 1 so the sublevel set stays away from the origin.
StabilizerGains s3_bounds(double epsilon, double delta,
                          std::optional<double> alpha = std::nullopt);

// Sampling-based gains for a generic constraint: rejection-samples the
// sublevel set inside [domain_lo, domain_hi], perturbs each accepted point
// by a uniform ball of radius delta for the tube, and takes empirical
// extrema (second-derivative lambda_max via finite differences).
SampledBounds sampled_bounds(const BoundsRequest& request, RngStream& rng);

// A point of the unit-sphere delta-tube drawn radially (no rejection):
// random direction times a radius uniform in
// [sqrt(1 - sqrt(eps)) - delta, sqrt(1 + sqrt(eps)) + delta].
// With delta = 0 this samples the sublevel set V <= eps exactly.
Vec sample_s3_tube(RngStream& rng, double epsilon, double delta);

}  // namespace tstab
