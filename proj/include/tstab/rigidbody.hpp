#pragma once

#include "tstab/quaternion.hpp"
#include "tstab/rng.hpp"

namespace tstab {

// One raw step of the rotation recursion: q * exp(omega/2). Conserves the
// norm of q, so the sphere constraint value is invariant under this map.
Quaternion raw_step(const Quaternion& q, const Quaternion& omega);

// The transversally stabilized step,
//   q exp(omega/2) - 4 alpha q (|q|^2 - 1) exp(omega/2),
// which equals the gradient correction applied after the raw step.
Quaternion stabilized_step(const Quaternion& q, const Quaternion& omega, double alpha);

// Noisy measurement q_true * exp(nu) with nu a vector quaternion whose three
// components are i.i.d. Normal(0, noise_std^2). The multiplier is unit, so
// the measurement keeps the norm of the true state.
Quaternion measure(const Quaternion& q_true, RngStream& rng, double noise_std);

// States of the two Luenberger-like observers advanced in lockstep: q_w
// carries the transversal correction term, q_wo does not.
struct ObserverPair {
  Quaternion q_w;
  Quaternion q_wo;
  Quaternion gain;
  double alpha = 0.0;
};

// Advances both observers with the same measurement and rotation increment:
//   q_w'  = q_w exp(omega/2) + (q_meas - q_w) gain - 4 alpha q_w (|q_w|^2 - 1) exp(omega/2)
//   q_wo' = q_wo exp(omega/2) + (q_meas - q_wo) gain
// The innovation multiplies the gain on the right.
ObserverPair observer_step(const ObserverPair& pair, const Quaternion& q_meas,
                           const Quaternion& omega);

// Monte Carlo mean of exp(omega/2) over omega with components uniform in
// [omega_low, omega_high]; the observer gain used throughout.
Quaternion default_gain(RngStream& rng, double omega_low, double omega_high, int samples);

}  // namespace tstab
