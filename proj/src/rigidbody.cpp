#include "tstab/rigidbody.hpp"

namespace tstab {

Quaternion raw_step(const Quaternion& q, const Quaternion& omega) {
  return q * exp_vector(0.5 * omega);
}

Quaternion stabilized_step(const Quaternion& q, const Quaternion& omega, double alpha) {
  const Quaternion stepped = raw_step(q, omega);
  // conj(q) q is real, so the correction is the scalar factor
  // 4 alpha (|q|^2 - 1) applied to the raw step.
  const double excess = norm_sq(q) - 1.0;
  return stepped - (4.0 * alpha * excess) * stepped;
}

Quaternion measure(const Quaternion& q_true, RngStream& rng, double noise_std) {
  const Quaternion nu{0.0, rng.normal(noise_std), rng.normal(noise_std),
                      rng.normal(noise_std)};
  return q_true * exp_vector(nu);
}

ObserverPair observer_step(const ObserverPair& pair, const Quaternion& q_meas,
                           const Quaternion& omega) {
  const Quaternion rot = exp_vector(0.5 * omega);
  ObserverPair next = pair;
  const Quaternion predicted_w = pair.q_w * rot;
  const double excess_w = norm_sq(pair.q_w) - 1.0;
  next.q_w = predicted_w + (q_meas - pair.q_w) * pair.gain -
             (4.0 * pair.alpha * excess_w) * predicted_w;
  next.q_wo = pair.q_wo * rot + (q_meas - pair.q_wo) * pair.gain;
  return next;
}

Quaternion default_gain(RngStream& rng, double omega_low, double omega_high, int samples) {
  Quaternion sum{0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < samples; ++i) {
    const Quaternion omega{0.0, rng.uniform(omega_low, omega_high),
                           rng.uniform(omega_low, omega_high),
                           rng.uniform(omega_low, omega_high)};
    sum = sum + exp_vector(0.5 * omega);
  }
  return (1.0 / static_cast<double>(samples)) * sum;
}

}  // namespace tstab
