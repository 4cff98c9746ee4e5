#pragma once

#include "bdem/model.hpp"

namespace bdem {

/// Largest step the oracle accepts: the smaller of 0.1 sqrt(m / k_n) over
/// intact bonds (m the lighter element) and 2 / w_rot, where w_rot^2 bounds
/// the rotational frequencies by sum(k_t + max K) / I per element. Returns
/// +inf for a scene without bonds.
double explicit_step_limit(const Scene& scene);

/// Symplectic Euler reference integrator. Forces and torques come from the
/// gradient of the same potential the implicit integrator minimizes; the
/// orientation advances by the exponential map of w dt. Bonds do not break.
class ExplicitIntegrator {
 public:
  /// Throws ConfigError when dt exceeds explicit_step_limit(scene).
  ExplicitIntegrator(Scene& scene, double dt);

  void step();
  void advance_to(double t);
  double dt() const { return dt_; }

 private:
  Scene* scene_;
  double dt_;
};

}  // namespace bdem
