#include "bdem/elements.hpp"

#include <cmath>
#include <numbers>

#include "bdem/error.hpp"

namespace bdem {

ElementMass sphere_mass(double m, double r) {
  if (!(m > 0.0) || !(r > 0.0)) {
    throw Error("sphere_mass: mass and radius must be positive");
  }
  return {m, r};
}

double equivalent_radius(double volume) {
  return std::cbrt(3.0 * volume / (4.0 * std::numbers::pi));
}

double kinetic_energy(const ElementState& state, const ElementMass& mass) {
  return 0.5 * mass.translational() * state.v.squaredNorm() +
         0.5 * mass.rotational() * state.qdot.squaredNorm();
}

Mat4 equivalent_rotational_mass(const Quat& q, const ElementMass& mass) {
  // J0 is set equal to the sphere inertia, which makes J4 isotropic.
  const Mat4 j4 = mass.inertia() * Mat4::Identity();
  const Mat4 qr = right_matrix(conjugate(q));
  return 4.0 * qr.transpose() * j4 * qr;
}

}  // namespace bdem
