#pragma once

#include "bdem/quat.hpp"

namespace bdem {

/// Kinematic state of one spherical element: x = {p, q} and its rates.
struct ElementState {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::identity();
  Vec3 v = Vec3::Zero();
  Vec4 qdot = Vec4::Zero();
};

/// Mass data of a sphere. M_p = m I3 and M_q = (8/5) m r^2 I4.
struct ElementMass {
  double m = 1.0;
  double r = 1.0;

  double translational() const { return m; }
  /// Scalar of the equivalent rotational mass matrix M_q(q) = 4 Q_r(q̄)^T J4 Q_r(q̄).
  double rotational() const { return 1.6 * m * r * r; }
  /// Moment of inertia of the sphere, (2/5) m r^2.
  double inertia() const { return 0.4 * m * r * r; }
};

/// A simulated element. Pinned elements are excluded from the unknowns and
/// follow a prescribed trajectory.
struct Element {
  ElementState state;
  ElementMass mass;
  Vec3 rest_centroid = Vec3::Zero();
  double contact_radius = 0.0;
  bool pinned = false;
};

ElementMass sphere_mass(double m, double r);

/// Radius of the sphere with the same volume, r = (3V / 4 pi)^(1/3).
double equivalent_radius(double volume);

/// T = 1/2 m |v|^2 + 1/2 (8/5) m r^2 |qdot|^2.
double kinetic_energy(const ElementState& state, const ElementMass& mass);

/// Same quantity through the full equivalent mass matrix 4 Q_r(q̄)^T J4 Q_r(q̄).
Mat4 equivalent_rotational_mass(const Quat& q, const ElementMass& mass);

}  // namespace bdem
