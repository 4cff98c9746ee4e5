#pragma once

#include <Eigen/Dense>

namespace bdem {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
/// 3x4 operator whose rows span the tangent space of S^3 at q.
using NullspaceOp = Eigen::Matrix<double, 3, 4>;
using AngVel = Eigen::Vector3d;

/// Quaternion q = u i + v j + w k + s.
///
/// Components are stored imaginary part first and scalar LAST, which is also
/// the order used by every 4-vector and every serialized file in this project.
struct Quat {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
  double s = 1.0;

  constexpr Quat() = default;
  constexpr Quat(double u_, double v_, double w_, double s_) : u(u_), v(v_), w(w_), s(s_) {}
  explicit Quat(const Vec4& c) : u(c[0]), v(c[1]), w(c[2]), s(c[3]) {}

  static constexpr Quat identity() { return {0.0, 0.0, 0.0, 1.0}; }

  Vec4 coeffs() const { return {u, v, w, s}; }
  Vec3 vec() const { return {u, v, w}; }
  double squared_norm() const { return u * u + v * v + w * w + s * s; }
  double norm() const;

  Quat operator-() const { return {-u, -v, -w, -s}; }
};

Quat conjugate(const Quat& q);

/// Hamilton product a*b, i.e. rotation b followed by rotation a.
Quat mul(const Quat& a, const Quat& b);

/// Q_l(q) with mul(q, p) == left_matrix(q) * p.
Mat4 left_matrix(const Quat& q);
/// Q_r(q) with mul(p, q) == right_matrix(q) * p.
Mat4 right_matrix(const Quat& q);

/// Skew matrix t^x of a 3-vector.
Mat3 cross_matrix(const Vec3& t);

/// G_l(q) = [ sI - t^x | -t ], the top three rows of Q_l(conj(q)).
NullspaceOp nullspace_left(const Quat& q);
/// G_r(q) = [ sI + t^x | -t ].
NullspaceOp nullspace_right(const Quat& q);

/// Rotates d0 by q (the sandwich product q (d0,0) conj(q)).
Vec3 rotate_vec(const Quat& q, const Vec3& d0);

/// 3x3 rotation matrix of a unit quaternion.
Mat3 to_rotation_matrix(const Quat& q);
Quat from_rotation_matrix(const Mat3& r);
Quat from_axis_angle(const Vec3& axis, double angle);

enum class Tangency {
  kProject,  // remove the q-component of qdot before converting
  kStrict,   // throw if qdot has a noticeable q-component
};

/// World angular velocity from the vector part of 2 * qdot * conj(q).
AngVel angular_velocity(const Quat& q, const Vec4& qdot, Tangency mode = Tangency::kProject);

/// qdot = 1/2 * (w,0) * q, the inverse of angular_velocity.
Vec4 quat_rate(const Quat& q, const AngVel& w);

/// Moves q along the great circle with initial tangent dq (|dq| is the arc length).
Quat geodesic_step(const Quat& q, const Vec4& dq);

/// Removes the component of a 4-vector along q: (I - q q^T) x.
Vec4 project_tangent(const Quat& q, const Vec4& x);

Quat normalize(const Quat& q);

/// C(q) = 1/2 (q^T q - 1).
double constraint_value(const Quat& q);

/// Minimal rotation carrying unit vector `from` onto unit vector `to`.
Quat shortest_arc(const Vec3& from, const Vec3& to);

/// Geodesic distance between the rotations of a and b (sign-insensitive), radians.
double rotation_distance(const Quat& a, const Quat& b);

}  // namespace bdem
