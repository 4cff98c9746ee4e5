#include "bdem/quat.hpp"

#include <cmath>
#include <string>

#include "bdem/error.hpp"

namespace bdem {

double Quat::norm() const { return std::sqrt(squared_norm()); }

Quat conjugate(const Quat& q) { return {-q.u, -q.v, -q.w, q.s}; }

Quat mul(const Quat& a, const Quat& b) {
  const Vec3 ta = a.vec();
  const Vec3 tb = b.vec();
  const Vec3 t = a.s * tb + b.s * ta + ta.cross(tb);
  return {t[0], t[1], t[2], a.s * b.s - ta.dot(tb)};
}

Mat3 cross_matrix(const Vec3& t) {
  Mat3 m;
  m << 0.0, -t[2], t[1],
       t[2], 0.0, -t[0],
      -t[1], t[0], 0.0;
  return m;
}

Mat4 left_matrix(const Quat& q) {
  const Vec3 t = q.vec();
  Mat4 m;
  m.topLeftCorner<3, 3>() = q.s * Mat3::Identity() + cross_matrix(t);
  m.topRightCorner<3, 1>() = t;
  m.bottomLeftCorner<1, 3>() = -t.transpose();
  m(3, 3) = q.s;
  return m;
}

Mat4 right_matrix(const Quat& q) {
  const Vec3 t = q.vec();
  Mat4 m;
  m.topLeftCorner<3, 3>() = q.s * Mat3::Identity() - cross_matrix(t);
  m.topRightCorner<3, 1>() = t;
  m.bottomLeftCorner<1, 3>() = -t.transpose();
  m(3, 3) = q.s;
  return m;
}

NullspaceOp nullspace_left(const Quat& q) {
  const Vec3 t = q.vec();
  NullspaceOp g;
  g.leftCols<3>() = q.s * Mat3::Identity() - cross_matrix(t);
  g.col(3) = -t;
  return g;
}

NullspaceOp nullspace_right(const Quat& q) {
  const Vec3 t = q.vec();
  NullspaceOp g;
  g.leftCols<3>() = q.s * Mat3::Identity() + cross_matrix(t);
  g.col(3) = -t;
  return g;
}

Vec3 rotate_vec(const Quat& q, const Vec3& d0) {
  const Quat d = mul(mul(q, Quat(d0[0], d0[1], d0[2], 0.0)), conjugate(q));
  return d.vec();
}

Mat3 to_rotation_matrix(const Quat& q) {
  const Vec3 t = q.vec();
  return (q.s * q.s - t.squaredNorm()) * Mat3::Identity() + 2.0 * t * t.transpose() +
         2.0 * q.s * cross_matrix(t);
}

Quat from_rotation_matrix(const Mat3& r) {
  const Eigen::Quaterniond e(r);
  return {e.x(), e.y(), e.z(), e.w()};
}

Quat from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized() * std::sin(0.5 * angle);
  return {a[0], a[1], a[2], std::cos(0.5 * angle)};
}

AngVel angular_velocity(const Quat& q, const Vec4& qdot, Tangency mode) {
  const double radial = q.coeffs().dot(qdot);
  if (mode == Tangency::kStrict && std::abs(2.0 * radial) > 1e-6 * qdot.norm()) {
    throw Error("angular_velocity: qdot is not tangent to S^3 at q (q^T qdot = " +
                std::to_string(radial) + ")");
  }
  const Vec4 tangent = qdot - radial * q.coeffs();
  const Quat w4 = mul(Quat(tangent), conjugate(q));
  return 2.0 * w4.vec();
}

Vec4 quat_rate(const Quat& q, const AngVel& w) {
  return 0.5 * mul(Quat(w[0], w[1], w[2], 0.0), q).coeffs();
}

Quat geodesic_step(const Quat& q, const Vec4& dq) {
  const double n = dq.norm();
  if (n < 1e-8) {
    // cos n = 1 - O(n^2), sin(n)/n = 1 - O(n^2); the retraction below is
    // second-order accurate here and reduces to q for dq = 0.
    if (n == 0.0) return q;
    return normalize(Quat(q.coeffs() + dq));
  }
  return normalize(Quat(q.coeffs() * std::cos(n) + dq * (std::sin(n) / n)));
}

Vec4 project_tangent(const Quat& q, const Vec4& x) {
  const Vec4 c = q.coeffs();
  return x - c * (c.dot(x) / c.squaredNorm());
}

Quat normalize(const Quat& q) {
  const double n = q.norm();
  if (!(n > 0.0)) throw Error("normalize: zero quaternion");
  return Quat(q.coeffs() / n);
}

double constraint_value(const Quat& q) { return 0.5 * (q.squared_norm() - 1.0); }

Quat shortest_arc(const Vec3& from, const Vec3& to) {
  const Vec3 a = from.normalized();
  const Vec3 b = to.normalized();
  const double c = a.dot(b);
  if (c < -1.0 + 1e-12) {
    // Antipodal: rotate by pi about a fixed axis perpendicular to `a`.
    Vec3 axis = a.cross(Vec3::UnitY());
    if (axis.norm() < 1e-6) axis = a.cross(Vec3::UnitZ());
    axis.normalize();
    return {axis[0], axis[1], axis[2], 0.0};
  }
  const Vec3 x = a.cross(b);
  return normalize(Quat(x[0], x[1], x[2], 1.0 + c));
}

double rotation_distance(const Quat& a, const Quat& b) {
  const double d = std::abs(a.coeffs().dot(b.coeffs())) / (a.norm() * b.norm());
  return 2.0 * std::acos(std::min(1.0, d));
}

}  // namespace bdem
