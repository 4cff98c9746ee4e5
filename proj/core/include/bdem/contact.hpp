#pragma once

#include <span>
#include <variant>
#include <vector>

#include "bdem/bonds.hpp"
#include "bdem/quat.hpp"

namespace bdem {

/// Solid half-space {x : n.x < offset}; the surface is n.x = offset.
struct HalfSpace {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

/// Solid ball obstacle.
struct SphereCollider {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Solid axis-aligned box obstacle.
struct BoxCollider {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
};

/// Signed distance g(p) of an external object, negative inside (penetration).
class Collider {
 public:
  using Shape = std::variant<HalfSpace, SphereCollider, BoxCollider>;

  Collider() = default;
  explicit Collider(Shape shape);

  double distance(const Vec3& p) const;
  Vec3 gradient(const Vec3& p) const;
  /// Hessian of g; zero for planar pieces.
  Mat3 hessian(const Vec3& p) const;

  const Shape& shape() const { return shape_; }

 private:
  Shape shape_ = HalfSpace{};
};

/// A candidate contact between two elements (j >= 0) or an element and a collider.
struct ContactPair {
  int i = -1;
  int j = -1;
  int collider = -1;
  double depth = 0.0;
  Vec3 normal = Vec3::Zero();  // from i towards j
  double stiffness = 0.0;
};

/// Spatial-hash broad phase. Returns every pair (i < j) whose spheres are within
/// `margin` of touching, in lexicographic order, without duplicates.
std::vector<ContactPair> broad_phase(std::span<const Vec3> positions, std::span<const double> radii,
                                     double cell_size, double margin = 0.0);

struct ContactEval {
  double energy = 0.0;
  Vec6 grad = Vec6::Zero();  // [p_i, p_j]
  Mat6 hess = Mat6::Zero();
  bool degenerate = false;   // centers coincided; fallback normal +x was used
};

/// 1/2 k_ec d^2 with overlap d = max(0, r_i + r_j - |p_j - p_i|).
ContactEval self_repulsion_potential(const Vec3& p_i, const Vec3& p_j, double r_i, double r_j,
                                     double k_ec, bool with_hessian = true);

struct ExternalEval {
  double energy = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
};

/// 1/2 k_c g(p)^2 when g(p) < 0, zero otherwise.
ExternalEval external_repulsion_potential(const Vec3& p, const Collider& collider, double k_c,
                                          bool with_hessian = true);

struct FrictionInput {
  Vec3 v = Vec3::Zero();        // velocity of element i
  AngVel w = Vec3::Zero();      // angular velocity of element i
  Vec3 v_rel = Vec3::Zero();    // velocity of i relative to its partner
  AngVel w_rel = Vec3::Zero();  // angular velocity of i relative to its partner
  Vec3 normal = Vec3::UnitZ();  // contact normal
  double force = 0.0;           // |F_n|
  double mass = 1.0;
  double inertia = 1.0;
  double radius = 1.0;
};

struct FrictionCorrection {
  Vec3 dv = Vec3::Zero();
  AngVel dw = Vec3::Zero();
};

/// Explicit sliding and rolling friction applied after the velocity update.
/// Corrections are projected onto -v and -w and never exceed |v| and |w|.
FrictionCorrection friction_post_step(const FrictionInput& in, double dt, double mu_s, double mu_r);

}  // namespace bdem
