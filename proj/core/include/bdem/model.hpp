#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bdem/bonds.hpp"
#include "bdem/contact.hpp"
#include "bdem/elements.hpp"
#include "bdem/geometry.hpp"

namespace bdem {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Coordinates per element in a configuration vector: [p (3), q (4)].
inline constexpr int kPoseDim = 7;
/// Tangent dimension per element: [dp (3), rotation (3)].
inline constexpr int kTangentDim = 6;

inline Vec3 position_of(const VectorXd& x, int e) { return x.segment<3>(kPoseDim * e); }
inline Quat orientation_of(const VectorXd& x, int e) { return Quat(Vec4(x.segment<4>(kPoseDim * e + 3))); }
inline void set_pose(VectorXd& x, int e, const Vec3& p, const Quat& q) {
  x.segment<3>(kPoseDim * e) = p;
  x.segment<4>(kPoseDim * e + 3) = q.coeffs();
}

struct ContactSettings {
  double k_c = 1e5;            // external collider stiffness
  double k_ec = 1e5;           // element-element stiffness
  double mu_s = 0.0;           // sliding friction
  double mu_r = 0.0;           // rolling friction
  bool self_contact = true;
  double margin_factor = 2.0;  // candidate margin in units of max |v| dt
};

struct PotentialSwitches {
  bool bonds = true;
  bool self_contact = true;
  bool external = true;
  bool gravity = true;
};

/// Prescribed rigid motion of a pinned element: rotation at a constant rate
/// about `pivot` plus constant translation.
struct PinnedMotion {
  int element = -1;
  Vec3 p0 = Vec3::Zero();
  Quat q0 = Quat::identity();
  Vec3 pivot = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  AngVel angular_velocity = Vec3::Zero();

  Vec3 position(double t) const;
  Quat orientation(double t) const;
};

struct Scene {
  TetMesh mesh;
  std::vector<Element> elements;
  BondGraph graph;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  std::vector<Collider> colliders;
  ContactSettings contact;
  PotentialSwitches enabled;
  bool fracture = true;
  bool plasticity = false;
  PlasticParams plastic;
  std::vector<PinnedMotion> pins;
  std::vector<bool> surface;
  double time = 0.0;
  int workers = 1;

  int element_count() const { return static_cast<int>(elements.size()); }
  VectorXd configuration() const;
  void set_configuration(const VectorXd& x);
  /// Moves every pinned element to its prescribed state at time t.
  void apply_pins(double t);
};

enum class EvalLevel { kValue, kGradient, kHessian };

/// Contribution of one element (b < 0, 7 coordinates) or one pair (14
/// coordinates, layout [a, b]) with its own gradient.
struct LocalTerm {
  int a = -1;
  int b = -1;
  VectorXd grad;
  MatrixXd hess;
};

struct EnergyBreakdown {
  double inertia = 0.0;
  double bonds = 0.0;
  double self_contact = 0.0;
  double external = 0.0;
  double gravity = 0.0;

  double potential() const { return bonds + self_contact + external + gravity; }
  double total() const { return inertia + potential(); }
};

struct Evaluation {
  double value = 0.0;
  VectorXd grad;                 // ambient, 7 per element
  std::vector<LocalTerm> terms;  // only at EvalLevel::kHessian
  EnergyBreakdown energy;
};

/// Scalar objective over configuration vectors.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int element_count() const = 0;
  /// Fixed elements are excluded from the unknowns.
  virtual bool fixed(int e) const = 0;
  virtual Evaluation evaluate(const VectorXd& x, EvalLevel level) const = 0;
};

/// Element pairs close enough to touch during the step, excluding pairs
/// joined by an unbroken bond.
std::vector<ContactPair> contact_candidates(const Scene& scene, const VectorXd& x, double margin);

/// V(x): bonds, self-contact over `candidates`, external colliders and gravity.
Evaluation evaluate_potential(const Scene& scene, const VectorXd& x,
                              std::span<const ContactPair> candidates, EvalLevel level);

/// Runs fn(k) for k in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace bdem
