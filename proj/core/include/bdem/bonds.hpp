#pragma once

#include <Eigen/Dense>

#include "bdem/quat.hpp"

namespace bdem {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec14 = Eigen::Matrix<double, 14, 1>;
using Mat14 = Eigen::Matrix<double, 14, 14>;

/// Material and cross-section data of one bond.
struct BondParams {
  double E = 0.0;        // Young's modulus
  double G = 0.0;        // shear modulus
  double l0 = 0.0;       // rest length
  double r0 = 0.0;       // cross-section radius
  double S = 0.0;        // pi r0^2
  double I = 0.0;        // pi r0^4 / 4
  double Jp = 0.0;       // pi r0^4 / 2
  double k_n = 0.0;      // E S / l0
  double k_t = 0.0;      // G S / l0
  Vec3 K = Vec3::Zero(); // diag(G Jp, E I, E I) / l0
  double sigma_c = 0.0;  // tensile strength
  double tau_c = 0.0;    // shear strength

  static BondParams make(double E, double G, double l0, double r0, double sigma_c, double tau_c);
};

/// Rest geometry. R0 maps world vectors into the bond frame whose first axis is d0.
struct BondRest {
  Vec3 d0 = Vec3::UnitX();
  Quat q0 = Quat::identity();
  Mat3 R0 = Mat3::Identity();

  static BondRest from_direction(const Vec3& d0);
};

enum class BondStatus { kIntact, kWeakened, kBroken };

struct BondState {
  BondStatus status = BondStatus::kIntact;
  double damage = 1.0;           // D in (0, 1], never increases
  double plastic_strain = 0.0;   // eps_p >= 0
  double sigma = 0.0;            // last evaluated tensile stress
  double tau = 0.0;              // last evaluated shear stress
  double stiffness_scale = 1.0;  // k in (0, 1], never increases
  double plastic_stress = 0.0;   // sigma_p = sigma_vM - sigma_y of the last plastic update

  bool broken() const { return status == BondStatus::kBroken; }
  /// Factor applied to k_n, k_t and K. S = D S0 scales every stiffness with D.
  double effective_scale() const { return stiffness_scale * damage; }
};

struct PlasticParams {
  double eps_c = 0.0;   // fracture strain
  double eps_ce = 0.0;  // elastic (yield) strain
  double alpha = 1.0;   // weakening blend in [0, 1]
  double a = 1.0;       // damage exponent
};

/// One bond of the graph, connecting elements i < j across a shared tet face.
struct Bond {
  int i = -1;
  int j = -1;
  int face = -1;
  BondParams params;
  BondRest rest;
  BondState state;
};

struct StretchEval {
  double energy = 0.0;
  Vec6 grad = Vec6::Zero();  // [p_i, p_j]
  Mat6 hess = Mat6::Zero();
};

struct BendTwistEval {
  double energy = 0.0;
  Vec3 t = Vec3::Zero();     // R0 G_l(q_j) q_i
  Vec8 grad = Vec8::Zero();  // [q_i, q_j]
  Mat8 hess = Mat8::Zero();
};

/// Evaluation in the element-major local layout [p_i, q_i, p_j, q_j].
struct PairEval {
  double energy = 0.0;
  Vec14 grad = Vec14::Zero();
  Mat14 hess = Mat14::Zero();
};

/// 1/2 k_n (|p_j - p_i| - l0)^2.
StretchEval stretch_potential(const Vec3& p_i, const Vec3& p_j, const BondParams& params,
                              bool with_hessian = true);

/// 1/2 k_t theta^2, theta the angle between the current bond direction
/// (p_j - p_i)/|p_j - p_i| and q_c ⊙ d0 with q_c = (q_i + q_j)/|q_i + q_j|.
PairEval shear_potential(const Vec3& p_i, const Quat& q_i, const Vec3& p_j, const Quat& q_j,
                         const BondRest& rest, const BondParams& params,
                         bool with_hessian = true);

/// 1/2 t^T K t with t = R0 G_l(q_j) q_i.
BendTwistEval bendtwist_potential(const Quat& q_i, const Quat& q_j, const BondRest& rest,
                                  const BondParams& params, bool with_hessian = true);

/// Sum of the three potentials scaled by the bond's effective stiffness.
PairEval bond_potential(const Vec3& p_i, const Quat& q_i, const Vec3& p_j, const Quat& q_j,
                        const BondRest& rest, const BondParams& params, const BondState& state,
                        bool with_hessian = true);

struct BondStress {
  double sigma = 0.0;
  double tau = 0.0;
};

/// Tensile and shear stress from the implicit force/moment definitions.
BondStress bond_stress(const Vec3& p_i, const Quat& q_i, const Vec3& p_j, const Quat& q_j,
                       const BondRest& rest, const BondParams& params, const BondState& state);

/// Axial strain (|p_j - p_i| - l0) / l0.
double axial_strain(const Vec3& p_i, const Vec3& p_j, const BondParams& params);

enum class FractureDecision { kKeep, kBreak };

/// Break iff sigma > sigma_c or tau > tau_c (strict).
FractureDecision fracture_check(double sigma, double tau, const BondParams& params);

double von_mises(double sigma_n, double tau);

/// Yield weakening and damage update. Strain above eps_c breaks the bond.
BondState plastic_update(const BondState& state, double sigma_vm, double strain,
                         const PlasticParams& plast, double youngs_modulus);

}  // namespace bdem
