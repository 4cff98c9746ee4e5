#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bdem/bonds.hpp"

namespace bdem {
namespace {

BondParams params() { return BondParams::make(1e7, 4e6, 0.1, 0.02, 1e5, 2e5); }

TEST(Bonds, ParamsFollowBeamFormulas) {
  const BondParams p = params();
  EXPECT_NEAR(p.S, std::acos(-1.0) * 4e-4, 1e-18);
  EXPECT_NEAR(p.k_n, 1e7 * p.S / 0.1, 1e-6);
  EXPECT_NEAR(p.k_t, 4e6 * p.S / 0.1, 1e-6);
  EXPECT_NEAR(p.Jp, 2.0 * p.I, 1e-20);
  EXPECT_NEAR(p.K[0], 4e6 * p.Jp / 0.1, 1e-12);
  EXPECT_NEAR(p.K[1], 1e7 * p.I / 0.1, 1e-12);
}

TEST(Bonds, StretchEnergyAndForce) {
  const BondParams p = params();
  const StretchEval e = stretch_potential(Vec3::Zero(), Vec3(0.11, 0.0, 0.0), p);
  EXPECT_NEAR(e.energy, 0.5 * p.k_n * 1e-4, 1e-9);
  EXPECT_NEAR(e.grad[3], p.k_n * 0.01, 1e-6);
  EXPECT_NEAR(e.grad[0], -p.k_n * 0.01, 1e-6);
}

TEST(Bonds, RestStateHasZeroEnergyAndStress) {
  const BondParams p = params();
  const BondRest rest = BondRest::from_direction(Vec3(1.0, 1.0, 0.0).normalized());
  const Vec3 pj = 0.1 * rest.d0;
  const PairEval e = bond_potential(Vec3::Zero(), Quat::identity(), pj, Quat::identity(), rest, p, BondState{});
  EXPECT_NEAR(e.energy, 0.0, 1e-20);
  EXPECT_LT(e.grad.norm(), 1e-12 * p.k_n);
  const BondStress s = bond_stress(Vec3::Zero(), Quat::identity(), pj, Quat::identity(), rest, p, BondState{});
  EXPECT_NEAR(s.sigma, 0.0, 1e-6);
  EXPECT_NEAR(s.tau, 0.0, 1e-6);
}

TEST(Bonds, RigidRotationIsEnergyFree) {
  const BondParams p = params();
  const BondRest rest = BondRest::from_direction(Vec3::UnitX());
  const Quat r = from_axis_angle(Vec3(0.2, 1.0, -0.4).normalized(), 1.3);
  const Vec3 pi(0.5, -0.2, 0.1);
  const PairEval e = bond_potential(pi, r, pi + rotate_vec(r, 0.1 * Vec3::UnitX()), r, rest, p, BondState{});
  EXPECT_NEAR(e.energy, 0.0, 1e-14);
}

TEST(Bonds, TwistLoadsBendTwistOnly) {
  const BondParams p = params();
  const BondRest rest = BondRest::from_direction(Vec3::UnitX());
  const Quat qj = from_axis_angle(Vec3::UnitX(), 0.1);
  const BendTwistEval bt = bendtwist_potential(Quat::identity(), qj, rest, p);
  EXPECT_GT(bt.energy, 0.0);
  EXPECT_GT(std::abs(bt.t[0]), 10.0 * std::max(std::abs(bt.t[1]), std::abs(bt.t[2])));
  const StretchEval st = stretch_potential(Vec3::Zero(), Vec3(0.1, 0.0, 0.0), p);
  EXPECT_NEAR(st.energy, 0.0, 1e-20);
}

TEST(Bonds, DamageScalesEnergy) {
  const BondParams p = params();
  const BondRest rest = BondRest::from_direction(Vec3::UnitX());
  BondState half;
  half.damage = 0.5;
  const Vec3 pj(0.12, 0.01, 0.0);
  const PairEval full = bond_potential(Vec3::Zero(), Quat::identity(), pj, Quat::identity(), rest, p, BondState{});
  const PairEval weak = bond_potential(Vec3::Zero(), Quat::identity(), pj, Quat::identity(), rest, p, half);
  EXPECT_NEAR(weak.energy, 0.5 * full.energy, 1e-12 * full.energy);
}

TEST(Bonds, FractureThresholdIsStrict) {
  const BondParams p = params();
  EXPECT_EQ(fracture_check(p.sigma_c, 0.0, p), FractureDecision::kKeep);
  EXPECT_EQ(fracture_check(std::nextafter(p.sigma_c, 1e300), 0.0, p), FractureDecision::kBreak);
  EXPECT_EQ(fracture_check(0.0, std::nextafter(p.tau_c, 1e300), p), FractureDecision::kBreak);
}

TEST(Bonds, VonMisesOfPureTension) {
  EXPECT_EQ(von_mises(3.5e6, 0.0), 3.5e6);
  EXPECT_NEAR(von_mises(0.0, 1.0), std::sqrt(3.0), 1e-15);
}

TEST(Bonds, BrokenBondHasNoStress) {
  BondState s;
  s.status = BondStatus::kBroken;
  EXPECT_THROW(bond_stress(Vec3::Zero(), Quat::identity(), Vec3::UnitX(), Quat::identity(),
                           BondRest::from_direction(Vec3::UnitX()), params(), s),
               std::exception);
}

TEST(Plasticity, ElasticRangeKeepsFullDamage) {
  const PlasticParams pl{0.05, 0.01, 0.5, 1.0};
  const BondState s = plastic_update(BondState{}, 5e4, 0.009, pl, 1e7);
  EXPECT_EQ(s.damage, 1.0);
  EXPECT_EQ(s.status, BondStatus::kIntact);
}

TEST(Plasticity, YieldWeakensAndDamages) {
  const PlasticParams pl{0.05, 0.01, 0.5, 1.0};
  const BondState s = plastic_update(BondState{}, 2e5, 0.02, pl, 1e7);
  EXPECT_EQ(s.status, BondStatus::kWeakened);
  EXPECT_NEAR(s.stiffness_scale, 1.0 - 0.5 * (1.0 - 0.5), 1e-15);
  EXPECT_NEAR(s.damage, std::exp(-0.01), 1e-15);
  EXPECT_NEAR(s.plastic_strain, 0.01, 1e-15);
}

TEST(Plasticity, DamageNeverIncreases) {
  const PlasticParams pl{0.05, 0.01, 0.5, 1.0};
  BondState s = plastic_update(BondState{}, 3e5, 0.04, pl, 1e7);
  const double d = s.damage;
  s = plastic_update(s, 1.1e5, 0.015, pl, 1e7);
  EXPECT_LE(s.damage, d);
  s = plastic_update(s, 0.0, 0.0, pl, 1e7);
  EXPECT_LE(s.damage, d);
}

TEST(Plasticity, StrainAboveLimitBreaks) {
  const PlasticParams pl{0.05, 0.01, 0.5, 1.0};
  EXPECT_TRUE(plastic_update(BondState{}, 0.0, 0.0501, pl, 1e7).broken());
  EXPECT_FALSE(plastic_update(BondState{}, 0.0, 0.05, pl, 1e7).broken());
}

}  // namespace
}  // namespace bdem
