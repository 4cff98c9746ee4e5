#include "bdem/bonds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bdem/error.hpp"

namespace bdem {

namespace {

using Mat34 = Eigen::Matrix<double, 3, 4>;

// Symmetric A(w) with s^T A(w) s = w . vec(s (d0,0) conj(s)) for any 4-vector s.
Mat4 sandwich_form(const Vec3& d0, const Vec3& w) {
  Mat4 a;
  const double wd = w.dot(d0);
  a.topLeftCorner<3, 3>() = d0 * w.transpose() + w * d0.transpose() - wd * Mat3::Identity();
  const Vec3 c = d0.cross(w);
  a.topRightCorner<3, 1>() = c;
  a.bottomLeftCorner<1, 3>() = c.transpose();
  a(3, 3) = wd;
  return a;
}

// First and second derivative of h(c) = acos(c)^2 expressed through theta.
void angle_squared_derivatives(double theta, double& d1, double& d2) {
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    d1 = -2.0 * (1.0 + t2 / 6.0);
    d2 = 2.0 * (1.0 / 3.0 + 2.0 * t2 / 15.0);
    return;
  }
  const double sn = std::sin(theta);
  const double cs = std::cos(theta);
  d1 = -2.0 * theta / sn;
  d2 = 2.0 * (sn - theta * cs) / (sn * sn * sn);
}

}  // namespace

BondParams BondParams::make(double E, double G, double l0, double r0, double sigma_c,
                            double tau_c) {
  if (!(E > 0.0) || !(G > 0.0) || !(l0 > 0.0) || !(r0 > 0.0)) {
    throw Error("BondParams: E, G, l0 and r0 must be positive");
  }
  BondParams b;
  b.E = E;
  b.G = G;
  b.l0 = l0;
  b.r0 = r0;
  b.S = std::numbers::pi * r0 * r0;
  b.I = std::numbers::pi * std::pow(r0, 4) / 4.0;
  b.Jp = std::numbers::pi * std::pow(r0, 4) / 2.0;
  b.k_n = E * b.S / l0;
  b.k_t = G * b.S / l0;
  b.K = Vec3(G * b.Jp, E * b.I, E * b.I) / l0;
  b.sigma_c = sigma_c;
  b.tau_c = tau_c;
  return b;
}

BondRest BondRest::from_direction(const Vec3& d0) {
  BondRest r;
  r.d0 = d0.normalized();
  r.q0 = shortest_arc(Vec3::UnitX(), r.d0);
  r.R0 = nullspace_left(r.q0) * nullspace_right(r.q0).transpose();
  return r;
}

StretchEval stretch_potential(const Vec3& p_i, const Vec3& p_j, const BondParams& params,
                              bool with_hessian) {
  const Vec3 u = p_j - p_i;
  const double len = u.norm();
  if (len < 1e-12 * params.l0) throw DegenerateError("stretch_potential: coincident endpoints");
  const Vec3 n = u / len;
  const double ext = len - params.l0;

  StretchEval out;
  out.energy = 0.5 * params.k_n * ext * ext;
  const Vec3 f = params.k_n * ext * n;
  out.grad.head<3>() = -f;
  out.grad.tail<3>() = f;
  if (with_hessian) {
    const Mat3 nn = n * n.transpose();
    const Mat3 h = params.k_n * (nn + (ext / len) * (Mat3::Identity() - nn));
    out.hess.topLeftCorner<3, 3>() = h;
    out.hess.bottomRightCorner<3, 3>() = h;
    out.hess.topRightCorner<3, 3>() = -h;
    out.hess.bottomLeftCorner<3, 3>() = -h;
  }
  return out;
}

PairEval shear_potential(const Vec3& p_i, const Quat& q_i, const Vec3& p_j, const Quat& q_j,
                         const BondRest& rest, const BondParams& params, bool with_hessian) {
  const Vec3 u = p_j - p_i;
  const double len = u.norm();
  if (len < 1e-12 * params.l0) throw DegenerateError("shear_potential: coincident endpoints");
  const Vec4 s = q_i.coeffs() + q_j.coeffs();
  const double ss = s.squaredNorm();
  if (ss < 1e-16) throw DegenerateError("shear_potential: antipodal quaternions");

  const Vec3& d0 = rest.d0;
  const Vec3 e = u / len;
  // r = q_c ⊙ d0 written without normalizing q_c.
  const Vec3 t = s.head<3>();
  const double sw = s[3];
  const Vec3 r = ((sw * sw - t.squaredNorm()) * d0 + 2.0 * t.dot(d0) * t + 2.0 * sw * t.cross(d0)) / ss;
  const double c = e.dot(r);
  const double theta = std::atan2(e.cross(r).norm(), c);

  PairEval out;
  out.energy = 0.5 * params.k_t * theta * theta;

  double h1 = 0.0, h2 = 0.0;
  angle_squared_derivatives(theta, h1, h2);

  const Mat4 ae = sandwich_form(d0, e);
  const Vec3 gu = (r - c * e) / len;
  const Vec4 gs = (2.0 / ss) * (ae * s - c * s);

  Vec14 gc;
  gc << -gu, gs, gu, gs;
  const double scale = 0.5 * params.k_t;
  out.grad = scale * h1 * gc;
  if (!with_hessian) return out;

  const Mat3 proj = Mat3::Identity() - e * e.transpose();
  const Vec3 pr = r - c * e;
  const Mat3 huu = (-pr * e.transpose() - e * pr.transpose() - c * proj) / (len * len);
  const Mat4 hss = (2.0 / ss) * (ae - c * Mat4::Identity() - s * gs.transpose() - gs * s.transpose());
  Mat34 jr;
  for (int k = 0; k < 3; ++k) {
    const Mat4 ak = sandwich_form(d0, Vec3::Unit(k));
    jr.row(k) = ((2.0 / ss) * (ak * s - r[k] * s)).transpose();
  }
  const Mat34 hus = proj * jr / len;

  Mat14 hc = Mat14::Zero();
  // Offsets: p_i 0, q_i 3, p_j 7, q_j 10.
  hc.block<3, 3>(0, 0) = huu;
  hc.block<3, 3>(7, 7) = huu;
  hc.block<3, 3>(0, 7) = -huu;
  hc.block<3, 3>(7, 0) = -huu;
  for (int qo : {3, 10}) {
    hc.block<3, 4>(0, qo) = -hus;
    hc.block<4, 3>(qo, 0) = -hus.transpose();
    hc.block<3, 4>(7, qo) = hus;
    hc.block<4, 3>(qo, 7) = hus.transpose();
    for (int qo2 : {3, 10}) hc.block<4, 4>(qo, qo2) = hss;
  }
  out.hess = scale * (h2 * gc * gc.transpose() + h1 * hc);
  return out;
}

BendTwistEval bendtwist_potential(const Quat& q_i, const Quat& q_j, const BondRest& rest,
                                  const BondParams& params, bool with_hessian) {
  BendTwistEval out;
  const Mat34 ji = rest.R0 * nullspace_left(q_j);
  const Mat34 jj = -rest.R0 * nullspace_left(q_i);
  out.t = ji * q_i.coeffs();
  const Vec3 kt = params.K.cwiseProduct(out.t);
  out.energy = 0.5 * out.t.dot(kt);
  out.grad.head<4>() = ji.transpose() * kt;
  out.grad.tail<4>() = jj.transpose() * kt;
  if (!with_hessian) return out;

  const Mat3 k = params.K.asDiagonal();
  out.hess.topLeftCorner<4, 4>() = ji.transpose() * k * ji;
  out.hess.bottomRightCorner<4, 4>() = jj.transpose() * k * jj;
  Mat4 cross = ji.transpose() * k * jj;
  // t is bilinear in (q_i, q_j); its second mixed derivative contracts with R0^T K t.
  const Vec3 y = rest.R0.transpose() * kt;
  for (int b = 0; b < 4; ++b) {
    cross.col(b) += nullspace_left(Quat(Vec4::Unit(b))).transpose() * y;
  }
  out.hess.topRightCorner<4, 4>() = cross;
  out.hess.bottomLeftCorner<4, 4>() = cross.transpose();
  return out;
}

PairEval bond_potential(const Vec3& p_i, const Quat& q_i, const Vec3& p_j, const Quat& q_j,
                        const BondRest& rest, const BondParams& params, const BondState& state,
                        bool with_hessian) {
  PairEval out = shear_potential(p_i, q_i, p_j, q_j, rest, params, with_hessian);
  const StretchEval st = stretch_potential(p_i, p_j, params, with_hessian);
  const BendTwistEval bt = bendtwist_potential(q_i, q_j, rest, params, with_hessian);

  out.energy += st.energy + bt.energy;
  out.grad.segment<3>(0) += st.grad.head<3>();
  out.grad.segment<3>(7) += st.grad.tail<3>();
  out.grad.segment<4>(3) += bt.grad.head<4>();
  out.grad.segment<4>(10) += bt.grad.tail<4>();
  if (with_hessian) {
    out.hess.block<3, 3>(0, 0) += st.hess.block<3, 3>(0, 0);
    out.hess.block<3, 3>(0, 7) += st.hess.block<3, 3>(0, 3);
    out.hess.block<3, 3>(7, 0) += st.hess.block<3, 3>(3, 0);
    out.hess.block<3, 3>(7, 7) += st.hess.block<3, 3>(3, 3);
    out.hess.block<4, 4>(3, 3) += bt.hess.block<4, 4>(0, 0);
    out.hess.block<4, 4>(3, 10) += bt.hess.block<4, 4>(0, 4);
    out.hess.block<4, 4>(10, 3) += bt.hess.block<4, 4>(4, 0);
    out.hess.block<4, 4>(10, 10) += bt.hess.block<4, 4>(4, 4);
  }
  const double k = state.effective_scale();
  if (k != 1.0) {
    out.energy *= k;
    out.grad *= k;
    if (with_hessian) out.hess *= k;
  }
  return out;
}

double axial_strain(const Vec3& p_i, const Vec3& p_j, const BondParams& params) {
  return ((p_j - p_i).norm() - params.l0) / params.l0;
}

BondStress bond_stress(const Vec3& p_i, const Quat& q_i, const Vec3& p_j, const Quat& q_j,
                       const BondRest& rest, const BondParams& params, const BondState& state) {
  if (state.broken()) throw Error("bond_stress: bond is broken");
  const double k = state.effective_scale();
  const double section = state.damage * params.S;

  const StretchEval st = stretch_potential(p_i, p_j, params, false);
  const PairEval sh = shear_potential(p_i, q_i, p_j, q_j, rest, params, false);
  const BendTwistEval bt = bendtwist_potential(q_i, q_j, rest, params, false);

  const double fn = k * st.grad.tail<3>().norm();
  const double fs = k * sh.grad.segment<3>(7).norm();
  const Vec3 moment = k * params.K.cwiseProduct(bt.t);
  const double mb = std::hypot(moment[1], moment[2]);
  const double mt = std::abs(moment[0]);

  return {fn / section + mb * params.r0 / params.I, fs / section + mt * params.r0 / params.Jp};
}

FractureDecision fracture_check(double sigma, double tau, const BondParams& params) {
  return (sigma > params.sigma_c || tau > params.tau_c) ? FractureDecision::kBreak
                                                        : FractureDecision::kKeep;
}

double von_mises(double sigma_n, double tau) { return std::sqrt(sigma_n * sigma_n + 3.0 * tau * tau); }

BondState plastic_update(const BondState& state, double sigma_vm, double strain,
                         const PlasticParams& plast, double youngs_modulus) {
  BondState next = state;
  if (state.broken()) return next;
  if (strain > plast.eps_c) {
    next.status = BondStatus::kBroken;
    return next;
  }
  const double sigma_y = youngs_modulus * plast.eps_ce;
  if (sigma_vm <= sigma_y) return next;

  const double k_max = sigma_y / sigma_vm;
  const double k_new = 1.0 - plast.alpha * (1.0 - k_max);
  next.stiffness_scale = std::min(state.stiffness_scale, k_new);
  next.plastic_stress = sigma_vm - sigma_y;

  const double eps_p = std::max(0.0, strain - plast.eps_ce);
  next.plastic_strain = std::max(state.plastic_strain, eps_p);
  const double d = eps_p > 0.0 ? std::exp(-std::pow(eps_p, plast.a)) : 1.0;
  next.damage = std::min(state.damage, d);
  next.status = BondStatus::kWeakened;
  return next;
}

}  // namespace bdem
