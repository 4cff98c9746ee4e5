#include "bdem/model.hpp"

#include <algorithm>
#include <thread>

#include "bdem/error.hpp"

namespace bdem {

Vec3 PinnedMotion::position(double t) const {
  const double angle = angular_velocity.norm() * t;
  Vec3 rel = p0 - pivot;
  if (angle > 0.0) rel = rotate_vec(from_axis_angle(angular_velocity.normalized(), angle), rel);
  return pivot + rel + velocity * t;
}

Quat PinnedMotion::orientation(double t) const {
  const double angle = angular_velocity.norm() * t;
  if (angle == 0.0) return q0;
  return normalize(mul(from_axis_angle(angular_velocity.normalized(), angle), q0));
}

VectorXd Scene::configuration() const {
  VectorXd x(kPoseDim * element_count());
  for (int e = 0; e < element_count(); ++e) set_pose(x, e, elements[e].state.p, elements[e].state.q);
  return x;
}

void Scene::set_configuration(const VectorXd& x) {
  if (x.size() != kPoseDim * element_count()) throw Error("set_configuration: dimension mismatch");
  for (int e = 0; e < element_count(); ++e) {
    elements[e].state.p = position_of(x, e);
    elements[e].state.q = orientation_of(x, e);
  }
}

void Scene::apply_pins(double t) {
  for (const PinnedMotion& pin : pins) {
    ElementState& s = elements[pin.element].state;
    s.p = pin.position(t);
    s.q = pin.orientation(t);
    const Vec3 rel = s.p - pin.velocity * t - pin.pivot;
    s.v = pin.velocity + pin.angular_velocity.cross(rel);
    s.qdot = quat_rate(s.q, pin.angular_velocity);
  }
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1 || n < 64) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const int begin = static_cast<int>(static_cast<long>(n) * w / workers);
      const int end = static_cast<int>(static_cast<long>(n) * (w + 1) / workers);
      for (int k = begin; k < end; ++k) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<ContactPair> contact_candidates(const Scene& scene, const VectorXd& x, double margin) {
  const int n = scene.element_count();
  std::vector<Vec3> pos(n);
  std::vector<double> radii(n);
  double r_max = 0.0;
  for (int e = 0; e < n; ++e) {
    pos[e] = position_of(x, e);
    radii[e] = scene.elements[e].contact_radius;
    r_max = std::max(r_max, radii[e]);
  }
  std::vector<ContactPair> pairs = broad_phase(pos, radii, 2.0 * r_max + margin, margin);
  std::erase_if(pairs, [&](const ContactPair& c) {
    if (scene.elements[c.i].pinned && scene.elements[c.j].pinned) return true;
    for (int k : scene.graph.element_bonds[c.i]) {
      const Bond& b = scene.graph.bonds[k];
      if ((b.i == c.j || b.j == c.j) && !b.state.broken()) return true;
    }
    return false;
  });
  return pairs;
}

namespace {

// Scatters a 14-dim pair vector [p_i, q_i, p_j, q_j] into the global gradient.
void scatter_pair(VectorXd& grad, int a, int b, const Eigen::Ref<const VectorXd>& local) {
  grad.segment<kPoseDim>(kPoseDim * a) += local.head<kPoseDim>();
  grad.segment<kPoseDim>(kPoseDim * b) += local.tail<kPoseDim>();
}

}  // namespace

Evaluation evaluate_potential(const Scene& scene, const VectorXd& x,
                              std::span<const ContactPair> candidates, EvalLevel level) {
  const int n = scene.element_count();
  if (x.size() != kPoseDim * n) throw Error("evaluate_potential: dimension mismatch");
  const bool want_grad = level != EvalLevel::kValue;
  const bool want_hess = level == EvalLevel::kHessian;

  Evaluation out;
  out.grad = VectorXd::Zero(x.size());

  // Bonds.
  if (scene.enabled.bonds) {
    const auto& bonds = scene.graph.bonds;
    const int nb = static_cast<int>(bonds.size());
    std::vector<double> energies(nb, 0.0);
    std::vector<Vec14> grads(want_grad ? nb : 0);
    std::vector<Mat14> hessians(want_hess ? nb : 0);
    parallel_for(nb, scene.workers, [&](int k) {
      const Bond& b = bonds[k];
      if (b.state.broken()) return;
      PairEval ev = bond_potential(position_of(x, b.i), orientation_of(x, b.i), position_of(x, b.j),
                                   orientation_of(x, b.j), b.rest, b.params, b.state, want_hess);
      energies[k] = ev.energy;
      if (want_grad) grads[k] = ev.grad;
      if (want_hess) hessians[k] = ev.hess;
    });
    for (int k = 0; k < nb; ++k) {
      if (bonds[k].state.broken()) continue;
      out.energy.bonds += energies[k];
      if (want_grad) scatter_pair(out.grad, bonds[k].i, bonds[k].j, grads[k]);
      if (want_hess) out.terms.push_back({bonds[k].i, bonds[k].j, grads[k], hessians[k]});
    }
  }

  // Element-element repulsion over the frozen candidate set.
  if (scene.enabled.self_contact && scene.contact.self_contact) {
    for (const ContactPair& c : candidates) {
      const ContactEval ce =
          self_repulsion_potential(position_of(x, c.i), position_of(x, c.j), scene.elements[c.i].contact_radius,
                                   scene.elements[c.j].contact_radius, scene.contact.k_ec, want_hess);
      if (ce.energy == 0.0) continue;
      out.energy.self_contact += ce.energy;
      VectorXd g = VectorXd::Zero(2 * kPoseDim);
      g.segment<3>(0) = ce.grad.head<3>();
      g.segment<3>(kPoseDim) = ce.grad.tail<3>();
      if (want_grad) scatter_pair(out.grad, c.i, c.j, g);
      if (want_hess) {
        MatrixXd h = MatrixXd::Zero(2 * kPoseDim, 2 * kPoseDim);
        for (int r = 0; r < 2; ++r)
          for (int s = 0; s < 2; ++s) h.block<3, 3>(kPoseDim * r, kPoseDim * s) = ce.hess.block<3, 3>(3 * r, 3 * s);
        out.terms.push_back({c.i, c.j, std::move(g), std::move(h)});
      }
    }
  }

  // External colliders and gravity.
  for (int e = 0; e < n; ++e) {
    if (scene.elements[e].pinned) continue;
    const Vec3 p = position_of(x, e);
    if (scene.enabled.external) {
      for (const Collider& col : scene.colliders) {
        const ExternalEval ee = external_repulsion_potential(p, col, scene.contact.k_c, want_hess);
        if (ee.energy == 0.0 && ee.grad.isZero()) continue;
        out.energy.external += ee.energy;
        if (want_grad) out.grad.segment<3>(kPoseDim * e) += ee.grad;
        if (want_hess) {
          VectorXd g = VectorXd::Zero(kPoseDim);
          g.head<3>() = ee.grad;
          MatrixXd h = MatrixXd::Zero(kPoseDim, kPoseDim);
          h.topLeftCorner<3, 3>() = ee.hess;
          out.terms.push_back({e, -1, std::move(g), std::move(h)});
        }
      }
    }
    if (scene.enabled.gravity) {
      const double m = scene.elements[e].mass.m;
      out.energy.gravity -= m * scene.gravity.dot(p);
      if (want_grad) out.grad.segment<3>(kPoseDim * e) -= m * scene.gravity;
    }
  }
  out.value = out.energy.potential();
  return out;
}

}  // namespace bdem
