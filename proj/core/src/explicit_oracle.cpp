#include "bdem/explicit_oracle.hpp"

#include <cmath>
#include <limits>

#include "bdem/error.hpp"

namespace bdem {

double explicit_step_limit(const Scene& scene) {
  double limit = std::numeric_limits<double>::infinity();
  std::vector<double> rotational(scene.elements.size(), 0.0);
  for (const Bond& b : scene.graph.bonds) {
    if (b.state.broken()) continue;
    const double m = std::min(scene.elements[b.i].mass.m, scene.elements[b.j].mass.m);
    const double scale = b.state.effective_scale();
    const double k = b.params.k_n * scale;
    if (k > 0.0) limit = std::min(limit, 0.1 * std::sqrt(m / k));
    const double k_rot = (b.params.k_t + b.params.K.maxCoeff()) * scale;
    rotational[b.i] += k_rot;
    rotational[b.j] += k_rot;
  }
  for (std::size_t e = 0; e < rotational.size(); ++e) {
    if (rotational[e] > 0.0) {
      limit = std::min(limit, 2.0 * std::sqrt(scene.elements[e].mass.inertia() / rotational[e]));
    }
  }
  return limit;
}

ExplicitIntegrator::ExplicitIntegrator(Scene& scene, double dt) : scene_(&scene), dt_(dt) {
  const double limit = explicit_step_limit(scene);
  if (!(dt > 0.0) || dt > limit) {
    throw ConfigError("explicit step " + std::to_string(dt) + " exceeds the stability limit " +
                          std::to_string(limit),
                      0, "dt");
  }
}

void ExplicitIntegrator::step() {
  Scene& scene = *scene_;
  const VectorXd x = scene.configuration();
  std::vector<ContactPair> candidates;
  if (scene.enabled.self_contact && scene.contact.self_contact) candidates = contact_candidates(scene, x, 0.0);
  const Evaluation ev = evaluate_potential(scene, x, candidates, EvalLevel::kGradient);

  for (int e = 0; e < scene.element_count(); ++e) {
    Element& el = scene.elements[e];
    if (el.pinned) continue;
    ElementState& s = el.state;
    s.v -= dt_ / el.mass.m * ev.grad.segment<3>(kPoseDim * e);
    // dE/dt = g_q . qdot = 1/2 (Q_r(q)^T g_q)_xyz . w
    const Vec4 g_q = ev.grad.segment<4>(kPoseDim * e + 3);
    const Vec3 torque = -0.5 * (right_matrix(s.q).transpose() * g_q).head<3>();
    AngVel w = angular_velocity(s.q, s.qdot);
    w += dt_ / el.mass.inertia() * torque;

    s.p += dt_ * s.v;
    const double angle = w.norm() * dt_;
    if (angle > 0.0) s.q = normalize(mul(from_axis_angle(w / w.norm(), angle), s.q));
    s.qdot = quat_rate(s.q, w);
  }
  scene.time += dt_;
  scene.apply_pins(scene.time);
}

void ExplicitIntegrator::advance_to(double t) {
  const long long steps = std::llround((t - scene_->time) / dt_);
  for (long long k = 0; k < steps; ++k) step();
}

}  // namespace bdem
