#include "bdem/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdem/error.hpp"

namespace bdem {

VectorXd velocity_vector(const Scene& scene) {
  VectorXd v(kPoseDim * scene.element_count());
  for (int e = 0; e < scene.element_count(); ++e) {
    v.segment<3>(kPoseDim * e) = scene.elements[e].state.v;
    v.segment<4>(kPoseDim * e + 3) = scene.elements[e].state.qdot;
  }
  return v;
}

namespace {

void fill_masses(const Scene& scene, StepContext& ctx) {
  ctx.mass_p.resize(scene.element_count());
  ctx.mass_q.resize(scene.element_count());
  for (int e = 0; e < scene.element_count(); ++e) {
    ctx.mass_p[e] = scene.elements[e].mass.translational();
    ctx.mass_q[e] = scene.elements[e].mass.rotational();
  }
}

}  // namespace

StepContext StepContext::from_scene(const Scene& scene, double dt) {
  if (!(dt > 0.0)) throw Error("StepContext: dt must be positive");
  StepContext ctx;
  ctx.dt = dt;
  ctx.x_curr = scene.configuration();
  const VectorXd v = velocity_vector(scene);
  ctx.x_prev = ctx.x_curr - dt * v;
  ctx.x_hat = ctx.x_curr + dt * v;
  fill_masses(scene, ctx);
  return ctx;
}

StepContext StepContext::from_history(const Scene& scene, const VectorXd& x_prev, const VectorXd& x_curr,
                                      double dt) {
  if (!(dt > 0.0)) throw Error("StepContext: dt must be positive");
  if (x_prev.size() != x_curr.size() || x_curr.size() != kPoseDim * scene.element_count()) {
    throw Error("StepContext: dimension mismatch");
  }
  StepContext ctx;
  ctx.dt = dt;
  ctx.x_prev = x_prev;
  ctx.x_curr = x_curr;
  ctx.x_hat = 2.0 * x_curr - x_prev;
  fill_masses(scene, ctx);
  return ctx;
}

IncrementalPotential::IncrementalPotential(const Scene& scene, StepContext ctx,
                                           std::vector<ContactPair> candidates, Scheme scheme)
    : scene_(&scene), ctx_(std::move(ctx)), candidates_(std::move(candidates)), scheme_(scheme) {
  if (ctx_.x_curr.size() != kPoseDim * scene.element_count()) {
    throw Error("IncrementalPotential: dimension mismatch");
  }
  if (scheme_ == Scheme::kMidPoint) {
    const VectorXd mid = 0.5 * (ctx_.x_prev + ctx_.x_curr);
    previous_mid_grad_ = evaluate_potential(scene, mid, candidates_, EvalLevel::kGradient).grad;
  }
}

Evaluation IncrementalPotential::evaluate(const VectorXd& x, EvalLevel level) const {
  if (x.size() != ctx_.x_curr.size()) throw Error("IncrementalPotential: dimension mismatch");
  const int n = element_count();
  const bool want_grad = level != EvalLevel::kValue;
  const bool want_hess = level == EvalLevel::kHessian;

  Evaluation out;
  if (scheme_ == Scheme::kRightPoint) {
    out = evaluate_potential(*scene_, x, candidates_, level);
  } else {
    const VectorXd mid = 0.5 * (x + ctx_.x_curr);
    out = evaluate_potential(*scene_, mid, candidates_, level);
    if (want_grad) out.grad *= 0.5;
    for (LocalTerm& t : out.terms) {
      t.grad *= 0.5;
      t.hess *= 0.25;
    }
    const double linear = 0.5 * previous_mid_grad_.dot(x);
    out.value += linear;
    if (want_grad) out.grad += 0.5 * previous_mid_grad_;
    // Keep the per-term curvature bookkeeping consistent with the full gradient.
    if (want_hess) {
      for (int e = 0; e < n; ++e) {
        LocalTerm t;
        t.a = e;
        t.grad = 0.5 * previous_mid_grad_.segment<kPoseDim>(kPoseDim * e);
        t.hess = MatrixXd::Zero(kPoseDim, kPoseDim);
        out.terms.push_back(std::move(t));
      }
    }
  }

  const double inv_dt2 = 1.0 / (ctx_.dt * ctx_.dt);
  double inertia = 0.0;
  for (int e = 0; e < n; ++e) {
    if (fixed(e)) continue;
    const auto d = (x.segment<kPoseDim>(kPoseDim * e) - ctx_.x_hat.segment<kPoseDim>(kPoseDim * e)).eval();
    const double mp = ctx_.mass_p[e] * inv_dt2;
    const double mq = ctx_.mass_q[e] * inv_dt2;
    inertia += 0.5 * (mp * d.head<3>().squaredNorm() + mq * d.tail<4>().squaredNorm());
    if (!want_grad) continue;
    Eigen::Matrix<double, kPoseDim, 1> g;
    g << mp * d.head<3>(), mq * d.tail<4>();
    out.grad.segment<kPoseDim>(kPoseDim * e) += g;
    if (want_hess) {
      LocalTerm t;
      t.a = e;
      t.grad = g;
      t.hess = MatrixXd::Zero(kPoseDim, kPoseDim);
      t.hess.diagonal() << mp, mp, mp, mq, mq, mq, mq;
      out.terms.push_back(std::move(t));
    }
  }
  out.energy.inertia = inertia;
  out.value += inertia;
  return out;
}

const char* to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::kFirstOrder: return "first-order";
    case SolverMethod::kSecondOrder: return "second-order";
    case SolverMethod::kPenalty: return "penalty";
    case SolverMethod::kLagrange: return "lagrange";
    case SolverMethod::kAugmented: return "augmented";
  }
  return "unknown";
}

SolverMethod parse_solver_method(const std::string& name) {
  for (SolverMethod m : {SolverMethod::kFirstOrder, SolverMethod::kSecondOrder, SolverMethod::kPenalty,
                         SolverMethod::kLagrange, SolverMethod::kAugmented}) {
    if (name == to_string(m)) return m;
  }
  throw Error("unknown solver method '" + name +
              "' (expected first-order, second-order, penalty, lagrange or augmented)");
}

SolveResult run_solver(SolverMethod method, const Objective& objective, const VectorXd& x0,
                       const SolverOptions& options) {
  switch (method) {
    case SolverMethod::kFirstOrder: return solve_first_order(objective, x0, options);
    case SolverMethod::kSecondOrder: return solve_second_order(objective, x0, options);
    case SolverMethod::kPenalty: return solve_penalty(objective, x0, options);
    case SolverMethod::kLagrange: return solve_lagrange(objective, x0, options);
    case SolverMethod::kAugmented: return solve_augmented(objective, x0, options);
  }
  throw Error("run_solver: unknown method");
}

VectorXd predict(const Scene& scene, const VectorXd& x_curr, double dt) {
  VectorXd x0 = x_curr;
  for (int e = 0; e < scene.element_count(); ++e) {
    const ElementState& s = scene.elements[e].state;
    const Quat q = orientation_of(x_curr, e);
    x0.segment<3>(kPoseDim * e) += dt * s.v;
    x0.segment<4>(kPoseDim * e + 3) = geodesic_step(q, dt * project_tangent(q, s.qdot)).coeffs();
  }
  return x0;
}

namespace {

double candidate_margin(const Scene& scene, double dt) {
  double vmax = 0.0, rmin = std::numeric_limits<double>::infinity();
  for (const Element& e : scene.elements) {
    vmax = std::max(vmax, e.state.v.norm());
    rmin = std::min(rmin, e.contact_radius);
  }
  return scene.contact.margin_factor * vmax * dt + 0.05 * (std::isfinite(rmin) ? rmin : 0.0);
}

std::vector<ContactPair> step_candidates(const Scene& scene, const VectorXd& x, double dt) {
  if (!scene.enabled.self_contact || !scene.contact.self_contact) return {};
  return contact_candidates(scene, x, candidate_margin(scene, dt));
}

// Geodesic version of x̂ from the context history.
VectorXd predict_from_context(const StepContext& ctx) {
  VectorXd x0 = ctx.x_hat;
  const int n = static_cast<int>(ctx.x_curr.size() / kPoseDim);
  for (int e = 0; e < n; ++e) {
    const Quat q = orientation_of(ctx.x_curr, e);
    const Vec4 dq = ctx.x_hat.segment<4>(kPoseDim * e + 3) - q.coeffs();
    x0.segment<4>(kPoseDim * e + 3) = geodesic_step(q, project_tangent(q, dq)).coeffs();
  }
  return x0;
}

void finish_velocity(StepOutcome& out, const StepContext& ctx) {
  out.v_next = (out.x_next - ctx.x_curr) / ctx.dt;
}

}  // namespace

StepOutcome step_right_point(const Scene& scene, const StepContext& ctx, const SolverOptions& options,
                             SolverMethod method) {
  IncrementalPotential phi(scene, ctx, step_candidates(scene, ctx.x_curr, ctx.dt));
  StepOutcome out;
  out.solve = run_solver(method, phi, predict_from_context(ctx), options);
  out.x_next = out.solve.x;
  finish_velocity(out, ctx);
  return out;
}

StepOutcome step_mid_point(const Scene& scene, const StepContext& ctx, const SolverOptions& options) {
  IncrementalPotential phi(scene, ctx, step_candidates(scene, ctx.x_curr, ctx.dt), Scheme::kMidPoint);
  StepOutcome out;
  out.solve = solve_second_order(phi, predict_from_context(ctx), options);
  out.x_next = out.solve.x;
  finish_velocity(out, ctx);
  return out;
}

VectorXd step_left_point(const Scene& scene, const StepContext& ctx) {
  const std::vector<ContactPair> cand = step_candidates(scene, ctx.x_curr, ctx.dt);
  const Evaluation ev = evaluate_potential(scene, ctx.x_curr, cand, EvalLevel::kGradient);
  VectorXd x = ctx.x_hat;
  const double dt2 = ctx.dt * ctx.dt;
  for (int e = 0; e < scene.element_count(); ++e) {
    if (scene.elements[e].pinned) {
      x.segment<kPoseDim>(kPoseDim * e) = ctx.x_curr.segment<kPoseDim>(kPoseDim * e);
      continue;
    }
    x.segment<3>(kPoseDim * e) -= dt2 / ctx.mass_p[e] * ev.grad.segment<3>(kPoseDim * e);
    x.segment<4>(kPoseDim * e + 3) -= dt2 / ctx.mass_q[e] * ev.grad.segment<4>(kPoseDim * e + 3);
    const Quat q = normalize(orientation_of(x, e));
    x.segment<4>(kPoseDim * e + 3) = q.coeffs();
  }
  return x;
}

std::vector<BrokenBond> update_bonds(Scene& scene) {
  std::vector<BrokenBond> broken;
  for (int k = 0; k < static_cast<int>(scene.graph.bonds.size()); ++k) {
    Bond& b = scene.graph.bonds[k];
    if (b.state.broken()) continue;
    const ElementState& si = scene.elements[b.i].state;
    const ElementState& sj = scene.elements[b.j].state;
    const BondStress st = bond_stress(si.p, si.q, sj.p, sj.q, b.rest, b.params, b.state);
    b.state.sigma = st.sigma;
    b.state.tau = st.tau;
    if (scene.fracture && fracture_check(st.sigma, st.tau, b.params) == FractureDecision::kBreak) {
      b.state.status = BondStatus::kBroken;
      broken.push_back({k, st.sigma, st.tau, false});
      continue;
    }
    if (scene.plasticity) {
      const double strain = axial_strain(si.p, sj.p, b.params);
      const BondState next = plastic_update(b.state, von_mises(st.sigma, st.tau), strain, scene.plastic, b.params.E);
      b.state = next;
      if (next.broken()) broken.push_back({k, st.sigma, st.tau, true});
    }
  }
  if (scene.surface.size() == scene.elements.size()) {
    for (const BrokenBond& bb : broken) {
      scene.surface[scene.graph.bonds[bb.bond].i] = true;
      scene.surface[scene.graph.bonds[bb.bond].j] = true;
    }
  }
  return broken;
}

namespace {

void apply_friction(Scene& scene, const std::vector<ContactPair>& candidates, double dt) {
  const ContactSettings& cs = scene.contact;
  if (cs.mu_s <= 0.0 && cs.mu_r <= 0.0) return;
  auto correct = [&](int e, const FrictionInput& in) {
    const FrictionCorrection fc = friction_post_step(in, dt, cs.mu_s, cs.mu_r);
    ElementState& s = scene.elements[e].state;
    s.v += fc.dv;
    s.qdot += quat_rate(s.q, fc.dw);
  };
  auto input_for = [&](int e) {
    const Element& el = scene.elements[e];
    FrictionInput in;
    in.v = el.state.v;
    in.w = angular_velocity(el.state.q, el.state.qdot);
    in.mass = el.mass.m;
    in.inertia = el.mass.inertia();
    in.radius = el.mass.r;
    return in;
  };
  if (scene.enabled.external) {
    for (int e = 0; e < scene.element_count(); ++e) {
      if (scene.elements[e].pinned) continue;
      for (const Collider& col : scene.colliders) {
        const Vec3 p = scene.elements[e].state.p;
        const double g = col.distance(p);
        if (g >= 0.0) continue;
        FrictionInput in = input_for(e);
        in.v_rel = in.v;
        in.w_rel = in.w;
        in.normal = col.gradient(p);
        in.force = cs.k_c * std::abs(g);
        correct(e, in);
      }
    }
  }
  if (scene.enabled.self_contact && cs.self_contact) {
    for (const ContactPair& c : candidates) {
      const Vec3 d = scene.elements[c.i].state.p - scene.elements[c.j].state.p;
      const double dist = d.norm();
      const double overlap = scene.elements[c.i].contact_radius + scene.elements[c.j].contact_radius - dist;
      if (overlap <= 0.0 || dist == 0.0) continue;
      const Vec3 n = d / dist;
      for (int side = 0; side < 2; ++side) {
        const int me = side == 0 ? c.i : c.j;
        const int other = side == 0 ? c.j : c.i;
        if (scene.elements[me].pinned) continue;
        FrictionInput in = input_for(me);
        const FrictionInput partner = input_for(other);
        in.v_rel = in.v - partner.v;
        in.w_rel = in.w - partner.w;
        in.normal = side == 0 ? n : Vec3(-n);
        in.force = cs.k_ec * overlap;
        correct(me, in);
      }
    }
  }
}

}  // namespace

StepReport stable_step(Scene& scene, double dt, const StableStepOptions& options) {
  StepReport report;
  const double t_next = scene.time + dt;

  StepContext ctx = StepContext::from_scene(scene, dt);
  VectorXd x0 = predict(scene, ctx.x_curr, dt);
  // Pinned elements sit at their prescribed state for the whole solve.
  for (const PinnedMotion& pin : scene.pins) {
    set_pose(x0, pin.element, pin.position(t_next), pin.orientation(t_next));
  }
  const std::vector<ContactPair> candidates = step_candidates(scene, ctx.x_curr, dt);
  const IncrementalPotential phi(scene, ctx, candidates);
  const SolveResult sol = run_solver(options.method, phi, x0, options.solver);

  report.converged = sol.converged;
  report.newton_iterations = sol.iterations;
  report.pcg_iterations = sol.pcg_iterations;
  report.grad_norm = sol.grad_norm;
  report.max_unit_violation = sol.max_unit_violation;
  report.trace = sol.trace;
  report.message = sol.message;
  if (!sol.converged) return report;

  VectorXd x_next = sol.x;
  // Baselines may leave quaternions off the sphere; the state must be unit.
  for (int e = 0; e < scene.element_count(); ++e) {
    set_pose(x_next, e, position_of(x_next, e), normalize(orientation_of(x_next, e)));
  }
  report.energy = phi.evaluate(x_next, EvalLevel::kValue).energy;

  const VectorXd v_next = (x_next - ctx.x_curr) / dt;
  for (int e = 0; e < scene.element_count(); ++e) {
    ElementState& s = scene.elements[e].state;
    s.p = position_of(x_next, e);
    s.q = orientation_of(x_next, e);
    s.v = v_next.segment<3>(kPoseDim * e);
    s.qdot = v_next.segment<4>(kPoseDim * e + 3);
  }
  scene.apply_pins(t_next);
  scene.time = t_next;

  apply_friction(scene, candidates, dt);
  report.broken = update_bonds(scene);
  return report;
}

}  // namespace bdem
