#include "bdem/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "bdem/error.hpp"

namespace bdem {
namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

Simulation::Simulation(SceneConfig config) : config_(std::move(config)), scene_(build_scene(config_)) {
  step_options_.method = config_.method;
}

FrameStats Simulation::snapshot() const {
  FrameStats s;
  s.frame = frame_;
  s.time = scene_.time;
  s.intact_bonds = scene_.graph.intact_count();
  s.components = label_components(scene_.graph, scene_.element_count()).component_count();
  s.pcg_iterations = static_cast<int>(pcg_total_);
  for (const Element& el : scene_.elements) {
    s.kinetic += kinetic_energy(el.state, el.mass);
    s.max_displacement = std::max(s.max_displacement, (el.state.p - el.rest_centroid).norm());
  }
  return s;
}

void Simulation::advance(double dt, int depth, FrameStats& stats) {
  Scene trial = scene_;
  step_options_.solver = solver_options(config_, scene_, dt);
  StepReport report = stable_step(trial, dt, step_options_);
  stats.max_unit_violation = std::max(stats.max_unit_violation, report.max_unit_violation);
  if (!report.converged) {
    if (depth >= config_.max_retries) {
      throw SolverError("frame " + std::to_string(frame_) + ": step at t = " + fmt_double(scene_.time) +
                        " with dt = " + fmt_double(dt) + " did not converge after " + std::to_string(depth) +
                        " halvings (" + report.message + ")");
    }
    ++stats.retries;
    advance(0.5 * dt, depth + 1, stats);
    advance(0.5 * dt, depth + 1, stats);
    return;
  }
  scene_ = std::move(trial);
  ++step_;
  ++stats.steps;
  stats.newton_iterations += report.newton_iterations;
  pcg_total_ += report.pcg_iterations;
  stats.grad_norm = report.grad_norm;
  stats.energy = report.energy;
  stats.bonds_broken += static_cast<int>(report.broken.size());
  for (const IterationRecord& it : report.trace) convergence_.push_back({frame_, step_, it});
  for (const BrokenBond& bb : report.broken) {
    const Bond& b = scene_.graph.bonds[bb.bond];
    fractures_.push_back({frame_, step_, bb.bond, b.i, b.j, bb.sigma, bb.tau, b.params.sigma_c, b.params.tau_c,
                          bb.by_strain});
  }
  if (observer_) observer_(scene_, report);
}

FrameStats Simulation::advance_frame() {
  ++frame_;
  FrameStats stats;
  const int steps = config_.steps_per_frame();
  for (int k = 0; k < steps; ++k) advance(config_.dt, 0, stats);
  FrameStats s = snapshot();
  s.steps = stats.steps;
  s.retries = stats.retries;
  s.newton_iterations = stats.newton_iterations;
  s.grad_norm = stats.grad_norm;
  s.max_unit_violation = stats.max_unit_violation;
  s.energy = stats.energy;
  s.bonds_broken = stats.bonds_broken;
  return s;
}

std::vector<ConvergenceRecord> Simulation::take_convergence() { return std::exchange(convergence_, {}); }
std::vector<FractureRecord> Simulation::take_fractures() { return std::exchange(fractures_, {}); }

void write_stats_header(std::ostream& out) {
  out << kStatsSchema << '\n'
      << "frame,time,steps,retries,newton_iterations,pcg_iterations_total,grad_norm,max_unit_violation,"
         "inertia,bond_energy,self_contact_energy,external_energy,gravity_energy,kinetic_energy,"
         "max_displacement,bonds_broken,intact_bonds,components\n";
}

void write_stats_row(std::ostream& out, const FrameStats& s) {
  out << s.frame << ',' << fmt_double(s.time) << ',' << s.steps << ',' << s.retries << ',' << s.newton_iterations
      << ',' << s.pcg_iterations << ',' << fmt_double(s.grad_norm) << ',' << fmt_double(s.max_unit_violation) << ','
      << fmt_double(s.energy.inertia) << ',' << fmt_double(s.energy.bonds) << ','
      << fmt_double(s.energy.self_contact) << ',' << fmt_double(s.energy.external) << ','
      << fmt_double(s.energy.gravity) << ',' << fmt_double(s.kinetic) << ',' << fmt_double(s.max_displacement)
      << ',' << s.bonds_broken << ',' << s.intact_bonds << ',' << s.components << '\n';
}

void write_convergence_header(std::ostream& out) {
  out << kTraceSchema << '\n'
      << "frame,step,iteration,f,grad_norm,constraint_norm,pcg_iterations,pcg_residual,pcg_tolerance,step_length\n";
}

void write_convergence_rows(std::ostream& out, const std::vector<ConvergenceRecord>& rows) {
  for (const ConvergenceRecord& r : rows) {
    out << r.frame << ',' << r.step << ',' << r.it.iteration << ',' << fmt_double(r.it.f) << ','
        << fmt_double(r.it.grad_norm) << ',' << fmt_double(r.it.constraint_norm) << ',' << r.it.pcg_iterations
        << ',' << fmt_double(r.it.pcg_residual) << ',' << fmt_double(r.it.pcg_tolerance) << ','
        << fmt_double(r.it.step) << '\n';
  }
}

void write_fracture_header(std::ostream& out) {
  out << kFractureSchema << '\n' << "frame,step,bond,i,j,sigma,tau,sigma_c,tau_c,cause\n";
}

void write_fracture_rows(std::ostream& out, const std::vector<FractureRecord>& rows) {
  for (const FractureRecord& r : rows) {
    out << r.frame << ',' << r.step << ',' << r.bond << ',' << r.i << ',' << r.j << ',' << fmt_double(r.sigma)
        << ',' << fmt_double(r.tau) << ',' << fmt_double(r.sigma_c) << ',' << fmt_double(r.tau_c) << ','
        << (r.by_strain ? "strain" : "stress") << '\n';
  }
}

void write_frame_mesh(const std::filesystem::path& path, const Scene& scene) {
  const FragmentLabeling labels = label_components(scene.graph, scene.element_count());
  const SurfaceMesh surface = reconstruct_surface(scene.mesh, scene.graph, labels, scene.elements);
  std::ofstream out = open_output(path);
  write_obj(out, surface);
}

RunSummary run_simulation(const SceneConfig& config, const std::function<void(const FrameStats&)>& progress) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(config.output);
  Simulation sim(config);

  std::ofstream stats = open_output(config.output / "stats.csv");
  std::ofstream convergence = open_output(config.output / "convergence.csv");
  std::ofstream fractures = open_output(config.output / "fractures.csv");
  write_stats_header(stats);
  write_convergence_header(convergence);
  write_fracture_header(fractures);

  const auto mesh_path = [&](int frame) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.obj", frame);
    return config.output / name;
  };

  RunSummary summary;
  write_stats_row(stats, sim.snapshot());
  if (config.write_meshes) write_frame_mesh(mesh_path(0), sim.scene());
  for (int f = 1; f <= config.frames; ++f) {
    const FrameStats s = sim.advance_frame();
    write_stats_row(stats, s);
    write_convergence_rows(convergence, sim.take_convergence());
    write_fracture_rows(fractures, sim.take_fractures());
    if (config.write_meshes) write_frame_mesh(mesh_path(f), sim.scene());
    summary.frames = f;
    summary.steps += s.steps;
    summary.newton_iterations += s.newton_iterations;
    summary.retries += s.retries;
    summary.bonds_broken += s.bonds_broken;
    summary.max_unit_violation = std::max(summary.max_unit_violation, s.max_unit_violation);
    summary.max_displacement = std::max(summary.max_displacement, s.max_displacement);
    summary.pcg_iterations = s.pcg_iterations;
    if (progress) progress(s);
  }
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  double worst = 0.0;
  double mean = 0.0;
  for (int t = 0; t < static_cast<int>(sim.scene().mesh.tets.size()); ++t) {
    const double d = tet_inertia_discrepancy(sim.scene().mesh, t);
    worst = std::max(worst, std::abs(d));
    mean += std::abs(d);
  }
  if (!sim.scene().mesh.tets.empty()) mean /= static_cast<double>(sim.scene().mesh.tets.size());

  std::ofstream out = open_output(config.output / "summary.txt");
  out << "elements " << sim.scene().element_count() << '\n'
      << "bonds " << sim.scene().graph.bonds.size() << '\n'
      << "frames " << summary.frames << '\n'
      << "steps " << summary.steps << '\n'
      << "step_halvings " << summary.retries << '\n'
      << "newton_iterations " << summary.newton_iterations << '\n'
      << "pcg_iterations " << summary.pcg_iterations << '\n'
      << "bonds_broken " << summary.bonds_broken << '\n'
      << "intact_bonds " << sim.scene().graph.intact_count() << '\n'
      << "max_unit_violation " << fmt_double(summary.max_unit_violation) << '\n'
      << "max_displacement " << fmt_double(summary.max_displacement) << '\n'
      << "sphere_inertia_discrepancy_mean " << fmt_double(mean) << '\n'
      << "sphere_inertia_discrepancy_max " << fmt_double(worst) << '\n'
      << "wall_seconds " << fmt_double(summary.wall_seconds) << '\n';
  return summary;
}

}  // namespace bdem
