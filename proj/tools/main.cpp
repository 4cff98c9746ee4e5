#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "bdem/compare.hpp"
#include "bdem/config.hpp"
#include "bdem/error.hpp"
#include "bdem/simulation.hpp"
#include "bdem/validate.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<int> frames;
  std::optional<double> dt;
  std::optional<std::string> solver;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> output;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--frames", o.frames, "Number of output frames")->check(CLI::NonNegativeNumber);
  cmd->add_option("--dt", o.dt, "Time step in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--solver", o.solver, "first-order | second-order | penalty | lagrange | augmented");
  cmd->add_option("--workers", o.workers, "Worker threads for assembly")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed for randomized checks");
  cmd->add_option("--output", o.output, "Output directory");
}

// A path to a config file, or the name of a built-in scene.
bdem::SceneConfig load(const std::string& source, const Overrides& o) {
  bdem::SceneConfig c = fs::exists(source) ? bdem::load_config(source) : bdem::builtin_scene(source);
  if (o.frames) c.frames = *o.frames;
  if (o.dt) c.dt = *o.dt;
  if (o.solver) c.method = bdem::parse_solver_method(*o.solver);
  if (o.workers) c.workers = *o.workers;
  if (o.seed) c.seed = *o.seed;
  if (o.output) c.output = *o.output;
  bdem::validate_config(c);
  return c;
}

std::ofstream open_or_throw(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw bdem::Error("cannot write " + path.string());
  return out;
}

int cmd_run(const std::string& source, const Overrides& o, bool quiet) {
  const bdem::SceneConfig c = load(source, o);
  const bdem::RunSummary s = bdem::run_simulation(c, [&](const bdem::FrameStats& f) {
    if (quiet) return;
    std::printf("frame %4d  t=%.4f  steps=%d  newton=%d  |grad|=%.3e  broken=%d\n", f.frame, f.time, f.steps,
                f.newton_iterations, f.grad_norm, f.bonds_broken);
    std::fflush(stdout);
  });
  std::printf("%d frames, %d steps, %lld newton, %lld pcg, %d retries, %d bonds broken, %.2f s -> %s\n", s.frames,
              s.steps, s.newton_iterations, s.pcg_iterations, s.retries, s.bonds_broken, s.wall_seconds,
              c.output.string().c_str());
  return 0;
}

int cmd_compare(const std::string& source, const Overrides& o, int max_iterations) {
  const bdem::SceneConfig c = load(source, o);
  const bdem::OptimizerComparison cmp = bdem::compare_optimizers(c, max_iterations);
  fs::create_directories(c.output);
  {
    std::ofstream csv = open_or_throw(c.output / "convergence.csv");
    bdem::write_comparison_csv(csv, cmp);
  }
  {
    std::ofstream txt = open_or_throw(c.output / "ordering.txt");
    bdem::write_ordering_summary(txt, cmp);
  }
  bdem::write_ordering_summary(std::cout, cmp);
  return 0;
}

int cmd_validate(const std::string& source, const Overrides& o, bdem::ValidateOptions options) {
  const bdem::SceneConfig c = load(source, o);
  if (o.seed) options.seed = *o.seed;
  const auto results = bdem::run_validation(c, options);
  bdem::print_report(std::cout, results);
  for (const bdem::CheckResult& r : results) {
    if (!r.passed) return 1;
  }
  return 0;
}

int cmd_scene(const std::string& name, const fs::path& dir) {
  bdem::SceneConfig c = bdem::builtin_scene(name);
  const bdem::Scene scene = bdem::build_scene(c);
  fs::create_directories(dir);
  const fs::path tet = dir / (name + ".tet");
  {
    std::ofstream out = open_or_throw(tet);
    bdem::write_tet_mesh(out, scene.mesh);
  }
  // The written mesh is already rotated into place.
  c.builtin.clear();
  c.box = {};
  c.mesh = tet.filename();
  c.rotation_degrees = 0.0;
  c.output = fs::path("out") / name;
  const fs::path cfg = dir / (name + ".cfg");
  {
    std::ofstream out = open_or_throw(cfg);
    bdem::write_config(out, c);
  }
  std::printf("wrote %s and %s (%d elements)\n", cfg.string().c_str(), tet.string().c_str(),
              static_cast<int>(scene.elements.size()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit bonded discrete element simulator"};
  app.require_subcommand(1);

  std::string source;
  Overrides overrides;
  bool quiet = false;
  CLI::App* run = app.add_subcommand("run", "Simulate a scene and write meshes and statistics");
  run->add_option("config", source, "Config file or built-in scene name")->required();
  run->add_flag("-q,--quiet", quiet, "Only print the summary");
  add_overrides(run, overrides);

  int max_iterations = 3000;
  CLI::App* compare = app.add_subcommand("compare-optimizers", "Solve one step with every optimizer");
  compare->add_option("config", source, "Config file or built-in scene name")->required();
  compare->add_option("--max-iterations", max_iterations, "Iteration cap per method")->check(CLI::PositiveNumber);
  add_overrides(compare, overrides);

  bdem::ValidateOptions vopts;
  const std::map<std::string, bdem::Fault> faults{{"none", bdem::Fault::kNone},
                                                   {"stretch-gradient", bdem::Fault::kStretchGradient},
                                                   {"shear-hessian", bdem::Fault::kShearHessian},
                                                   {"bend-twist-gradient", bdem::Fault::kBendTwistGradient}};
  CLI::App* validate = app.add_subcommand("validate", "Derivative, manifold and linear-system checks");
  validate->add_option("config", source, "Config file or built-in scene name")->default_val("beam-stretch");
  validate->add_option("--samples", vopts.samples, "Random states per potential")->check(CLI::PositiveNumber);
  validate->add_option("--inject-fault", vopts.fault, "Corrupt one analytic derivative")
      ->transform(CLI::CheckedTransformer(faults, CLI::ignore_case));
  add_overrides(validate, overrides);

  std::string scene_name;
  fs::path scene_dir = ".";
  bool list = false;
  CLI::App* scene = app.add_subcommand("scene", "Write a built-in scene as .cfg and .tet");
  scene->add_option("name", scene_name, "Built-in scene name");
  scene->add_option("--out", scene_dir, "Destination directory");
  scene->add_flag("--list", list, "List built-in scenes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(source, overrides, quiet);
    if (*compare) return cmd_compare(source, overrides, max_iterations);
    if (*validate) return cmd_validate(source, overrides, vopts);
    if (*scene) {
      if (list || scene_name.empty()) {
        for (const std::string& n : bdem::builtin_scene_names()) std::printf("%s\n", n.c_str());
        return list ? 0 : 2;
      }
      return cmd_scene(scene_name, scene_dir);
    }
  } catch (const bdem::ConfigError& e) {
    std::fprintf(stderr, "config error: %s%s%s\n", e.what(), e.key().empty() ? "" : " [key: ",
                 e.key().empty() ? "" : (e.key() + "]").c_str());
    return 2;
  } catch (const bdem::SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
