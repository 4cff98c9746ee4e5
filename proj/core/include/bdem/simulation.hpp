#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bdem/config.hpp"

namespace bdem {

/// One row of stats.csv.
struct FrameStats {
  int frame = 0;
  double time = 0.0;
  int steps = 0;    // solved steps, including retry substeps
  int retries = 0;  // step halvings
  int newton_iterations = 0;
  int pcg_iterations = 0;  // cumulative over the run
  double grad_norm = 0.0;  // at exit of the last step
  double max_unit_violation = 0.0;
  EnergyBreakdown energy;
  double kinetic = 0.0;
  double max_displacement = 0.0;  // from the rest centroid
  int bonds_broken = 0;
  int intact_bonds = 0;
  int components = 0;
};

/// One broken bond with the stresses that broke it.
struct FractureRecord {
  int frame = 0;
  int step = 0;
  int bond = 0;
  int i = 0;
  int j = 0;
  double sigma = 0.0;
  double tau = 0.0;
  double sigma_c = 0.0;
  double tau_c = 0.0;
  bool by_strain = false;
};

/// One Newton iteration of one step.
struct ConvergenceRecord {
  int frame = 0;
  int step = 0;
  IterationRecord it;
};

/// Drives a scene frame by frame. A step that fails to converge is retried as
/// two half steps, recursively up to max_retries halvings.
class Simulation {
 public:
  explicit Simulation(SceneConfig config);

  const SceneConfig& config() const { return config_; }
  const Scene& scene() const { return scene_; }
  Scene& scene() { return scene_; }
  int frame() const { return frame_; }
  int total_steps() const { return step_; }

  /// Advances one output frame. Throws SolverError naming the frame when a
  /// step cannot be completed.
  FrameStats advance_frame();

  /// Records of everything since the last call.
  std::vector<ConvergenceRecord> take_convergence();
  std::vector<FractureRecord> take_fractures();

  FrameStats snapshot() const;

  /// Called after every accepted step, including retry substeps.
  using StepObserver = std::function<void(const Scene&, const StepReport&)>;
  void set_step_observer(StepObserver observer) { observer_ = std::move(observer); }

 private:
  void advance(double dt, int depth, FrameStats& stats);

  SceneConfig config_;
  Scene scene_;
  StableStepOptions step_options_;
  int frame_ = 0;
  int step_ = 0;
  long long pcg_total_ = 0;
  std::vector<ConvergenceRecord> convergence_;
  std::vector<FractureRecord> fractures_;
  StepObserver observer_;
};

inline constexpr const char* kStatsSchema = "# bdem-stats v1";
inline constexpr const char* kTraceSchema = "# bdem-trace v1";
inline constexpr const char* kFractureSchema = "# bdem-fractures v1";

void write_stats_header(std::ostream& out);
void write_stats_row(std::ostream& out, const FrameStats& s);
void write_convergence_header(std::ostream& out);
void write_convergence_rows(std::ostream& out, const std::vector<ConvergenceRecord>& rows);
void write_fracture_header(std::ostream& out);
void write_fracture_rows(std::ostream& out, const std::vector<FractureRecord>& rows);

struct RunSummary {
  int frames = 0;
  int steps = 0;
  long long newton_iterations = 0;
  long long pcg_iterations = 0;
  int retries = 0;
  int bonds_broken = 0;
  double max_unit_violation = 0.0;
  double max_displacement = 0.0;
  double wall_seconds = 0.0;
};

/// Runs the configured frames and writes frame_%05d.obj, stats.csv,
/// convergence.csv, fractures.csv and summary.txt into config.output.
/// `progress` is called after each frame.
RunSummary run_simulation(const SceneConfig& config,
                          const std::function<void(const FrameStats&)>& progress = {});

/// Writes the current surface of the scene as an OBJ file.
void write_frame_mesh(const std::filesystem::path& path, const Scene& scene);

}  // namespace bdem
