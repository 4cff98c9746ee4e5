#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bdem/simulation.hpp"

namespace bdem {
namespace {

namespace fs = std::filesystem;

SceneConfig small_beam(const std::string& builtin, int nx) {
  SceneConfig c = builtin_scene(builtin);
  c.box.nx = nx;
  for (PinRegion& p : c.pins) {
    if (p.lo.x() > 0.0) p.lo.x() = (nx - 1) * c.box.cell;
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bdem_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Simulation, ClampedElementsDoNotDrift) {
  SceneConfig c = small_beam("beam-drape", 6);
  c.frames = 5;
  Simulation sim(c);
  std::vector<Vec3> start;
  for (const PinnedMotion& pin : sim.scene().pins) start.push_back(sim.scene().elements[pin.element].state.p);
  for (int f = 0; f < c.frames; ++f) sim.advance_frame();
  ASSERT_FALSE(sim.scene().pins.empty());
  for (std::size_t k = 0; k < start.size(); ++k) {
    const Element& e = sim.scene().elements[sim.scene().pins[k].element];
    EXPECT_EQ(e.state.p, start[k]);
    EXPECT_EQ(e.state.v, Vec3::Zero());
  }
}

TEST(Simulation, FramesAdvanceByTheFrameInterval) {
  SceneConfig c = small_beam("beam-drape", 4);
  c.frames = 3;
  Simulation sim(c);
  for (int f = 1; f <= 3; ++f) {
    const FrameStats s = sim.advance_frame();
    EXPECT_EQ(s.frame, f);
    EXPECT_NEAR(s.time, f * c.steps_per_frame() * c.dt, 1e-15);
    EXPECT_GE(s.steps, 1);
  }
}

TEST(Simulation, StatsAuditBalancesBrokenBonds) {
  SceneConfig c = small_beam("beam-stretch", 6);
  c.material.tensile_strength = 5e4;
  c.material.shear_strength = 5e4;
  c.frames = 8;
  Simulation sim(c);
  const int initial = sim.scene().graph.intact_count();
  int broken = 0;
  std::vector<FractureRecord> records;
  for (int f = 0; f < c.frames; ++f) {
    const FrameStats s = sim.advance_frame();
    broken += s.bonds_broken;
    EXPECT_EQ(s.intact_bonds, initial - broken);
    EXPECT_GE(s.components, 1);
    for (FractureRecord& r : sim.take_fractures()) records.push_back(r);
  }
  EXPECT_EQ(static_cast<int>(records.size()), broken);
  for (const FractureRecord& r : records) EXPECT_TRUE(r.sigma > r.sigma_c || r.tau > r.tau_c);
}

TEST(Simulation, RunWritesArtifacts) {
  SceneConfig c = small_beam("beam-drape", 4);
  c.frames = 2;
  c.output = scratch("artifacts");
  const RunSummary s = run_simulation(c);
  EXPECT_EQ(s.frames, 2);
  for (const char* f : {"stats.csv", "convergence.csv", "fractures.csv", "summary.txt", "frame_00000.obj",
                        "frame_00002.obj"}) {
    EXPECT_TRUE(fs::exists(c.output / f)) << f;
  }
  std::ifstream stats(c.output / "stats.csv");
  std::string line;
  std::getline(stats, line);
  EXPECT_EQ(line, kStatsSchema);
  int rows = 0;
  std::getline(stats, line);  // column names
  while (std::getline(stats, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Simulation, SingleWorkerRunsAreByteIdentical) {
  SceneConfig c = small_beam("beam-twist", 5);
  c.frames = 3;
  c.workers = 1;
  c.output = scratch("det_a");
  run_simulation(c);
  const fs::path a = c.output;
  c.output = scratch("det_b");
  run_simulation(c);
  for (const char* f : {"stats.csv", "convergence.csv", "frame_00003.obj"}) {
    EXPECT_EQ(slurp(a / f), slurp(c.output / f)) << f;
  }
}

TEST(Simulation, WorkerCountDoesNotChangeResults) {
  SceneConfig c = small_beam("beam-twist", 12);
  c.frames = 2;
  Simulation one(c);
  c.workers = 3;
  Simulation three(c);
  for (int f = 0; f < c.frames; ++f) {
    one.advance_frame();
    three.advance_frame();
  }
  EXPECT_EQ(one.scene().configuration(), three.scene().configuration());
}

}  // namespace
}  // namespace bdem
