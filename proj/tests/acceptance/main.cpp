#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <exception>
#include <set>

#include "criteria.hpp"

#ifndef BDEM_SCENES_DIR
#define BDEM_SCENES_DIR "scenes"
#endif

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite: one PASS/FAIL line per criterion"};
  bdem::acceptance::Context ctx;
  ctx.work_dir = "acceptance_work";
  ctx.scenes_dir = BDEM_SCENES_DIR;
  std::vector<int> only;
  std::vector<int> expect_fail;
  app.add_option("--work-dir", ctx.work_dir, "Scratch directory for scene outputs");
  app.add_option("--scenes", ctx.scenes_dir, "Directory with the bundled scene files");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--expect-fail", expect_fail, "Criteria whose failure does not affect the exit code");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> excused(expect_fail.begin(), expect_fail.end());
  std::filesystem::create_directories(ctx.work_dir);

  int unexpected = 0;
  for (const auto& c : bdem::acceptance::all_criteria()) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    bdem::acceptance::Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool excuse = excused.contains(c.id);
    std::printf("%s criterion %2d  %-28s %7.1fs  %s%s\n", out.passed ? "PASS" : "FAIL", c.id, c.name.c_str(), seconds,
                out.detail.c_str(), !out.passed && excuse ? "  [known shortfall]" : "");
    std::fflush(stdout);
    if (!out.passed && !excuse) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
