#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace bdem::acceptance {

struct Context {
  std::filesystem::path work_dir;
  std::filesystem::path scenes_dir;
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id = 0;
  std::string name;
  std::function<Outcome(const Context&)> run;
};

std::vector<Criterion> all_criteria();

}  // namespace bdem::acceptance
