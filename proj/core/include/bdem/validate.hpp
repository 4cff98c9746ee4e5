#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bdem/config.hpp"

namespace bdem {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // worst relative error (or violation) seen
  double tolerance = 0.0;
  int samples = 0;
  std::string detail;
};

/// Deliberate corruption of one analytic derivative, for negative controls.
enum class Fault { kNone, kStretchGradient, kShearHessian, kBendTwistGradient };

struct ValidateOptions {
  int samples = 100;
  std::uint64_t seed = 0;
  double fd_step = 1e-6;  // relative to the coordinate scale
  double gradient_tolerance = 1e-4;
  double hessian_tolerance = 1e-3;
  Fault fault = Fault::kNone;
};

/// Central-difference gradient and second-difference Hessian checks of the
/// stretch, shear, bend-twist, self-repulsion and external-repulsion
/// potentials on random configurations of the given material.
std::vector<CheckResult> check_derivatives(const Material& material, const ValidateOptions& options);

/// Unit-norm, nullspace and tangency invariants on random quaternions.
std::vector<CheckResult> check_manifold(const ValidateOptions& options);

/// Runs one implicit step of a tumbling 50-element beam with the reduced and
/// the projector linear systems. Passes when the iteration counts match and,
/// at every iterate of the reduced run, both systems give directions equal to
/// relative 1e-8.
CheckResult check_nullspace_equivalence(const Material& material, const ValidateOptions& options,
                                        PreconditionerKind preconditioner = PreconditionerKind::kCholesky);

std::vector<CheckResult> run_validation(const SceneConfig& config, const ValidateOptions& options);

/// One line per check: PASS/FAIL, name, worst error, tolerance, samples.
void print_report(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace bdem
