#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bdem/contact.hpp"
#include "bdem/geometry.hpp"
#include "bdem/integrator.hpp"

namespace bdem {

/// Elements whose rest centroid lies in [lo, hi] are pinned and follow the
/// given rigid motion.
struct PinRegion {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  AngVel angular_velocity = Vec3::Zero();
  Vec3 pivot = Vec3::Zero();
};

struct BoxSpec {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double cell = 0.0;
  Vec3 origin = Vec3::Zero();

  bool enabled() const { return nx > 0; }
};

struct SceneConfig {
  // [scene]
  std::string builtin;
  std::filesystem::path mesh;
  BoxSpec box;
  Vec3 rotation_axis = Vec3::UnitX();
  double rotation_degrees = 0.0;  // rigid rotation of the mesh about its centroid

  // [material]
  Material material;
  std::optional<double> poisson_ratio;
  bool fracture = true;

  // [plasticity]
  bool plasticity = false;
  PlasticParams plastic;

  // [time]
  double dt = 1.0 / 60.0;
  int frames = 60;
  double fps = 60.0;
  double slow_motion = 1.0;  // output frame every slow_motion / fps seconds
  int max_retries = 4;

  // [physics]
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  Vec3 initial_velocity = Vec3::Zero();
  AngVel initial_angular_velocity = Vec3::Zero();  // rigid spin about the center of mass

  // [contact], [collider], [pin]
  ContactSettings contact;
  std::vector<Collider> colliders;
  std::vector<PinRegion> pins;

  // [solver]
  SolverMethod method = SolverMethod::kSecondOrder;
  double tolerance = 1e-4;  // relative to the scene force scale
  int max_iterations = 100;
  PreconditionerKind preconditioner = PreconditionerKind::kBlockJacobi;
  LinearPath path = LinearPath::kReduced;
  int pcg_max_iterations = 2000;
  double penalty = 1e3;  // relative to the largest rotational inertia term

  // [output]
  std::filesystem::path output = "out";
  bool write_meshes = true;

  // [run]
  int workers = 1;
  std::uint64_t seed = 0;

  double frame_interval() const { return slow_motion / fps; }
  int steps_per_frame() const;
};

/// Parses the key = value format with [section] headers. Unknown sections or
/// keys, malformed values and invalid parameters raise ConfigError with the
/// offending line and key. Relative mesh paths resolve against base_dir.
SceneConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
SceneConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const SceneConfig& config);

/// Checks parameter ranges; throws ConfigError naming the key.
void validate_config(const SceneConfig& config);

std::vector<std::string> builtin_scene_names();
/// Desk-scale defaults of a bundled scene; throws ConfigError for unknown names.
SceneConfig builtin_scene(const std::string& name);

/// Generates or loads the mesh, builds elements and bonds and applies pins,
/// colliders and initial velocities.
Scene build_scene(const SceneConfig& config);

/// sqrt(n) m_mean r_mean / dt^2, the force needed to move every element by
/// its radius in one step. Termination uses tolerance times this scale.
double force_scale(const Scene& scene, double dt);

SolverOptions solver_options(const SceneConfig& config, const Scene& scene, double dt);

}  // namespace bdem
