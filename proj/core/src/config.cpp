#include "bdem/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bdem/error.hpp"

namespace bdem {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Entry {
  std::string section;
  int section_index = 0;  // ordinal of the section occurrence
  std::string key;
  std::string value;
  int line = 0;
};

class ValueReader {
 public:
  ValueReader(const Entry& e) : e_(e) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(e_.section + "." + e_.key + ": " + what + " (got '" + e_.value + "')", e_.line,
                      e_.key);
  }

  double number(const std::string& word) const {
    double v = 0.0;
    const char* end = word.data() + word.size();
    auto [ptr, ec] = std::from_chars(word.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  double real() const {
    const auto w = split_words(e_.value);
    if (w.size() != 1) fail("expected one number");
    return number(w[0]);
  }

  int integer() const {
    const auto w = split_words(e_.value);
    int v = 0;
    if (w.size() != 1) fail("expected an integer");
    const char* end = w[0].data() + w[0].size();
    auto [ptr, ec] = std::from_chars(w[0].data(), end, v);
    if (ec != std::errc() || ptr != end) fail("expected an integer");
    return v;
  }

  Vec3 vec3() const {
    const auto w = split_words(e_.value);
    if (w.size() != 3) fail("expected three numbers");
    return {number(w[0]), number(w[1]), number(w[2])};
  }

  bool boolean() const {
    const std::string v = trim(e_.value);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail("expected true or false");
  }

  std::string word() const {
    const auto w = split_words(e_.value);
    if (w.size() != 1) fail("expected a single word");
    return w[0];
  }

  const std::string& raw() const { return e_.value; }

 private:
  const Entry& e_;
};

struct ColliderSpec {
  std::string type;
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  int line = 0;

  Collider build() const {
    if (type == "half-space") {
      if (normal.norm() == 0.0) throw ConfigError("collider.normal must be nonzero", line, "normal");
      return Collider(HalfSpace{normal.normalized(), offset});
    }
    if (type == "sphere") {
      if (!(radius > 0.0)) throw ConfigError("collider.radius must be positive", line, "radius");
      return Collider(SphereCollider{center, radius});
    }
    if (type == "box") {
      if (!(hi.array() > lo.array()).all()) throw ConfigError("collider box needs hi > lo", line, "hi");
      return Collider(BoxCollider{lo, hi});
    }
    throw ConfigError("collider.type must be half-space, sphere or box", line, "type");
  }
};

using Setter = std::function<void(SceneConfig&, const ValueReader&)>;
using SectionTable = std::map<std::string, Setter>;

const std::map<std::string, SectionTable>& key_table() {
  static const std::map<std::string, SectionTable> table = {
      {"scene",
       {
           {"builtin", [](SceneConfig&, const ValueReader&) {}},  // applied before all other keys
           {"mesh", [](SceneConfig& c, const ValueReader& r) { c.mesh = trim(r.raw()); }},
           {"box",
            [](SceneConfig& c, const ValueReader& r) {
              const auto w = split_words(r.raw());
              if (w.size() != 4) r.fail("expected nx ny nz cell");
              c.box.nx = static_cast<int>(r.number(w[0]));
              c.box.ny = static_cast<int>(r.number(w[1]));
              c.box.nz = static_cast<int>(r.number(w[2]));
              c.box.cell = r.number(w[3]);
              if (c.box.nx < 1 || c.box.ny < 1 || c.box.nz < 1 || !(c.box.cell > 0.0))
                r.fail("box needs positive counts and cell size");
            }},
           {"origin", [](SceneConfig& c, const ValueReader& r) { c.box.origin = r.vec3(); }},
           {"rotation_axis", [](SceneConfig& c, const ValueReader& r) { c.rotation_axis = r.vec3(); }},
           {"rotation_degrees", [](SceneConfig& c, const ValueReader& r) { c.rotation_degrees = r.real(); }},
       }},
      {"material",
       {
           {"density", [](SceneConfig& c, const ValueReader& r) { c.material.density = r.real(); }},
           {"youngs_modulus", [](SceneConfig& c, const ValueReader& r) { c.material.youngs_modulus = r.real(); }},
           {"shear_modulus",
            [](SceneConfig& c, const ValueReader& r) {
              c.material.shear_modulus = r.real();
              c.poisson_ratio.reset();
            }},
           {"poisson_ratio", [](SceneConfig& c, const ValueReader& r) { c.poisson_ratio = r.real(); }},
           {"tensile_strength", [](SceneConfig& c, const ValueReader& r) { c.material.tensile_strength = r.real(); }},
           {"shear_strength", [](SceneConfig& c, const ValueReader& r) { c.material.shear_strength = r.real(); }},
           {"fracture", [](SceneConfig& c, const ValueReader& r) { c.fracture = r.boolean(); }},
       }},
      {"plasticity",
       {
           {"enabled", [](SceneConfig& c, const ValueReader& r) { c.plasticity = r.boolean(); }},
           {"fracture_strain", [](SceneConfig& c, const ValueReader& r) { c.plastic.eps_c = r.real(); }},
           {"elastic_strain", [](SceneConfig& c, const ValueReader& r) { c.plastic.eps_ce = r.real(); }},
           {"alpha", [](SceneConfig& c, const ValueReader& r) { c.plastic.alpha = r.real(); }},
           {"exponent", [](SceneConfig& c, const ValueReader& r) { c.plastic.a = r.real(); }},
       }},
      {"time",
       {
           {"dt", [](SceneConfig& c, const ValueReader& r) { c.dt = r.real(); }},
           {"frames", [](SceneConfig& c, const ValueReader& r) { c.frames = r.integer(); }},
           {"fps", [](SceneConfig& c, const ValueReader& r) { c.fps = r.real(); }},
           {"slow_motion", [](SceneConfig& c, const ValueReader& r) { c.slow_motion = r.real(); }},
           {"max_retries", [](SceneConfig& c, const ValueReader& r) { c.max_retries = r.integer(); }},
       }},
      {"physics",
       {
           {"gravity", [](SceneConfig& c, const ValueReader& r) { c.gravity = r.vec3(); }},
           {"initial_velocity", [](SceneConfig& c, const ValueReader& r) { c.initial_velocity = r.vec3(); }},
           {"initial_angular_velocity",
            [](SceneConfig& c, const ValueReader& r) { c.initial_angular_velocity = r.vec3(); }},
       }},
      {"contact",
       {
           {"k_c", [](SceneConfig& c, const ValueReader& r) { c.contact.k_c = r.real(); }},
           {"k_ec", [](SceneConfig& c, const ValueReader& r) { c.contact.k_ec = r.real(); }},
           {"mu_s", [](SceneConfig& c, const ValueReader& r) { c.contact.mu_s = r.real(); }},
           {"mu_r", [](SceneConfig& c, const ValueReader& r) { c.contact.mu_r = r.real(); }},
           {"self_contact", [](SceneConfig& c, const ValueReader& r) { c.contact.self_contact = r.boolean(); }},
           {"margin_factor", [](SceneConfig& c, const ValueReader& r) { c.contact.margin_factor = r.real(); }},
       }},
      {"pin",
       {
           {"lo", [](SceneConfig& c, const ValueReader& r) { c.pins.back().lo = r.vec3(); }},
           {"hi", [](SceneConfig& c, const ValueReader& r) { c.pins.back().hi = r.vec3(); }},
           {"velocity", [](SceneConfig& c, const ValueReader& r) { c.pins.back().velocity = r.vec3(); }},
           {"angular_velocity",
            [](SceneConfig& c, const ValueReader& r) { c.pins.back().angular_velocity = r.vec3(); }},
           {"pivot", [](SceneConfig& c, const ValueReader& r) { c.pins.back().pivot = r.vec3(); }},
       }},
      {"solver",
       {
           {"method",
            [](SceneConfig& c, const ValueReader& r) {
              try {
                c.method = parse_solver_method(r.word());
              } catch (const Error&) {
                r.fail("expected first-order, second-order, penalty, lagrange or augmented");
              }
            }},
           {"tolerance", [](SceneConfig& c, const ValueReader& r) { c.tolerance = r.real(); }},
           {"max_iterations", [](SceneConfig& c, const ValueReader& r) { c.max_iterations = r.integer(); }},
           {"preconditioner",
            [](SceneConfig& c, const ValueReader& r) {
              try {
                c.preconditioner = parse_preconditioner(r.word());
              } catch (const Error&) {
                r.fail("expected block-jacobi, incomplete-cholesky or cholesky");
              }
            }},
           {"path",
            [](SceneConfig& c, const ValueReader& r) {
              const std::string w = r.word();
              if (w == "reduced") {
                c.path = LinearPath::kReduced;
              } else if (w == "projector") {
                c.path = LinearPath::kProjector;
              } else {
                r.fail("expected reduced or projector");
              }
            }},
           {"pcg_max_iterations", [](SceneConfig& c, const ValueReader& r) { c.pcg_max_iterations = r.integer(); }},
           {"penalty", [](SceneConfig& c, const ValueReader& r) { c.penalty = r.real(); }},
       }},
      {"output",
       {
           {"directory", [](SceneConfig& c, const ValueReader& r) { c.output = trim(r.raw()); }},
           {"meshes", [](SceneConfig& c, const ValueReader& r) { c.write_meshes = r.boolean(); }},
       }},
      {"run",
       {
           {"workers", [](SceneConfig& c, const ValueReader& r) { c.workers = r.integer(); }},
           {"seed",
            [](SceneConfig& c, const ValueReader& r) {
              const int s = r.integer();
              if (s < 0) r.fail("seed must be non-negative");
              c.seed = static_cast<std::uint64_t>(s);
            }},
       }},
  };
  return table;
}

const std::map<std::string, std::function<void(ColliderSpec&, const ValueReader&)>>& collider_keys() {
  static const std::map<std::string, std::function<void(ColliderSpec&, const ValueReader&)>> keys = {
      {"type", [](ColliderSpec& s, const ValueReader& r) { s.type = r.word(); }},
      {"normal", [](ColliderSpec& s, const ValueReader& r) { s.normal = r.vec3(); }},
      {"offset", [](ColliderSpec& s, const ValueReader& r) { s.offset = r.real(); }},
      {"center", [](ColliderSpec& s, const ValueReader& r) { s.center = r.vec3(); }},
      {"radius", [](ColliderSpec& s, const ValueReader& r) { s.radius = r.real(); }},
      {"lo", [](ColliderSpec& s, const ValueReader& r) { s.lo = r.vec3(); }},
      {"hi", [](ColliderSpec& s, const ValueReader& r) { s.hi = r.vec3(); }},
  };
  return keys;
}

std::vector<Entry> tokenize(std::istream& in) {
  std::vector<Entry> entries;
  std::string section;
  std::map<std::string, int> counts;
  int index = 0;
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("unterminated section header '" + text + "'", line);
      section = trim(text.substr(1, text.size() - 2));
      if (section != "collider" && !key_table().contains(section)) {
        throw ConfigError("unknown section [" + section + "]", line, section);
      }
      index = counts[section]++;
      entries.push_back({section, index, "", "", line});  // section marker
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line);
    if (section.empty()) throw ConfigError("key '" + key + "' outside of any section", line, key);
    entries.push_back({section, index, key, value, line});
  }
  return entries;
}

void format_vec(std::ostream& out, const Vec3& v) { out << v[0] << ' ' << v[1] << ' ' << v[2]; }

}  // namespace

int SceneConfig::steps_per_frame() const {
  return std::max(1, static_cast<int>(std::lround(frame_interval() / dt)));
}

SceneConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  const std::vector<Entry> entries = tokenize(in);

  SceneConfig config;
  for (const Entry& e : entries) {
    if (e.section == "scene" && e.key == "builtin") config = builtin_scene(ValueReader(e).word());
  }
  const auto has_section = [&](const std::string& name) {
    return std::any_of(entries.begin(), entries.end(), [&](const Entry& e) { return e.section == name; });
  };
  if (has_section("collider")) config.colliders.clear();
  if (has_section("pin")) config.pins.clear();
  // A mesh source given in the file replaces the builtin's.
  for (const Entry& e : entries) {
    if (e.section != "scene") continue;
    if (e.key == "mesh") config.box = BoxSpec{};
    if (e.key == "box") config.mesh.clear();
  }

  std::optional<ColliderSpec> collider;
  const auto flush_collider = [&] {
    if (collider) {
      if (collider->type.empty()) throw ConfigError("collider section without type", collider->line, "type");
      config.colliders.push_back(collider->build());
      collider.reset();
    }
  };

  for (const Entry& e : entries) {
    const ValueReader reader(e);
    if (e.key.empty()) {
      flush_collider();
      if (e.section == "collider") {
        collider = ColliderSpec{};
        collider->line = e.line;
      }
      if (e.section == "pin") config.pins.emplace_back();
      continue;
    }
    if (e.section == "collider") {
      const auto it = collider_keys().find(e.key);
      if (it == collider_keys().end()) throw ConfigError("unknown key 'collider." + e.key + "'", e.line, e.key);
      it->second(*collider, reader);
      continue;
    }
    const auto& section = key_table().at(e.section);
    const auto it = section.find(e.key);
    if (it == section.end()) {
      throw ConfigError("unknown key '" + e.section + "." + e.key + "'", e.line, e.key);
    }
    it->second(config, reader);
  }
  flush_collider();

  if (config.poisson_ratio) {
    config.material.shear_modulus = config.material.youngs_modulus / (2.0 * (1.0 + *config.poisson_ratio));
  }
  if (!config.mesh.empty() && config.mesh.is_relative() && !base_dir.empty()) {
    config.mesh = base_dir / config.mesh;
  }

  // Range checks report the line of the offending key when it came from the file.
  try {
    validate_config(config);
  } catch (const ConfigError& err) {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      if (it->key == err.key()) throw ConfigError(err.what(), it->line, err.key());
    }
    throw;
  }
  return config;
}

SceneConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

void validate_config(const SceneConfig& c) {
  const auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + " " + what, 0, key);
  };
  require(c.box.enabled() || !c.mesh.empty(), "mesh", "or box must be given");
  require(c.material.density > 0.0, "density", "must be positive");
  require(c.material.youngs_modulus > 0.0, "youngs_modulus", "must be positive");
  if (c.poisson_ratio) {
    require(*c.poisson_ratio > -1.0 && *c.poisson_ratio < 0.5, "poisson_ratio", "must lie in (-1, 0.5)");
  }
  require(c.material.shear_modulus > 0.0, "shear_modulus", "must be positive");
  require(c.material.tensile_strength > 0.0, "tensile_strength", "must be positive");
  require(c.material.shear_strength > 0.0, "shear_strength", "must be positive");
  if (c.plasticity) {
    require(c.plastic.eps_ce > 0.0, "elastic_strain", "must be positive");
    require(c.plastic.eps_c > c.plastic.eps_ce, "fracture_strain", "must exceed elastic_strain");
    require(c.plastic.alpha >= 0.0 && c.plastic.alpha <= 1.0, "alpha", "must lie in [0, 1]");
    require(c.plastic.a > 0.0, "exponent", "must be positive");
  }
  require(c.dt > 0.0, "dt", "must be positive");
  require(c.frames >= 0, "frames", "must be non-negative");
  require(c.fps > 0.0, "fps", "must be positive");
  require(c.slow_motion > 0.0, "slow_motion", "must be positive");
  require(c.max_retries >= 0, "max_retries", "must be non-negative");
  require(c.contact.k_c >= 0.0, "k_c", "must be non-negative");
  require(c.contact.k_ec >= 0.0, "k_ec", "must be non-negative");
  require(c.contact.mu_s >= 0.0, "mu_s", "must be non-negative");
  require(c.contact.mu_r >= 0.0, "mu_r", "must be non-negative");
  require(c.contact.margin_factor >= 0.0, "margin_factor", "must be non-negative");
  require(c.tolerance > 0.0, "tolerance", "must be positive");
  require(c.max_iterations > 0, "max_iterations", "must be positive");
  require(c.pcg_max_iterations > 0, "pcg_max_iterations", "must be positive");
  require(c.penalty > 0.0, "penalty", "must be positive");
  require(c.workers >= 1, "workers", "must be at least 1");
  require(c.rotation_axis.norm() > 0.0 || c.rotation_degrees == 0.0, "rotation_axis", "must be nonzero");
}

void write_config(std::ostream& out, const SceneConfig& c) {
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "[scene]\n";
  if (!c.mesh.empty()) out << "mesh = " << c.mesh.string() << '\n';
  if (c.box.enabled()) {
    out << "box = " << c.box.nx << ' ' << c.box.ny << ' ' << c.box.nz << ' ' << c.box.cell << '\n';
    out << "origin = ";
    format_vec(out, c.box.origin);
    out << '\n';
  }
  if (c.rotation_degrees != 0.0) {
    out << "rotation_axis = ";
    format_vec(out, c.rotation_axis);
    out << "\nrotation_degrees = " << c.rotation_degrees << '\n';
  }
  out << "\n[material]\n"
      << "density = " << c.material.density << '\n'
      << "youngs_modulus = " << c.material.youngs_modulus << '\n'
      << "shear_modulus = " << c.material.shear_modulus << '\n'
      << "tensile_strength = " << c.material.tensile_strength << '\n'
      << "shear_strength = " << c.material.shear_strength << '\n'
      << "fracture = " << (c.fracture ? "true" : "false") << '\n';
  out << "\n[plasticity]\n"
      << "enabled = " << (c.plasticity ? "true" : "false") << '\n'
      << "fracture_strain = " << c.plastic.eps_c << '\n'
      << "elastic_strain = " << c.plastic.eps_ce << '\n'
      << "alpha = " << c.plastic.alpha << '\n'
      << "exponent = " << c.plastic.a << '\n';
  out << "\n[time]\n"
      << "dt = " << c.dt << '\n'
      << "frames = " << c.frames << '\n'
      << "fps = " << c.fps << '\n'
      << "slow_motion = " << c.slow_motion << '\n'
      << "max_retries = " << c.max_retries << '\n';
  out << "\n[physics]\ngravity = ";
  format_vec(out, c.gravity);
  out << "\ninitial_velocity = ";
  format_vec(out, c.initial_velocity);
  out << "\ninitial_angular_velocity = ";
  format_vec(out, c.initial_angular_velocity);
  out << "\n\n[contact]\n"
      << "k_c = " << c.contact.k_c << '\n'
      << "k_ec = " << c.contact.k_ec << '\n'
      << "mu_s = " << c.contact.mu_s << '\n'
      << "mu_r = " << c.contact.mu_r << '\n'
      << "self_contact = " << (c.contact.self_contact ? "true" : "false") << '\n'
      << "margin_factor = " << c.contact.margin_factor << '\n';
  for (const Collider& col : c.colliders) {
    out << "\n[collider]\n";
    std::visit(
        [&](const auto& shape) {
          using T = std::decay_t<decltype(shape)>;
          if constexpr (std::is_same_v<T, HalfSpace>) {
            out << "type = half-space\nnormal = ";
            format_vec(out, shape.normal);
            out << "\noffset = " << shape.offset << '\n';
          } else if constexpr (std::is_same_v<T, SphereCollider>) {
            out << "type = sphere\ncenter = ";
            format_vec(out, shape.center);
            out << "\nradius = " << shape.radius << '\n';
          } else {
            out << "type = box\nlo = ";
            format_vec(out, shape.lo);
            out << "\nhi = ";
            format_vec(out, shape.hi);
            out << '\n';
          }
        },
        col.shape());
  }
  for (const PinRegion& pin : c.pins) {
    out << "\n[pin]\nlo = ";
    format_vec(out, pin.lo);
    out << "\nhi = ";
    format_vec(out, pin.hi);
    out << "\nvelocity = ";
    format_vec(out, pin.velocity);
    out << "\nangular_velocity = ";
    format_vec(out, pin.angular_velocity);
    out << "\npivot = ";
    format_vec(out, pin.pivot);
    out << '\n';
  }
  out << "\n[solver]\n"
      << "method = " << to_string(c.method) << '\n'
      << "tolerance = " << c.tolerance << '\n'
      << "max_iterations = " << c.max_iterations << '\n'
      << "preconditioner = " << to_string(c.preconditioner) << '\n'
      << "path = " << (c.path == LinearPath::kReduced ? "reduced" : "projector") << '\n'
      << "pcg_max_iterations = " << c.pcg_max_iterations << '\n'
      << "penalty = " << c.penalty << '\n';
  out << "\n[output]\n"
      << "directory = " << c.output.string() << '\n'
      << "meshes = " << (c.write_meshes ? "true" : "false") << '\n';
  out << "\n[run]\n"
      << "workers = " << c.workers << '\n'
      << "seed = " << c.seed << '\n';
  out.flags(old_flags);
  out.precision(old_precision);
}

std::vector<std::string> builtin_scene_names() {
  return {"beam-stretch", "beam-twist", "beam-drape", "drop-fracture"};
}

SceneConfig builtin_scene(const std::string& name) {
  SceneConfig c;
  c.builtin = name;
  if (name == "beam-stretch" || name == "beam-twist" || name == "beam-drape") {
    // 2.0 x 0.32 x 0.16 m, 1000 elements, long axis on x through the origin.
    constexpr double cell = 0.08;
    constexpr double length = 25 * cell;
    c.box = BoxSpec{25, 4, 2, cell, Vec3(0.0, -2.0 * cell, -cell)};
    c.material.density = 1000.0;
    c.poisson_ratio = 0.3;
    c.material.youngs_modulus = 1e7;
    c.dt = 1.0 / 60.0;
    c.frames = 60;
    c.contact.self_contact = false;
    c.pins.push_back({Vec3(-1.0, -1.0, -1.0), Vec3(cell, 1.0, 1.0), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
    if (name == "beam-stretch") {
      c.gravity = Vec3::Zero();
      c.pins.push_back(
          {Vec3(length - cell, -1.0, -1.0), Vec3(length + 1.0, 1.0, 1.0), Vec3(0.05, 0.0, 0.0), Vec3::Zero(), Vec3::Zero()});
    } else if (name == "beam-twist") {
      c.gravity = Vec3::Zero();
      c.pins.push_back({Vec3(length - cell, -1.0, -1.0), Vec3(length + 1.0, 1.0, 1.0), Vec3::Zero(),
                        Vec3(std::numbers::pi / 2.0, 0.0, 0.0), Vec3::Zero()});
    } else {
      c.material.youngs_modulus = 1e9;
      c.dt = 0.016;
      c.frames = 240;
      c.preconditioner = PreconditionerKind::kCholesky;
    }
    c.material.shear_modulus = c.material.youngs_modulus / (2.0 * (1.0 + *c.poisson_ratio));
    return c;
  }
  if (name == "drop-fracture") {
    // 0.48 x 0.48 x 0.04 m ceramic plate, tilted onto one corner, 720 elements.
    c.box = BoxSpec{12, 12, 1, 0.04, Vec3(-0.24, -0.24, 0.1)};
    c.rotation_axis = Vec3(1.0, 1.0, 0.0);
    c.rotation_degrees = 10.0;
    c.material.density = 2400.0;
    c.material.youngs_modulus = 1e9;
    c.poisson_ratio = 0.25;
    c.material.shear_modulus = c.material.youngs_modulus / (2.0 * (1.0 + *c.poisson_ratio));
    c.material.tensile_strength = 1.5e6;
    c.material.shear_strength = 1.5e6;
    c.dt = 0.002;
    c.slow_motion = 0.125;
    c.frames = 30;
    c.initial_velocity = Vec3(0.0, 0.0, -4.0);
    c.contact.k_c = 1e7;
    c.contact.k_ec = 1e7;
    c.contact.mu_s = 0.3;
    c.contact.mu_r = 0.01;
    c.colliders.emplace_back(HalfSpace{Vec3::UnitZ(), 0.0});
    c.preconditioner = PreconditionerKind::kCholesky;
    return c;
  }
  throw ConfigError("unknown built-in scene '" + name + "'", 0, "builtin");
}

namespace {

TetMesh make_mesh(const SceneConfig& c) {
  TetMesh mesh = c.box.enabled() ? make_box_mesh(c.box.nx, c.box.ny, c.box.nz, c.box.cell, c.box.origin)
                                 : load_tet_mesh(c.mesh);
  if (c.rotation_degrees == 0.0) return mesh;
  Vec3 center = Vec3::Zero();
  for (const Vec3& v : mesh.vertices) center += v;
  center /= static_cast<double>(mesh.vertices.size());
  const Mat3 rot = to_rotation_matrix(from_axis_angle(c.rotation_axis.normalized(),
                                                      c.rotation_degrees * std::numbers::pi / 180.0));
  std::vector<Vec3> vertices = mesh.vertices;
  for (Vec3& v : vertices) v = center + rot * (v - center);
  return TetMesh::from_arrays(std::move(vertices), mesh.tets);
}

}  // namespace

Scene build_scene(const SceneConfig& c) {
  validate_config(c);
  Scene scene;
  scene.mesh = make_mesh(c);
  auto built = build_elements_and_bonds(scene.mesh, c.material);
  scene.elements = std::move(built.elements);
  scene.graph = std::move(built.graph);
  scene.gravity = c.gravity;
  scene.colliders = c.colliders;
  scene.contact = c.contact;
  scene.enabled.self_contact = c.contact.self_contact;
  scene.fracture = c.fracture;
  scene.plasticity = c.plasticity;
  scene.plastic = c.plastic;
  scene.workers = c.workers;

  // Initial motion is rigid about the center of mass: v = v0 + w x (p - c).
  Vec3 center = Vec3::Zero();
  double mass = 0.0;
  for (const Element& el : scene.elements) {
    center += el.mass.m * el.state.p;
    mass += el.mass.m;
  }
  if (mass > 0.0) center /= mass;
  for (Element& el : scene.elements) {
    el.state.v = c.initial_velocity + c.initial_angular_velocity.cross(el.state.p - center);
    el.state.qdot = quat_rate(el.state.q, c.initial_angular_velocity);
  }
  for (int e = 0; e < scene.element_count(); ++e) {
    const Vec3& p = scene.elements[e].rest_centroid;
    for (const PinRegion& region : c.pins) {
      if ((p.array() < region.lo.array()).any() || (p.array() > region.hi.array()).any()) continue;
      scene.elements[e].pinned = true;
      scene.pins.push_back({e, scene.elements[e].state.p, scene.elements[e].state.q, region.pivot,
                            region.velocity, region.angular_velocity});
      break;
    }
  }
  scene.apply_pins(0.0);
  scene.surface = mark_surface_elements(scene.mesh, scene.graph);
  return scene;
}

double force_scale(const Scene& scene, double dt) {
  const int n = scene.element_count();
  if (n == 0) return 1.0;
  double m = 0.0;
  double r = 0.0;
  for (const Element& el : scene.elements) {
    m += el.mass.m;
    r += el.mass.r;
  }
  return std::sqrt(static_cast<double>(n)) * (m / n) * (r / n) / (dt * dt);
}

SolverOptions solver_options(const SceneConfig& c, const Scene& scene, double dt) {
  SolverOptions o;
  o.tolerance = c.tolerance * force_scale(scene, dt);
  o.max_iterations = c.max_iterations;
  o.path = c.path;
  o.preconditioner = c.preconditioner;
  o.pcg_max_iterations = c.pcg_max_iterations;
  double inertia = 0.0;
  for (const Element& el : scene.elements) inertia = std::max(inertia, el.mass.rotational());
  o.penalty = c.penalty * inertia / (dt * dt);
  return o;
}

}  // namespace bdem
