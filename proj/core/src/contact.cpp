#include "bdem/contact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace bdem {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Index of the face the point is closest to when inside the box.
int box_inner_axis(const BoxCollider& b, const Vec3& p, double& dist) {
  const Vec3 c = 0.5 * (b.lo + b.hi);
  const Vec3 h = 0.5 * (b.hi - b.lo);
  const Vec3 d = (p - c).cwiseAbs() - h;
  int k = 0;
  dist = d.maxCoeff(&k);
  return k;
}

Vec3 opposing_projection(const Vec3& delta, const Vec3& current) {
  const double speed = current.norm();
  if (speed == 0.0) return Vec3::Zero();
  const Vec3 dir = current / speed;
  const double along = delta.dot(dir);
  if (along >= 0.0) return Vec3::Zero();
  return -std::min(-along, speed) * dir;
}

}  // namespace

Collider::Collider(Shape shape) : shape_(std::move(shape)) {
  if (auto* h = std::get_if<HalfSpace>(&shape_)) h->normal.normalize();
}

double Collider::distance(const Vec3& p) const {
  return std::visit(
      Overloaded{
          [&](const HalfSpace& h) { return h.normal.dot(p) - h.offset; },
          [&](const SphereCollider& s) { return (p - s.center).norm() - s.radius; },
          [&](const BoxCollider& b) {
            const Vec3 c = 0.5 * (b.lo + b.hi);
            const Vec3 d = (p - c).cwiseAbs() - 0.5 * (b.hi - b.lo);
            return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
          },
      },
      shape_);
}

Vec3 Collider::gradient(const Vec3& p) const {
  return std::visit(
      Overloaded{
          [&](const HalfSpace& h) -> Vec3 { return h.normal; },
          [&](const SphereCollider& s) -> Vec3 {
            const Vec3 r = p - s.center;
            const double n = r.norm();
            return n > 0.0 ? Vec3(r / n) : Vec3(Vec3::UnitZ());
          },
          [&](const BoxCollider& b) -> Vec3 {
            const Vec3 c = 0.5 * (b.lo + b.hi);
            const Vec3 rel = p - c;
            const Vec3 d = rel.cwiseAbs() - 0.5 * (b.hi - b.lo);
            if (d.maxCoeff() > 0.0) {
              Vec3 out = d.cwiseMax(0.0);
              for (int k = 0; k < 3; ++k) out[k] = std::copysign(out[k], rel[k]);
              return out.normalized();
            }
            double dist = 0.0;
            const int k = box_inner_axis(b, p, dist);
            return std::copysign(1.0, rel[k]) * Vec3::Unit(k);
          },
      },
      shape_);
}

Mat3 Collider::hessian(const Vec3& p) const {
  if (const auto* s = std::get_if<SphereCollider>(&shape_)) {
    const Vec3 r = p - s->center;
    const double n = r.norm();
    if (n == 0.0) return Mat3::Zero();
    const Vec3 e = r / n;
    return (Mat3::Identity() - e * e.transpose()) / n;
  }
  // Planar pieces everywhere a penetration energy is nonzero.
  return Mat3::Zero();
}

std::vector<ContactPair> broad_phase(std::span<const Vec3> positions, std::span<const double> radii,
                                     double cell_size, double margin) {
  std::vector<ContactPair> pairs;
  const auto n = static_cast<int>(positions.size());
  if (n < 2) return pairs;
  const double r_max = *std::max_element(radii.begin(), radii.end());
  const double cell = std::max(cell_size, 2.0 * r_max + margin);

  auto key = [](std::int64_t x, std::int64_t y, std::int64_t z) {
    constexpr std::int64_t kOff = 1 << 20;
    return ((x + kOff) << 42) | ((y + kOff) << 21) | (z + kOff);
  };
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  std::vector<Eigen::Vector3i> cells(n);
  for (int i = 0; i < n; ++i) {
    cells[i] = (positions[i] / cell).array().floor().cast<int>();
    grid[key(cells[i][0], cells[i][1], cells[i][2])].push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find(key(cells[i][0] + dx, cells[i][1] + dy, cells[i][2] + dz));
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j <= i) continue;
            const Vec3 u = positions[j] - positions[i];
            const double dist = u.norm();
            const double reach = radii[i] + radii[j];
            if (dist >= reach + margin) continue;
            ContactPair c;
            c.i = i;
            c.j = j;
            c.depth = reach - dist;
            c.normal = dist > 0.0 ? Vec3(u / dist) : Vec3(Vec3::UnitX());
            pairs.push_back(c);
          }
        }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const ContactPair& a, const ContactPair& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  return pairs;
}

ContactEval self_repulsion_potential(const Vec3& p_i, const Vec3& p_j, double r_i, double r_j,
                                     double k_ec, bool with_hessian) {
  ContactEval out;
  const Vec3 u = p_j - p_i;
  double len = u.norm();
  Vec3 n;
  if (len < 1e-14 * (r_i + r_j)) {
    n = Vec3::UnitX();
    len = 0.0;
    out.degenerate = true;
  } else {
    n = u / len;
  }
  const double d = r_i + r_j - len;
  if (d <= 0.0) return out;

  out.energy = 0.5 * k_ec * d * d;
  // d(d)/dp_j = -n
  out.grad.head<3>() = k_ec * d * n;
  out.grad.tail<3>() = -k_ec * d * n;
  if (with_hessian) {
    const Mat3 nn = n * n.transpose();
    Mat3 h = k_ec * nn;
    if (len > 0.0) h -= k_ec * (d / len) * (Mat3::Identity() - nn);
    out.hess.topLeftCorner<3, 3>() = h;
    out.hess.bottomRightCorner<3, 3>() = h;
    out.hess.topRightCorner<3, 3>() = -h;
    out.hess.bottomLeftCorner<3, 3>() = -h;
  }
  return out;
}

ExternalEval external_repulsion_potential(const Vec3& p, const Collider& collider, double k_c,
                                          bool with_hessian) {
  ExternalEval out;
  const double g = collider.distance(p);
  if (g >= 0.0) return out;
  const Vec3 dg = collider.gradient(p);
  out.energy = 0.5 * k_c * g * g;
  out.grad = k_c * g * dg;
  if (with_hessian) out.hess = k_c * (dg * dg.transpose() + g * collider.hessian(p));
  return out;
}

FrictionCorrection friction_post_step(const FrictionInput& in, double dt, double mu_s, double mu_r) {
  FrictionCorrection out;
  const Vec3 n = in.normal.normalized();

  const Vec3 vt = in.v_rel - in.v_rel.dot(n) * n;
  const double vt_norm = vt.norm();
  if (vt_norm > 0.0 && mu_s > 0.0) {
    const double ratio = std::min(1.0, mu_s * in.force * dt / (in.mass * vt_norm));
    out.dv = opposing_projection(-ratio * vt, in.v);
  }

  const double w_norm = in.w_rel.norm();
  if (w_norm > 0.0 && mu_r > 0.0) {
    const double r3 = in.radius * in.radius * in.radius;
    const double ratio = std::min(1.0, mu_r * in.force * r3 * dt / (in.inertia * w_norm));
    out.dw = opposing_projection(-ratio * in.w_rel, in.w);
  }
  return out;
}

}  // namespace bdem
