#include "bdem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "bdem/error.hpp"

namespace bdem {
namespace {

// Local vertex triples of the face opposite local vertex k.
constexpr std::array<std::array<int, 3>, 4> kFaceLocal = {{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

int TetMesh::interior_face_count() const {
  return static_cast<int>(std::count_if(faces.begin(), faces.end(),
                                        [](const Face& f) { return !f.boundary(); }));
}

int TetMesh::boundary_face_count() const {
  return static_cast<int>(faces.size()) - interior_face_count();
}

double TetMesh::total_volume() const {
  return std::accumulate(volumes.begin(), volumes.end(), 0.0);
}

double TetMesh::face_area(int face) const {
  const auto& v = faces[face].vertices;
  return triangle_area(vertices[v[0]], vertices[v[1]], vertices[v[2]]);
}

TetMesh TetMesh::from_arrays(std::vector<Vec3> verts, std::vector<std::array<int, 4>> tet_list) {
  TetMesh mesh;
  mesh.vertices = std::move(verts);
  mesh.tets = std::move(tet_list);
  const int nv = static_cast<int>(mesh.vertices.size());
  const int nt = mesh.tet_count();
  if (nt == 0) throw MeshError("tet mesh has no tetrahedra");

  mesh.volumes.resize(nt);
  mesh.centroids.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tet = mesh.tets[t];
    for (int k = 0; k < 4; ++k) {
      if (tet[k] < 0 || tet[k] >= nv) {
        throw MeshError("tet " + std::to_string(t) + " references vertex " + std::to_string(tet[k]) +
                        " out of range [0, " + std::to_string(nv) + ")");
      }
      for (int l = 0; l < k; ++l) {
        if (tet[l] == tet[k]) throw MeshError("tet " + std::to_string(t) + " repeats a vertex");
      }
    }
    const auto& x = mesh.vertices;
    mesh.volumes[t] = signed_volume(x[tet[0]], x[tet[1]], x[tet[2]], x[tet[3]]);
    mesh.centroids[t] = 0.25 * (x[tet[0]] + x[tet[1]] + x[tet[2]] + x[tet[3]]);
  }

  double mean = 0.0;
  for (double v : mesh.volumes) mean += std::abs(v);
  mean /= nt;
  std::vector<int> degenerate;
  for (int t = 0; t < nt; ++t) {
    if (std::abs(mesh.volumes[t]) < 1e-12 * mean) degenerate.push_back(t);
  }
  if (!degenerate.empty()) {
    std::string msg = "degenerate tets (volume below 1e-12 of mean):";
    for (std::size_t k = 0; k < std::min<std::size_t>(degenerate.size(), 20); ++k) {
      msg += " " + std::to_string(degenerate[k]);
    }
    if (degenerate.size() > 20) msg += " ...";
    throw MeshError(msg);
  }
  for (int t = 0; t < nt; ++t) {
    if (mesh.volumes[t] < 0.0) {
      throw MeshError("tet " + std::to_string(t) + " is inverted (negative signed volume)");
    }
  }

  struct Incidence {
    std::array<int, 3> key;
    int tet;
    int local;
  };
  std::vector<Incidence> inc;
  inc.reserve(static_cast<std::size_t>(nt) * 4);
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 4; ++k) {
      std::array<int, 3> key;
      for (int m = 0; m < 3; ++m) key[m] = mesh.tets[t][kFaceLocal[k][m]];
      std::sort(key.begin(), key.end());
      inc.push_back({key, t, k});
    }
  }
  std::sort(inc.begin(), inc.end(), [](const Incidence& a, const Incidence& b) {
    return a.key != b.key ? a.key < b.key : a.tet < b.tet;
  });

  mesh.tet_faces.assign(nt, {-1, -1, -1, -1});
  for (std::size_t s = 0; s < inc.size();) {
    std::size_t e = s;
    while (e < inc.size() && inc[e].key == inc[s].key) ++e;
    if (e - s > 2) {
      throw MeshError("non-manifold face (" + std::to_string(inc[s].key[0]) + ", " +
                      std::to_string(inc[s].key[1]) + ", " + std::to_string(inc[s].key[2]) +
                      ") shared by " + std::to_string(e - s) + " tets");
    }
    Face f;
    f.vertices = inc[s].key;
    f.tet_a = inc[s].tet;
    if (e - s == 2) {
      f.tet_b = inc[s + 1].tet;
      if (f.tet_b == f.tet_a) throw MeshError("tet " + std::to_string(f.tet_a) + " has a repeated face");
    }
    const int id = static_cast<int>(mesh.faces.size());
    for (std::size_t k = s; k < e; ++k) mesh.tet_faces[inc[k].tet][inc[k].local] = id;
    mesh.faces.push_back(f);
    s = e;
  }
  return mesh;
}

TetMesh read_tet_mesh(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return;
    }
    throw MeshError(std::string("unexpected end of tet mesh input, expected ") + what);
  };
  auto fail = [&](const std::string& msg) {
    throw MeshError("line " + std::to_string(line_no) + ": " + msg);
  };

  next_line("header");
  std::istringstream header(line);
  std::string tag;
  long nv = -1, nt = -1;
  if (!(header >> tag >> nv >> nt) || tag != "tetmesh" || nv < 0 || nt < 0) {
    fail("expected header 'tetmesh <n_vertices> <n_tets>'");
  }
  std::vector<Vec3> verts(nv);
  for (long k = 0; k < nv; ++k) {
    next_line("vertex line");
    std::istringstream ls(line);
    Vec3 x;
    std::string extra;
    if (!(ls >> tag >> x[0] >> x[1] >> x[2]) || tag != "v" || (ls >> extra)) {
      fail("expected 'v x y z'");
    }
    if (!x.allFinite()) fail("non-finite vertex coordinate");
    verts[k] = x;
  }
  std::vector<std::array<int, 4>> tets(nt);
  for (long k = 0; k < nt; ++k) {
    next_line("tet line");
    std::istringstream ls(line);
    std::array<long, 4> idx{};
    std::string extra;
    if (!(ls >> tag >> idx[0] >> idx[1] >> idx[2] >> idx[3]) || tag != "t" || (ls >> extra)) {
      fail("expected 't i0 i1 i2 i3'");
    }
    for (int m = 0; m < 4; ++m) {
      if (idx[m] < 0 || idx[m] >= nv) fail("vertex index " + std::to_string(idx[m]) + " out of range");
      tets[k][m] = static_cast<int>(idx[m]);
    }
  }
  return TetMesh::from_arrays(std::move(verts), std::move(tets));
}

TetMesh load_tet_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open tet mesh '" + path.string() + "'");
  return read_tet_mesh(in);
}

void write_tet_mesh(std::ostream& out, const TetMesh& mesh) {
  out << "tetmesh " << mesh.vertices.size() << ' ' << mesh.tets.size() << '\n';
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v[0], v[1], v[2]);
    out << buf;
  }
  for (const auto& t : mesh.tets) out << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

TetMesh make_box_mesh(int nx, int ny, int nz, double h, const Vec3& origin) {
  if (nx < 1 || ny < 1 || nz < 1 || !(h > 0.0)) throw MeshError("make_box_mesh: invalid dimensions");
  auto vid = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  std::vector<Vec3> verts;
  verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) verts.push_back(origin + h * Vec3(i, j, k));

  // Corner bits (dx, dy, dz). Even cells use the central tet {000, 110, 101, 011};
  // odd cells mirror x so shared face diagonals match.
  constexpr std::array<std::array<int, 4>, 5> kEven = {{{0b000, 0b110, 0b101, 0b011},
                                                        {0b100, 0b000, 0b110, 0b101},
                                                        {0b010, 0b000, 0b110, 0b011},
                                                        {0b001, 0b000, 0b101, 0b011},
                                                        {0b111, 0b110, 0b101, 0b011}}};
  std::vector<std::array<int, 4>> tets;
  tets.reserve(static_cast<std::size_t>(nx) * ny * nz * 5);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const bool odd = (i + j + k) % 2 == 1;
        for (const auto& pattern : kEven) {
          std::array<int, 4> t{};
          for (int m = 0; m < 4; ++m) {
            int dx = (pattern[m] >> 2) & 1;
            const int dy = (pattern[m] >> 1) & 1;
            const int dz = pattern[m] & 1;
            if (odd) dx = 1 - dx;
            t[m] = vid(i + dx, j + dy, k + dz);
          }
          if (signed_volume(verts[t[0]], verts[t[1]], verts[t[2]], verts[t[3]]) < 0.0) {
            std::swap(t[2], t[3]);
          }
          tets.push_back(t);
        }
      }
  return TetMesh::from_arrays(std::move(verts), std::move(tets));
}

int BondGraph::intact_count() const {
  return static_cast<int>(
      std::count_if(bonds.begin(), bonds.end(), [](const Bond& b) { return !b.state.broken(); }));
}

ElementsAndBonds build_elements_and_bonds(const TetMesh& mesh, const Material& material) {
  if (!(material.density > 0.0)) throw Error("material density must be positive");
  ElementsAndBonds out;
  const int nt = mesh.tet_count();
  out.elements.resize(nt);
  for (int t = 0; t < nt; ++t) {
    Element& e = out.elements[t];
    const double vol = mesh.volumes[t];
    e.mass = sphere_mass(material.density * vol, equivalent_radius(vol));
    e.state.p = mesh.centroids[t];
    e.rest_centroid = mesh.centroids[t];
  }

  out.graph.element_bonds.assign(nt, {});
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const TetMesh::Face& face = mesh.faces[f];
    if (face.boundary()) continue;
    Bond b;
    b.i = std::min(face.tet_a, face.tet_b);
    b.j = std::max(face.tet_a, face.tet_b);
    b.face = f;
    const Vec3 offset = mesh.centroids[b.j] - mesh.centroids[b.i];
    const double l0 = offset.norm();
    if (!(l0 > 0.0)) {
      throw MeshError("tets " + std::to_string(b.i) + " and " + std::to_string(b.j) +
                      " have coincident centroids");
    }
    const double r0 = std::sqrt(mesh.face_area(f) / std::numbers::pi);
    b.params = BondParams::make(material.youngs_modulus, material.shear_modulus, l0, r0,
                                material.tensile_strength, material.shear_strength);
    b.rest = BondRest::from_direction(offset / l0);
    out.graph.bonds.push_back(b);
  }
  std::sort(out.graph.bonds.begin(), out.graph.bonds.end(),
            [](const Bond& a, const Bond& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  for (int k = 0; k < static_cast<int>(out.graph.bonds.size()); ++k) {
    out.graph.element_bonds[out.graph.bonds[k].i].push_back(k);
    out.graph.element_bonds[out.graph.bonds[k].j].push_back(k);
  }

  // Contact radius: half the distance to the nearest other rest centroid, so
  // neighbours touch without overlapping at rest.
  std::vector<int> order(nt);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return mesh.centroids[a][0] != mesh.centroids[b][0] ? mesh.centroids[a][0] < mesh.centroids[b][0]
                                                        : a < b;
  });
  std::vector<double> nearest(nt, std::numeric_limits<double>::infinity());
  for (int a = 0; a < nt; ++a) {
    const int ea = order[a];
    const Vec3& ca = mesh.centroids[ea];
    for (int dir : {1, -1}) {
      for (int b = a + dir; b >= 0 && b < nt; b += dir) {
        const Vec3& cb = mesh.centroids[order[b]];
        if (std::abs(cb[0] - ca[0]) >= nearest[ea]) break;
        nearest[ea] = std::min(nearest[ea], (cb - ca).norm());
      }
    }
  }
  for (int t = 0; t < nt; ++t) {
    Element& e = out.elements[t];
    e.contact_radius = std::isfinite(nearest[t]) ? 0.5 * nearest[t] : e.mass.r;
  }
  return out;
}

double tet_inertia_discrepancy(const TetMesh& mesh, int tet) {
  const Vec3& c = mesh.centroids[tet];
  Mat3 cov = Mat3::Zero();
  for (int k = 0; k < 4; ++k) {
    const Vec3 d = mesh.vertices[mesh.tets[tet][k]] - c;
    cov += d * d.transpose();
  }
  const double vol = mesh.volumes[tet];
  cov *= vol / 20.0;
  // Mean principal moment per unit density: (2/3) tr(C).
  const double tet_mean = 2.0 / 3.0 * cov.trace();
  const double r = equivalent_radius(vol);
  const double sphere = 0.4 * vol * r * r;
  return (sphere - tet_mean) / tet_mean;
}

std::vector<bool> mark_surface_elements(const TetMesh& mesh, const BondGraph& graph) {
  std::vector<bool> flags(mesh.tet_count(), false);
  for (const TetMesh::Face& f : mesh.faces) {
    if (f.boundary()) flags[f.tet_a] = true;
  }
  for (const Bond& b : graph.bonds) {
    if (b.state.broken()) {
      flags[b.i] = true;
      flags[b.j] = true;
    }
  }
  return flags;
}

FragmentLabeling label_components(const BondGraph& graph, int element_count) {
  std::vector<int> parent(element_count);
  std::iota(parent.begin(), parent.end(), 0);
  for (const Bond& b : graph.bonds) {
    if (b.state.broken()) continue;
    const int ri = find_root(parent, b.i);
    const int rj = find_root(parent, b.j);
    // Smaller index becomes the root so the root is the smallest id.
    if (ri < rj) parent[rj] = ri;
    else if (rj < ri) parent[ri] = rj;
  }
  FragmentLabeling out;
  out.labels.resize(element_count);
  std::map<int, int> slot;
  for (int e = 0; e < element_count; ++e) {
    const int root = find_root(parent, e);
    out.labels[e] = root;
    auto [it, inserted] = slot.try_emplace(root, static_cast<int>(out.components.size()));
    if (inserted) out.components.emplace_back();
    out.components[it->second].push_back(e);
  }
  return out;
}

SurfaceMesh reconstruct_surface(const TetMesh& mesh, const BondGraph& graph,
                                const FragmentLabeling& labeling,
                                const std::vector<Element>& elements) {
  const int nt = mesh.tet_count();
  std::vector<bool> broken_face(mesh.faces.size(), false);
  for (const Bond& b : graph.bonds) {
    if (b.state.broken()) broken_face[b.face] = true;
  }

  struct Emit {
    int component;
    int tet;
    int local;
  };
  std::vector<Emit> emits;
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 4; ++k) {
      const int f = mesh.tet_faces[t][k];
      if (mesh.faces[f].boundary() || broken_face[f]) emits.push_back({labeling.labels[t], t, k});
    }
  }
  std::stable_sort(emits.begin(), emits.end(),
                   [](const Emit& a, const Emit& b) { return a.component < b.component; });

  SurfaceMesh out;
  std::vector<int> base(nt, -1);
  for (const Emit& em : emits) {
    const int t = em.tet;
    if (base[t] < 0) {
      base[t] = static_cast<int>(out.vertices.size());
      const ElementState& s = elements[t].state;
      const Vec3& c_rest = elements[t].rest_centroid;
      for (int m = 0; m < 4; ++m) {
        out.vertices.push_back(s.p + rotate_vec(s.q, mesh.vertices[mesh.tets[t][m]] - c_rest));
      }
    }
    const auto& loc = kFaceLocal[em.local];
    out.triangles.push_back({base[t] + loc[0], base[t] + loc[1], base[t] + loc[2]});
    out.triangle_component.push_back(em.component);
    out.triangle_face.push_back(mesh.tet_faces[t][em.local]);
    out.triangle_tet.push_back(t);
  }
  return out;
}

void write_obj(std::ostream& out, const SurfaceMesh& surface) {
  char buf[160];
  for (const Vec3& v : surface.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v[0], v[1], v[2]);
    out << buf;
  }
  int current = -1;
  for (std::size_t k = 0; k < surface.triangles.size(); ++k) {
    if (surface.triangle_component[k] != current) {
      current = surface.triangle_component[k];
      out << "g component_" << current << '\n';
    }
    const auto& t = surface.triangles[k];
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

}  // namespace bdem
