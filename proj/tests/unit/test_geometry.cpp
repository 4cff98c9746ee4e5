#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include "bdem/error.hpp"
#include "bdem/geometry.hpp"

namespace bdem {
namespace {

TEST(Geometry, BoxMeshCounts) {
  const TetMesh m = make_box_mesh(3, 2, 2, 0.5);
  EXPECT_EQ(m.tet_count(), 5 * 12);
  EXPECT_NEAR(m.total_volume(), 3 * 2 * 2 * 0.125, 1e-14);
  // Every tet has four faces: 4 T = 2 interior + boundary.
  EXPECT_EQ(4 * m.tet_count(), 2 * m.interior_face_count() + m.boundary_face_count());
  // The surface of a 3x2x2 box has 2 (6 + 6 + 4) squares of two triangles each.
  EXPECT_EQ(m.boundary_face_count(), 2 * 2 * (6 + 6 + 4));
}

TEST(Geometry, TetRoundTrip) {
  const TetMesh m = make_box_mesh(2, 1, 1, 0.1, Vec3(1, 2, 3));
  std::stringstream s;
  write_tet_mesh(s, m);
  const TetMesh r = read_tet_mesh(s);
  ASSERT_EQ(r.tet_count(), m.tet_count());
  EXPECT_EQ(r.tets, m.tets);
  for (std::size_t k = 0; k < m.vertices.size(); ++k) EXPECT_EQ(r.vertices[k], m.vertices[k]);
}

TEST(Geometry, RejectsBadMeshes) {
  const std::vector<Vec3> v{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  EXPECT_THROW(TetMesh::from_arrays(v, {{0, 2, 1, 3}}), MeshError);  // inverted
  EXPECT_THROW(TetMesh::from_arrays(v, {{0, 1, 2, 7}}), MeshError);  // bad index
  EXPECT_THROW(TetMesh::from_arrays(v, {{0, 1, 1, 3}}), MeshError);  // repeated vertex
  std::istringstream truncated("tetmesh 4 1\nv 0 0 0\n");
  EXPECT_THROW(read_tet_mesh(truncated), MeshError);
}

TEST(Geometry, OneElementPerTetOneBondPerInteriorFace) {
  const TetMesh m = make_box_mesh(2, 2, 1, 0.1);
  const ElementsAndBonds eb = build_elements_and_bonds(m, Material{});
  EXPECT_EQ(static_cast<int>(eb.elements.size()), m.tet_count());
  EXPECT_EQ(static_cast<int>(eb.graph.bonds.size()), m.interior_face_count());
  double mass = 0.0;
  for (const Element& e : eb.elements) mass += e.mass.m;
  EXPECT_NEAR(mass, 1000.0 * m.total_volume(), 1e-12);
  for (const Bond& b : eb.graph.bonds) {
    EXPECT_LT(b.i, b.j);
    EXPECT_NEAR(b.params.l0, (m.centroids[b.j] - m.centroids[b.i]).norm(), 1e-15);
  }
}

std::vector<int> bfs_labels(const BondGraph& g, int n) {
  std::vector<int> label(n, -1);
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::queue<int> q;
    q.push(s);
    label[s] = s;
    while (!q.empty()) {
      const int e = q.front();
      q.pop();
      for (int k : g.element_bonds[e]) {
        const Bond& b = g.bonds[k];
        if (b.state.broken()) continue;
        const int o = b.i == e ? b.j : b.i;
        if (label[o] < 0) {
          label[o] = s;
          q.push(o);
        }
      }
    }
  }
  return label;
}

TEST(Geometry, ComponentsMatchGraphTraversal) {
  const TetMesh m = make_box_mesh(4, 1, 1, 0.1);
  ElementsAndBonds eb = build_elements_and_bonds(m, Material{});
  // Cut every bond crossing x = 0.2.
  for (Bond& b : eb.graph.bonds) {
    if ((m.centroids[b.i].x() - 0.2) * (m.centroids[b.j].x() - 0.2) < 0.0) b.state.status = BondStatus::kBroken;
  }
  const FragmentLabeling l = label_components(eb.graph, m.tet_count());
  EXPECT_EQ(l.component_count(), 2);
  EXPECT_EQ(l.labels, bfs_labels(eb.graph, m.tet_count()));
}

TEST(Geometry, ReconstructionDuplicatesFractureFaces) {
  const TetMesh m = make_box_mesh(2, 2, 1, 0.1);
  ElementsAndBonds eb = build_elements_and_bonds(m, Material{});
  int broken = 0;
  for (std::size_t k = 0; k < eb.graph.bonds.size(); k += 3) {
    eb.graph.bonds[k].state.status = BondStatus::kBroken;
    ++broken;
  }
  const FragmentLabeling l = label_components(eb.graph, m.tet_count());
  const SurfaceMesh s = reconstruct_surface(m, eb.graph, l, eb.elements);
  EXPECT_EQ(static_cast<int>(s.triangles.size()), m.boundary_face_count() + 2 * broken);
  std::map<int, int> uses;
  for (int f : s.triangle_face) ++uses[f];
  for (const auto& [f, n] : uses) EXPECT_EQ(n, m.faces[f].boundary() ? 1 : 2);
  // At rest the reconstructed vertices coincide with the mesh vertices.
  for (std::size_t t = 0; t < s.triangles.size(); ++t) {
    for (int v : s.triangles[t]) {
      double nearest = 1e300;
      for (int mv : m.faces[s.triangle_face[t]].vertices) {
        nearest = std::min(nearest, (s.vertices[v] - m.vertices[mv]).norm());
      }
      EXPECT_LT(nearest, 1e-14);
    }
  }
}

TEST(Geometry, SurfaceElementsIncludeFractureSides) {
  const TetMesh m = make_box_mesh(3, 3, 3, 0.1);
  ElementsAndBonds eb = build_elements_and_bonds(m, Material{});
  const std::vector<bool> before = mark_surface_elements(m, eb.graph);
  const int interior = static_cast<int>(std::count(before.begin(), before.end(), false));
  ASSERT_GT(interior, 0);
  const int e = static_cast<int>(std::find(before.begin(), before.end(), false) - before.begin());
  eb.graph.bonds[eb.graph.element_bonds[e][0]].state.status = BondStatus::kBroken;
  EXPECT_TRUE(mark_surface_elements(m, eb.graph)[e]);
}

TEST(Geometry, InertiaDiscrepancyIsBounded) {
  const TetMesh m = make_box_mesh(1, 1, 1, 1.0);
  for (int t = 0; t < m.tet_count(); ++t) {
    const double d = tet_inertia_discrepancy(m, t);
    // The sphere underestimates the inertia of its tet.
    EXPECT_LT(d, 0.0);
    EXPECT_GT(d, -0.5);
  }
}

}  // namespace
}  // namespace bdem
