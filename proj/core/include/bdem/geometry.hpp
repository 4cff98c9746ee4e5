#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "bdem/bonds.hpp"
#include "bdem/elements.hpp"

namespace bdem {

/// Validated tetrahedral mesh with face adjacency.
struct TetMesh {
  struct Face {
    std::array<int, 3> vertices{};  // sorted ascending
    int tet_a = -1;                 // lower tet index
    int tet_b = -1;                 // -1 for boundary faces
    bool boundary() const { return tet_b < 0; }
  };

  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<double> volumes;
  std::vector<Vec3> centroids;
  std::vector<Face> faces;                    // sorted by vertex triple
  std::vector<std::array<int, 4>> tet_faces;  // face index opposite local vertex k

  int tet_count() const { return static_cast<int>(tets.size()); }
  int interior_face_count() const;
  int boundary_face_count() const;
  double total_volume() const;
  double face_area(int face) const;

  /// Validates the input and builds the adjacency.
  static TetMesh from_arrays(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets);
};

/// Reads "tetmesh <nv> <nt>", nv "v x y z" lines and nt "t i0 i1 i2 i3" lines (0-based).
TetMesh read_tet_mesh(std::istream& in);
TetMesh load_tet_mesh(const std::filesystem::path& path);
void write_tet_mesh(std::ostream& out, const TetMesh& mesh);

/// Box of nx*ny*nz cubes of edge h, five tets per cube with alternating parity.
TetMesh make_box_mesh(int nx, int ny, int nz, double h, const Vec3& origin = Vec3::Zero());

struct Material {
  double density = 1000.0;
  double youngs_modulus = 1e7;
  double shear_modulus = 1e7 / 2.6;
  double tensile_strength = 1e300;
  double shear_strength = 1e300;
};

struct BondGraph {
  std::vector<Bond> bonds;                      // sorted by (i, j)
  std::vector<std::vector<int>> element_bonds;  // bond indices per element

  int intact_count() const;
};

struct ElementsAndBonds {
  std::vector<Element> elements;
  BondGraph graph;
};

/// One sphere element per tet, one bond per interior face.
ElementsAndBonds build_elements_and_bonds(const TetMesh& mesh, const Material& material);

/// Relative difference between the sphere inertia (2/5) m r^2 and the mean
/// principal moment of the tet it stands in for.
double tet_inertia_discrepancy(const TetMesh& mesh, int tet);

/// Elements with a boundary face or an incident broken bond.
std::vector<bool> mark_surface_elements(const TetMesh& mesh, const BondGraph& graph);

struct FragmentLabeling {
  std::vector<int> labels;                  // smallest element id of each component
  std::vector<std::vector<int>> components; // ordered by label

  int component_count() const { return static_cast<int>(components.size()); }
};

/// Connected components over intact (or weakened) bonds.
FragmentLabeling label_components(const BondGraph& graph, int element_count);

struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;  // 0-based, counter-clockwise seen from outside
  std::vector<int> triangle_component;        // component label per triangle
  std::vector<int> triangle_face;             // source mesh face per triangle
  std::vector<int> triangle_tet;              // owning tet per triangle
};

/// Boundary faces plus both sides of every broken-bond face, with each tet moved
/// rigidly by its element: v' = p + q ⊙ (v_rest - c_rest).
SurfaceMesh reconstruct_surface(const TetMesh& mesh, const BondGraph& graph,
                                const FragmentLabeling& labeling,
                                const std::vector<Element>& elements);

/// Text triangle mesh: "v" lines, "g component_<id>" groups, 1-based "f" lines.
void write_obj(std::ostream& out, const SurfaceMesh& surface);

}  // namespace bdem
