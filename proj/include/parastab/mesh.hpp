#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace parastab {

using Vector = Eigen::VectorXd;

/// Conforming triangulation of the unit square.
///
/// Vertices of a refined mesh keep the indices of their parent mesh; edge
/// midpoints are appended after them, so nested P1 spaces embed exactly.
struct TriMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;
  Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;  // CCW vertex triples
  int level = 0;
  // For level > 0: triangle -> index of its parent triangle.
  std::vector<int> parent_triangle;
  // Number of vertices inherited from the parent mesh (all of them, verbatim).
  int inherited_vertex_count = 0;
  // For each appended vertex: the parent-edge endpoints it bisects.
  std::vector<std::array<int, 2>> midpoint_of;

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int triangle_count() const { return static_cast<int>(triangles.rows()); }
};

/// Signed area of triangle k (positive for CCW orientation).
double triangle_area(const TriMesh& mesh, int k);

/// Per-triangle areas as a vector indexed by triangle.
Vector cell_areas(const TriMesh& mesh);

/// Uniform n x n grid of squares, each split along its SW-NE diagonal.
/// Throws std::invalid_argument for n <= 0.
TriMesh build_structured_mesh(int n);

/// Regular (red) refinement: every triangle splits into 4 congruent children
/// via edge midpoints. Parent vertices keep their indices.
TriMesh refine(const TriMesh& mesh);

/// Mesh sanity check used by tests: positive areas, unit total area,
/// conformity (interior edges shared by exactly two triangles).
bool mesh_is_valid(const TriMesh& mesh, std::string* why = nullptr);

/// Plain-text dump (debug): vertex lines, then triangle lines.
std::string mesh_to_text(const TriMesh& mesh);

struct Rect {
  double x_lo, x_hi, y_lo, y_hi;
  double area() const { return (x_hi - x_lo) * (y_hi - y_lo); }
};

enum class RegionRole { actuator, sensor };

/// Family of axis-aligned patches (actuator or sensor supports).
struct RegionFamily {
  std::vector<Rect> rectangles;
  RegionRole role = RegionRole::actuator;
  int order = 0;  // 2*order^2 rectangles
};

/// Diagonal/anti-diagonal patch layout: the unit square is partitioned into
/// order x order cells; each cell carries two squares of side 1/(4*order),
/// centered at the cell-relative points (1/4,1/4) and (3/4,3/4) for
/// actuators, (3/4,1/4) and (1/4,3/4) for sensors.
std::pair<RegionFamily, RegionFamily> build_regions(int actuator_order,
                                                    int sensor_order);

/// True iff every rectangle is an exact union of mesh triangles.
bool check_alignment(const TriMesh& mesh, const RegionFamily& regions);

/// Triangle indices covered by each rectangle. Throws std::invalid_argument
/// if the family does not align with the mesh.
std::vector<std::vector<int>> region_cells(const TriMesh& mesh,
                                           const RegionFamily& regions);

}  // namespace parastab
