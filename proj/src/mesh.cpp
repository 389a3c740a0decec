#include "parastab/mesh.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace parastab {

double triangle_area(const TriMesh& mesh, int k) {
  const auto t = mesh.triangles.row(k);
  const auto a = mesh.vertices.row(t(0));
  const auto b = mesh.vertices.row(t(1));
  const auto c = mesh.vertices.row(t(2));
  return 0.5 * ((b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0)));
}

Vector cell_areas(const TriMesh& mesh) {
  Vector areas(mesh.triangle_count());
  for (int k = 0; k < mesh.triangle_count(); ++k) areas(k) = triangle_area(mesh, k);
  return areas;
}

TriMesh build_structured_mesh(int n) {
  if (n <= 0) throw std::invalid_argument("build_structured_mesh: n must be >= 1");
  TriMesh mesh;
  const int nv = (n + 1) * (n + 1);
  mesh.vertices.resize(nv, 2);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const int v = j * (n + 1) + i;
      mesh.vertices(v, 0) = static_cast<double>(i) / n;
      mesh.vertices(v, 1) = static_cast<double>(j) / n;
    }
  mesh.triangles.resize(2 * n * n, 3);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int sw = j * (n + 1) + i;
      const int se = sw + 1;
      const int nw = sw + (n + 1);
      const int ne = nw + 1;
      mesh.triangles.row(k++) << sw, se, ne;  // lower-right half
      mesh.triangles.row(k++) << sw, ne, nw;  // upper-left half
    }
  mesh.level = 0;
  mesh.inherited_vertex_count = 0;
  return mesh;
}

TriMesh refine(const TriMesh& mesh) {
  TriMesh fine;
  fine.level = mesh.level + 1;
  fine.inherited_vertex_count = mesh.vertex_count();

  const int coarse_nv = mesh.vertex_count();
  std::vector<std::array<double, 2>> verts(coarse_nv);
  for (int v = 0; v < coarse_nv; ++v) verts[v] = {mesh.vertices(v, 0), mesh.vertices(v, 1)};

  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(verts.size());
    verts.push_back({0.5 * (verts[a][0] + verts[b][0]), 0.5 * (verts[a][1] + verts[b][1])});
    fine.midpoint_of.push_back({key.first, key.second});
    midpoint.emplace(key, idx);
    return idx;
  };

  fine.triangles.resize(4 * mesh.triangle_count(), 3);
  fine.parent_triangle.resize(4 * mesh.triangle_count());
  int k = 0;
  for (int p = 0; p < mesh.triangle_count(); ++p) {
    const int a = mesh.triangles(p, 0), b = mesh.triangles(p, 1), c = mesh.triangles(p, 2);
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    const std::array<std::array<int, 3>, 4> children = {
        {{a, ab, ca}, {ab, b, bc}, {ca, bc, c}, {ab, bc, ca}}};
    for (const auto& ch : children) {
      fine.triangles.row(k) << ch[0], ch[1], ch[2];
      fine.parent_triangle[k] = p;
      ++k;
    }
  }
  fine.vertices.resize(static_cast<int>(verts.size()), 2);
  for (size_t v = 0; v < verts.size(); ++v) {
    fine.vertices(static_cast<int>(v), 0) = verts[v][0];
    fine.vertices(static_cast<int>(v), 1) = verts[v][1];
  }
  return fine;
}

bool mesh_is_valid(const TriMesh& mesh, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  double total = 0.0;
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const double a = triangle_area(mesh, k);
    if (a <= 0.0) return fail("triangle " + std::to_string(k) + " not CCW");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-12) return fail("areas do not sum to 1");

  std::map<std::pair<int, int>, int> edge_count;
  for (int k = 0; k < mesh.triangle_count(); ++k)
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.triangles(k, e), b = mesh.triangles(k, (e + 1) % 3);
      ++edge_count[std::minmax(a, b)];
    }
  auto on_boundary = [&](int v) {
    const double x = mesh.vertices(v, 0), y = mesh.vertices(v, 1);
    return x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0;
  };
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) return fail("edge shared by more than two triangles");
    if (count == 1 && !(on_boundary(edge.first) && on_boundary(edge.second)))
      return fail("interior edge with a single triangle");
  }
  return true;
}

std::string mesh_to_text(const TriMesh& mesh) {
  std::ostringstream out;
  out << "vertices " << mesh.vertex_count() << "\n";
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    char line[80];
    std::snprintf(line, sizeof line, "%.17g %.17g\n", mesh.vertices(v, 0), mesh.vertices(v, 1));
    out << line;
  }
  out << "triangles " << mesh.triangle_count() << "\n";
  for (int k = 0; k < mesh.triangle_count(); ++k)
    out << mesh.triangles(k, 0) << " " << mesh.triangles(k, 1) << " " << mesh.triangles(k, 2)
        << "\n";
  return out.str();
}

namespace {

RegionFamily make_family(int order, RegionRole role, double cx1, double cy1, double cx2,
                         double cy2) {
  RegionFamily fam;
  fam.role = role;
  fam.order = order;
  const double cell = 1.0 / order;
  const double half = 1.0 / (8.0 * order);  // half of the patch side 1/(4*order)
  for (int j = 0; j < order; ++j)
    for (int i = 0; i < order; ++i) {
      const double x0 = i * cell, y0 = j * cell;
      for (const auto& [rx, ry] : {std::pair{cx1, cy1}, std::pair{cx2, cy2}}) {
        const double cx = x0 + rx * cell, cy = y0 + ry * cell;
        fam.rectangles.push_back({cx - half, cx + half, cy - half, cy + half});
      }
    }
  return fam;
}

}  // namespace

std::pair<RegionFamily, RegionFamily> build_regions(int actuator_order, int sensor_order) {
  if (actuator_order < 1 || sensor_order < 1)
    throw std::invalid_argument("build_regions: orders must be >= 1");
  auto actuators = make_family(actuator_order, RegionRole::actuator, 0.25, 0.25, 0.75, 0.75);
  auto sensors = make_family(sensor_order, RegionRole::sensor, 0.75, 0.25, 0.25, 0.75);
  return {actuators, sensors};
}

namespace {

constexpr double kGeomTol = 1e-12;

bool triangle_inside(const TriMesh& mesh, int k, const Rect& r) {
  for (int e = 0; e < 3; ++e) {
    const int v = mesh.triangles(k, e);
    const double x = mesh.vertices(v, 0), y = mesh.vertices(v, 1);
    if (x < r.x_lo - kGeomTol || x > r.x_hi + kGeomTol || y < r.y_lo - kGeomTol ||
        y > r.y_hi + kGeomTol)
      return false;
  }
  return true;
}

}  // namespace

bool check_alignment(const TriMesh& mesh, const RegionFamily& regions) {
  // A rectangle is an exact union of triangles iff the triangles contained in
  // it tile its full area (contained triangles cannot overlap).
  for (const auto& rect : regions.rectangles) {
    double covered = 0.0;
    for (int k = 0; k < mesh.triangle_count(); ++k)
      if (triangle_inside(mesh, k, rect)) covered += triangle_area(mesh, k);
    if (std::abs(covered - rect.area()) > 1e-12) return false;
  }
  return true;
}

std::vector<std::vector<int>> region_cells(const TriMesh& mesh, const RegionFamily& regions) {
  std::vector<std::vector<int>> cells(regions.rectangles.size());
  for (size_t j = 0; j < regions.rectangles.size(); ++j) {
    const auto& rect = regions.rectangles[j];
    double covered = 0.0;
    for (int k = 0; k < mesh.triangle_count(); ++k)
      if (triangle_inside(mesh, k, rect)) {
        cells[j].push_back(k);
        covered += triangle_area(mesh, k);
      }
    if (std::abs(covered - rect.area()) > 1e-12)
      throw std::invalid_argument("region_cells: patch " + std::to_string(j) +
                                  " is not an exact union of mesh triangles");
  }
  return cells;
}

}  // namespace parastab
