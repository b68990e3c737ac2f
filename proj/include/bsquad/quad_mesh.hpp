#pragma once

// Quadrilateral meshes: storage, validation, bilinear parametrization,
// geometric quality report, derived edge topology with global orientation,
// regular refinement, and JSON file I/O.
//
// Mesh file format: {"vertices": [[x,y], ...], "quads": [[i0,i1,i2,i3], ...]}
// with each quad's vertices in counterclockwise order.

#include <bsquad/geometry.hpp>

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsq {

struct QuadMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 4>> quads;  // CCW vertex indices

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_quads() const { return static_cast<int>(quads.size()); }
  std::array<Vec2, 4> corners(int q) const {
    return {vertices[quads[q][0]], vertices[quads[q][1]], vertices[quads[q][2]], vertices[quads[q][3]]};
  }
};

// Bilinear map F from the unit parameter square onto one quad.
struct ParamMap {
  std::array<Vec2, 4> v;

  Vec2 at(double xi1, double xi2) const {
    return (1 - xi1) * (1 - xi2) * v[0] + xi1 * (1 - xi2) * v[1] + xi1 * xi2 * v[2] + (1 - xi1) * xi2 * v[3];
  }
  // Columns are the partial derivatives of F; both are affine in the opposite
  // coordinate, so the determinant is bilinear and extremal at the corners.
  Mat2 jacobian(double xi1, double xi2) const {
    Mat2 J;
    J.col(0) = (1 - xi2) * (v[1] - v[0]) + xi2 * (v[2] - v[3]);
    J.col(1) = (1 - xi1) * (v[3] - v[0]) + xi1 * (v[2] - v[1]);
    return J;
  }
  // The single nonzero second derivative of F.
  Vec2 mixed() const { return v[0] - v[1] + v[2] - v[3]; }
  double det(double xi1, double xi2) const { return jacobian(xi1, xi2).determinant(); }
};

inline ParamMap param_map(const std::array<Vec2, 4>& corners) { return ParamMap{corners}; }
inline ParamMap param_map(const QuadMesh& mesh, int q) { return ParamMap{mesh.corners(q)}; }

namespace detail {

inline std::array<Vec2, 4> edge_vectors(const std::array<Vec2, 4>& v) {
  return {v[1] - v[0], v[2] - v[1], v[3] - v[2], v[0] - v[3]};
}

inline double quad_h(const std::array<Vec2, 4>& v) {
  const auto t = edge_vectors(v);
  double h = 0.0;
  for (const Vec2& e : t) h = std::max(h, e.norm());
  return h;
}

// Corner determinants a^(i) = det(t^(i-1), t^(i)); all positive exactly for a
// strictly convex CCW quad.
inline std::array<double, 4> corner_dets(const std::array<Vec2, 4>& v) {
  const auto t = edge_vectors(v);
  std::array<double, 4> a;
  for (int i = 0; i < 4; ++i) a[i] = det2(t[(i + 3) % 4], t[i]);
  return a;
}

inline double point_segment_distance(const Vec2& w, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (w - a).norm();
  const double s = std::clamp((w - a).dot(d) / len2, 0.0, 1.0);
  return (w - (a + s * d)).norm();
}

}  // namespace detail

struct QuadGeometry {
  double h = 0.0;                    // longest edge
  double rho = 0.0;                  // min angle over the four edge/diagonal triangles
  std::array<double, 4> a{};         // corner determinants
  double det_min = 0.0;
};

struct MeshGeometry {
  std::vector<QuadGeometry> per_quad;
  double h = 0.0;    // max over quads
  double rho = 0.0;  // min over quads
};

inline QuadGeometry quad_geometry(const std::array<Vec2, 4>& v) {
  QuadGeometry g;
  g.h = detail::quad_h(v);
  g.a = detail::corner_dets(v);
  g.det_min = *std::min_element(g.a.begin(), g.a.end());
  g.rho = M_PI;
  // The four triangles obtained by cutting along either diagonal.
  const int tri[4][3] = {{0, 1, 2}, {1, 2, 3}, {2, 3, 0}, {3, 0, 1}};
  for (const auto& t : tri)
    for (int c = 0; c < 3; ++c) g.rho = std::min(g.rho, corner_angle(v[t[(c + 2) % 3]], v[t[c]], v[t[(c + 1) % 3]]));
  return g;
}

inline void validate_mesh(const QuadMesh& mesh) {
  const int nv = mesh.num_vertices();
  if (nv < 4 || mesh.num_quads() < 1) throw std::runtime_error("mesh: needs at least one quad and four vertices");
  for (int i = 0; i < nv; ++i)
    if (!mesh.vertices[i].allFinite()) throw std::runtime_error("mesh: non-finite coordinates at vertex " + std::to_string(i));

  double h_max = 0.0;
  for (int q = 0; q < mesh.num_quads(); ++q) {
    for (int c = 0; c < 4; ++c) {
      const int vi = mesh.quads[q][c];
      if (vi < 0 || vi >= nv) throw std::runtime_error("mesh: quad " + std::to_string(q) + " references invalid vertex");
      for (int c2 = 0; c2 < c; ++c2)
        if (mesh.quads[q][c2] == vi) throw std::runtime_error("mesh: quad " + std::to_string(q) + " repeats a vertex");
    }
    const auto v = mesh.corners(q);
    const double h = detail::quad_h(v);
    h_max = std::max(h_max, h);
    const auto a = detail::corner_dets(v);
    for (int i = 0; i < 4; ++i)
      if (!(a[i] > 1e-10 * h * h)) {
        std::ostringstream os;
        os << "mesh: quad " << q << " is non-CCW/non-convex (a^(" << i + 1 << ") = " << a[i] << ")";
        throw std::runtime_error(os.str());
      }
  }

  // Coincident vertices would silently break adjacency.
  for (int i = 0; i < nv; ++i)
    for (int j = i + 1; j < nv; ++j)
      if ((mesh.vertices[i] - mesh.vertices[j]).norm() < 1e-12 * h_max)
        throw std::runtime_error("mesh: vertices " + std::to_string(i) + " and " + std::to_string(j) + " coincide");

  // Hanging vertices: a vertex in the interior of another quad's edge means
  // the two quads do not share the edge with identical endpoints.
  for (int q = 0; q < mesh.num_quads(); ++q) {
    for (int e = 0; e < 4; ++e) {
      const Vec2 a = mesh.vertices[mesh.quads[q][e]];
      const Vec2 b = mesh.vertices[mesh.quads[q][(e + 1) % 4]];
      const double len = (b - a).norm();
      for (int w = 0; w < nv; ++w) {
        if (w == mesh.quads[q][e] || w == mesh.quads[q][(e + 1) % 4]) continue;
        if (detail::point_segment_distance(mesh.vertices[w], a, b) < 1e-12 * len)
          throw std::runtime_error("mesh: vertex " + std::to_string(w) + " hangs on an edge of quad " + std::to_string(q));
      }
    }
  }
}

inline MeshGeometry geometry_report(const QuadMesh& mesh) {
  MeshGeometry g;
  g.rho = M_PI;
  for (int q = 0; q < mesh.num_quads(); ++q) {
    QuadGeometry qg = quad_geometry(mesh.corners(q));
    if (!(qg.rho > 0.0)) throw std::runtime_error("geometry_report: degenerate quad " + std::to_string(q));
    // Bilinear determinant attains its extrema at the corners; guard the
    // implementation against convention drift by sampling.
    const ParamMap F = param_map(mesh, q);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        if (F.det(i / 4.0, j / 4.0) < qg.det_min - 1e-10 * qg.h * qg.h)
          throw std::runtime_error("geometry_report: determinant below corner minimum (convention bug)");
    g.h = std::max(g.h, qg.h);
    g.rho = std::min(g.rho, qg.rho);
    g.per_quad.push_back(qg);
  }
  return g;
}

struct Edge {
  int lo = -1, hi = -1;               // endpoint vertex indices, lo < hi
  std::array<int, 2> quad{-1, -1};    // adjacent quads (second = -1 on boundary)
  std::array<int, 2> local{-1, -1};   // local edge index within each adjacent quad
  Vec2 normal = Vec2::Zero();         // global unit normal: rot90 of lo->hi direction
  Vec2 midpoint = Vec2::Zero();
  double length = 0.0;

  bool boundary() const { return quad[1] < 0; }
};

struct Topology {
  std::vector<Edge> edges;
  std::vector<std::array<int, 4>> quad_edges;    // edge id per local edge
  std::vector<std::array<bool, 4>> quad_edge_fwd;  // local CCW traversal runs lo->hi
  std::vector<bool> vertex_on_boundary;
  std::vector<int> valence;  // number of incident quads per vertex
};

// Local edge e of a quad joins corners e and (e+1) mod 4 in CCW order.
inline Topology build_topology(const QuadMesh& mesh) {
  Topology topo;
  topo.quad_edges.assign(mesh.num_quads(), {-1, -1, -1, -1});
  topo.quad_edge_fwd.assign(mesh.num_quads(), {false, false, false, false});
  std::map<std::pair<int, int>, int> index;
  for (int q = 0; q < mesh.num_quads(); ++q) {
    for (int e = 0; e < 4; ++e) {
      const int va = mesh.quads[q][e];
      const int vb = mesh.quads[q][(e + 1) % 4];
      const auto key = std::minmax(va, vb);
      auto it = index.find(key);
      if (it == index.end()) {
        Edge edge;
        edge.lo = key.first;
        edge.hi = key.second;
        edge.quad[0] = q;
        edge.local[0] = e;
        const Vec2 d = mesh.vertices[edge.hi] - mesh.vertices[edge.lo];
        edge.length = d.norm();
        edge.normal = rot90(d) / edge.length;
        edge.midpoint = 0.5 * (mesh.vertices[edge.lo] + mesh.vertices[edge.hi]);
        index.emplace(key, static_cast<int>(topo.edges.size()));
        topo.quad_edges[q][e] = static_cast<int>(topo.edges.size());
        topo.quad_edge_fwd[q][e] = (va == edge.lo);
        topo.edges.push_back(edge);
      } else {
        Edge& edge = topo.edges[it->second];
        if (edge.quad[1] >= 0)
          throw std::runtime_error("mesh: edge shared by more than two quads");
        const bool fwd = (va == edge.lo);
        const bool first_fwd = topo.quad_edge_fwd[edge.quad[0]][edge.local[0]];
        if (fwd == first_fwd)
          throw std::runtime_error("mesh: inconsistent orientation across a shared edge");
        edge.quad[1] = q;
        edge.local[1] = e;
        topo.quad_edges[q][e] = it->second;
        topo.quad_edge_fwd[q][e] = fwd;
      }
    }
  }
  topo.vertex_on_boundary.assign(mesh.num_vertices(), false);
  for (const Edge& e : topo.edges)
    if (e.boundary()) {
      topo.vertex_on_boundary[e.lo] = true;
      topo.vertex_on_boundary[e.hi] = true;
    }
  topo.valence.assign(mesh.num_vertices(), 0);
  for (int q = 0; q < mesh.num_quads(); ++q)
    for (int c = 0; c < 4; ++c) ++topo.valence[mesh.quads[q][c]];
  return topo;
}

// +1 when the quad's inward normal on its local edge agrees with the global
// edge normal, -1 otherwise. The inward normal of a CCW quad is the left turn
// of the traversal direction, so the sign reduces to the traversal sense.
inline int edge_orientation_sign(const Topology& topo, int q, int local_edge) {
  return topo.quad_edge_fwd[q][local_edge] ? 1 : -1;
}

inline QuadMesh refine_regular(const QuadMesh& mesh) {
  const Topology topo = build_topology(mesh);
  QuadMesh fine;
  fine.vertices = mesh.vertices;
  const int edge_base = mesh.num_vertices();
  for (const Edge& e : topo.edges) fine.vertices.push_back(e.midpoint);
  const int center_base = edge_base + static_cast<int>(topo.edges.size());
  for (int q = 0; q < mesh.num_quads(); ++q) fine.vertices.push_back(param_map(mesh, q).at(0.5, 0.5));

  for (int q = 0; q < mesh.num_quads(); ++q) {
    const auto& quad = mesh.quads[q];
    const auto& qe = topo.quad_edges[q];
    const int m01 = edge_base + qe[0], m12 = edge_base + qe[1];
    const int m23 = edge_base + qe[2], m30 = edge_base + qe[3];
    const int c = center_base + q;
    fine.quads.push_back({quad[0], m01, c, m30});
    fine.quads.push_back({m01, quad[1], m12, c});
    fine.quads.push_back({c, m12, quad[2], m23});
    fine.quads.push_back({m30, c, m23, quad[3]});
  }
  return fine;
}

inline QuadMesh mesh_from_json(const nlohmann::json& j) {
  QuadMesh mesh;
  if (!j.is_object() || !j.contains("vertices") || !j.contains("quads"))
    throw std::runtime_error("mesh: JSON must contain \"vertices\" and \"quads\" arrays");
  for (const auto& v : j.at("vertices")) {
    if (!v.is_array() || v.size() != 2) throw std::runtime_error("mesh: each vertex must be an [x, y] pair");
    mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  for (const auto& q : j.at("quads")) {
    if (!q.is_array() || q.size() != 4) throw std::runtime_error("mesh: each quad must list four vertex indices");
    mesh.quads.push_back({q[0].get<int>(), q[1].get<int>(), q[2].get<int>(), q[3].get<int>()});
  }
  validate_mesh(mesh);
  build_topology(mesh);
  return mesh;
}

inline QuadMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_mesh: parse error in " + path + ": " + e.what());
  }
  return mesh_from_json(j);
}

inline nlohmann::json mesh_to_json(const QuadMesh& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const Vec2& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y()});
  j["quads"] = nlohmann::json::array();
  for (const auto& q : mesh.quads) j["quads"].push_back({q[0], q[1], q[2], q[3]});
  return j;
}

inline void save_mesh(const QuadMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  out << mesh_to_json(mesh).dump(1) << "\n";
}

}  // namespace bsq
