#pragma once

// Global C1 space on a quadrilateral mesh: degree-of-freedom enumeration,
// local-to-global coupling (with edge-direction and normal-sign handling),
// field evaluation, boundary classification, and a conformity checker.
//
// Global DoF order: six per vertex (value, dx, dy, dxx, dxy, dyy), then per
// edge the trace points followed by the normal-derivative points (measured
// from the low-index endpoint), then the face points of each quad.

#include <bsquad/element.hpp>
#include <bsquad/quad_mesh.hpp>

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace bsq {

struct GlobalDof {
  DofKind kind = DofKind::VertexValue;
  int entity = 0;            // vertex, edge, or quad index
  int index = 0;             // sub-index within the entity
  Vec2 x = Vec2::Zero();     // physical anchor
  Vec2 normal = Vec2::Zero();  // unit normal for EdgeNormal dofs
};

struct MapEntry {
  int g = 0;
  double sign = 1.0;
};

struct GlobalSpace {
  QuadMesh mesh;
  Topology topo;
  int p = 0, k = 0;
  int edge_point_count = 0, edge_normal_count = 0, face_count = 0;
  std::vector<LocalBasis> bases;              // point-dual basis per quad
  std::vector<GlobalDof> dofs;
  std::vector<std::vector<MapEntry>> l2g;     // [quad][local dof]

  int num_dofs() const { return static_cast<int>(dofs.size()); }
  int vertex_offset(int v) const { return 6 * v; }
  int edge_offset(int e) const {
    return 6 * static_cast<int>(mesh.vertices.size()) + e * (edge_point_count + edge_normal_count);
  }
  int face_offset(int q) const {
    return 6 * static_cast<int>(mesh.vertices.size()) +
           static_cast<int>(topo.edges.size()) * (edge_point_count + edge_normal_count) + q * face_count;
  }
};

// True when the local edge's coordinate direction runs from the global edge's
// low-index endpoint to the high one. Local edges 2 and 3 are parametrized
// against the CCW traversal direction.
inline bool edge_coord_forward(const Topology& topo, int q, int le) {
  const bool fwd = topo.quad_edge_fwd[q][le];
  return (le <= 1) ? fwd : !fwd;
}

inline GlobalSpace build_global_space(const QuadMesh& mesh, int p, int k = -1) {
  if (k < 0) k = std::max(1, 6 - p);
  GlobalSpace S;
  S.mesh = mesh;
  S.topo = build_topology(mesh);
  S.p = p;
  S.k = k;
  S.edge_point_count = k + p - 6;
  S.edge_normal_count = k + p - 5;
  const int n = 2 * k + p - 1;
  S.face_count = (n - 4) * (n - 4);

  S.bases.reserve(mesh.num_quads());
  for (int q = 0; q < mesh.num_quads(); ++q) S.bases.push_back(to_point_dual(build_basis(mesh.corners(q), p, k)));

  const int nv = static_cast<int>(mesh.vertices.size());
  const int ne = static_cast<int>(S.topo.edges.size());
  const int nq = mesh.num_quads();
  S.dofs.resize(6 * nv + ne * (S.edge_point_count + S.edge_normal_count) + nq * S.face_count);

  const DofKind vertex_kinds[6] = {DofKind::VertexValue, DofKind::VertexDx,  DofKind::VertexDy,
                                   DofKind::VertexDxx,   DofKind::VertexDxy, DofKind::VertexDyy};
  for (int v = 0; v < nv; ++v)
    for (int d = 0; d < 6; ++d) {
      GlobalDof dof;
      dof.kind = vertex_kinds[d];
      dof.entity = v;
      dof.index = d;
      dof.x = mesh.vertices[v];
      S.dofs[6 * v + d] = dof;
    }

  const KnotVector kv_tr = make_knots(p, k, p - 1);
  const KnotVector kv_nd = make_knots(p - 1, k, p - 2);
  const std::vector<double> eta_tr = greville(kv_tr);
  const std::vector<double> eta_nd = greville(kv_nd);
  for (int e = 0; e < ne; ++e) {
    const Edge& edge = S.topo.edges[e];
    const Vec2 lo = mesh.vertices[edge.lo], hi = mesh.vertices[edge.hi];
    int at = S.edge_offset(e);
    for (int j = 0; j < S.edge_point_count; ++j, ++at) {
      GlobalDof dof;
      dof.kind = DofKind::EdgePoint;
      dof.entity = e;
      dof.index = j;
      dof.x = (1 - eta_tr[j + 3]) * lo + eta_tr[j + 3] * hi;
      S.dofs[at] = dof;
    }
    for (int j = 0; j < S.edge_normal_count; ++j, ++at) {
      GlobalDof dof;
      dof.kind = DofKind::EdgeNormal;
      dof.entity = e;
      dof.index = j;
      dof.x = (1 - eta_nd[j + 2]) * lo + eta_nd[j + 2] * hi;
      dof.normal = edge.normal;
      S.dofs[at] = dof;
    }
  }
  for (int q = 0; q < nq; ++q)
    for (int f = 0; f < S.face_count; ++f) {
      GlobalDof dof;
      dof.kind = DofKind::FacePoint;
      dof.entity = q;
      dof.index = f;
      dof.x = S.bases[q].dofs[S.bases[q].face_offset() + f].x;
      S.dofs[S.face_offset(q) + f] = dof;
    }

  S.l2g.assign(nq, {});
  for (int q = 0; q < nq; ++q) {
    const LocalBasis& B = S.bases[q];
    std::vector<MapEntry>& map = S.l2g[q];
    map.reserve(B.nb());
    for (int c = 0; c < 4; ++c)
      for (int d = 0; d < 6; ++d) map.push_back({S.vertex_offset(mesh.quads[q][c]) + d, 1.0});
    for (int le = 0; le < 4; ++le) {
      const int ge = S.topo.quad_edges[q][le];
      const bool cf = edge_coord_forward(S.topo, q, le);
      const double sig = edge_orientation_sign(S.topo, q, le);
      for (int j = 0; j < S.edge_point_count; ++j)
        map.push_back({S.edge_offset(ge) + (cf ? j : S.edge_point_count - 1 - j), 1.0});
      for (int j = 0; j < S.edge_normal_count; ++j)
        map.push_back({S.edge_offset(ge) + S.edge_point_count + (cf ? j : S.edge_normal_count - 1 - j), sig});
    }
    for (int f = 0; f < S.face_count; ++f) map.push_back({S.face_offset(q) + f, 1.0});
    if (static_cast<int>(map.size()) != B.nb())
      throw std::logic_error("build_global_space: local map size mismatch");
  }
  return S;
}

// Coefficients of the restriction to quad q in the local basis.
inline Eigen::VectorXd local_coefficients(const GlobalSpace& S, int q, const Eigen::VectorXd& U) {
  const std::vector<MapEntry>& map = S.l2g[q];
  Eigen::VectorXd c(static_cast<int>(map.size()));
  for (size_t i = 0; i < map.size(); ++i) c[static_cast<int>(i)] = map[i].sign * U[map[i].g];
  return c;
}

// Combined spline coefficient table of a local field.
inline Table local_coefficient_table(const LocalBasis& B, const Eigen::VectorXd& c) {
  const Eigen::VectorXd vec = B.stacked.transpose() * c;
  Table T(B.n, B.n);
  for (int i1 = 0; i1 < B.n; ++i1)
    for (int i2 = 0; i2 < B.n; ++i2) T(i1, i2) = vec[i1 * B.n + i2];
  return T;
}

// Physical jet (value[, dx, dy[, dxx, dxy, dyy]]) of a coefficient table at
// one parameter point.
inline Eigen::VectorXd field_jet(const LocalBasis& B, const Table& C, double xi1, double xi2, int nders = 2,
                                 Side sx = Side::Right, Side sy = Side::Right) {
  const Eigen::MatrixXd E = parametric_eval_matrix(B.kv, xi1, xi2, nders, sx, sy);
  Eigen::VectorXd vec(B.n * B.n);
  for (int i1 = 0; i1 < B.n; ++i1)
    for (int i2 = 0; i2 < B.n; ++i2) vec[i1 * B.n + i2] = C(i1, i2);
  const Eigen::VectorXd par = E.transpose() * vec;
  if (nders == 0) return par;
  const ParamMap F{B.geom.v};
  const Eigen::Matrix<double, 6, 6> M = jet_pushforward(F.jacobian(xi1, xi2), B.geom.q1);
  if (nders == 1) return M.topLeftCorner<3, 3>() * par;
  return M * par;
}

// Marks every dof anchored on the domain boundary (vertex jets at boundary
// vertices, trace and normal dofs of boundary edges).
inline std::vector<char> boundary_dofs(const GlobalSpace& S) {
  std::vector<char> mark(S.num_dofs(), 0);
  for (size_t v = 0; v < S.mesh.vertices.size(); ++v)
    if (S.topo.vertex_on_boundary[v])
      for (int d = 0; d < 6; ++d) mark[S.vertex_offset(static_cast<int>(v)) + d] = 1;
  for (size_t e = 0; e < S.topo.edges.size(); ++e)
    if (S.topo.edges[e].boundary())
      for (int j = 0; j < S.edge_point_count + S.edge_normal_count; ++j)
        mark[S.edge_offset(static_cast<int>(e)) + j] = 1;
  return mark;
}

// ---------------------------------------------------------------------------
// Conformity diagnostics

struct C1Report {
  double max_value_jump = 0.0;
  double max_gradient_jump = 0.0;
  double max_vertex_hessian_gap = 0.0;
};

// Measures inter-element continuity of the field with coefficients U: value
// and gradient jumps at interior samples of every interior edge, and the
// spread of the Hessian among the quads meeting at each vertex.
inline C1Report check_c1(const GlobalSpace& S, const Eigen::VectorXd& U, int samples_per_edge = 20) {
  C1Report rep;
  std::vector<Table> tabs(S.mesh.num_quads());
  for (int q = 0; q < S.mesh.num_quads(); ++q)
    tabs[q] = local_coefficient_table(S.bases[q], local_coefficients(S, q, U));

  for (const Edge& edge : S.topo.edges) {
    if (edge.boundary()) continue;
    for (int m = 0; m < samples_per_edge; ++m) {
      const double s = (m + 1.0) / (samples_per_edge + 1.0);
      Eigen::VectorXd jets[2];
      for (int side = 0; side < 2; ++side) {
        const int q = edge.quad[side];
        const int le = edge.local[side];
        const double sloc = edge_coord_forward(S.topo, q, le) ? s : 1.0 - s;
        const Vec2 xi = edge_param_point(le, sloc);
        jets[side] = field_jet(S.bases[q], tabs[q], xi.x(), xi.y(), 1);
      }
      rep.max_value_jump = std::max(rep.max_value_jump, std::abs(jets[0][0] - jets[1][0]));
      rep.max_gradient_jump =
          std::max(rep.max_gradient_jump, (jets[0].segment<2>(1) - jets[1].segment<2>(1)).norm());
    }
  }

  const Vec2 corner_xi[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<std::vector<Eigen::Vector3d>> hess(S.mesh.vertices.size());
  for (int q = 0; q < S.mesh.num_quads(); ++q)
    for (int c = 0; c < 4; ++c) {
      const Eigen::VectorXd jet = field_jet(S.bases[q], tabs[q], corner_xi[c].x(), corner_xi[c].y(), 2);
      hess[S.mesh.quads[q][c]].push_back(jet.segment<3>(3));
    }
  for (const auto& list : hess)
    for (size_t i = 0; i + 1 < list.size(); ++i)
      for (size_t j = i + 1; j < list.size(); ++j)
        rep.max_vertex_hessian_gap =
            std::max(rep.max_vertex_hessian_gap, (list[i] - list[j]).cwiseAbs().maxCoeff());
  return rep;
}

}  // namespace bsq
