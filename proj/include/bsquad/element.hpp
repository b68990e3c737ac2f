#pragma once

// The local C1 quadrilateral element: geometry coefficients, coefficient
// tables for the basis functions (with the display/rotation conventions of
// the construction), an explicit builder for p in {3,4,5} at the default
// segment count, an independent numeric builder for general (p, k) that
// solves the dual-constraint linear system, and physical-space evaluation of
// values, gradients, and Hessians.
//
// Conventions. The parameter square carries corners 0:(0,0), 1:(1,0),
// 2:(1,1), 3:(0,1) matching the quad's CCW vertices. A coefficient table D
// stores D(j1, j2) multiplying N_{j1}(xi1) N_{j2}(xi2); the human-readable
// ("display") layout prints j2 top-down, see to_display. Edge e joins corners
// e and (e+1) mod 4; its coordinate parametrization runs along increasing
// xi1 (edges 0, 2) or xi2 (edges 1, 3).

#include <bsquad/geometry.hpp>
#include <bsquad/quad_mesh.hpp>
#include <bsquad/spline_basis.hpp>

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsq {

// ---------------------------------------------------------------------------
// Element geometry coefficients

struct ElementGeometry {
  std::array<Vec2, 4> v;       // corners, CCW
  std::array<Vec2, 4> t;       // t[i] = v[(i+1)%4] - v[i]
  std::array<Vec2, 4> n;       // inward unit normals
  std::array<double, 4> a;     // a[i] = det(t[(i+3)%4], t[i])
  std::array<double, 4> b0;    // b0[i] = t[(i+3)%4] . t[i] / |t[i]|^2
  std::array<double, 4> b1;    // b1[i] = t[(i+1)%4] . t[i] / |t[i]|^2
  Vec2 q1 = Vec2::Zero();      // v0 - v1 + v2 - v3 (mixed derivative of F)
  double h = 0.0;

  // Accessors take the construction's 1-based edge/vertex index, any integer,
  // reduced mod 4; q alternates sign with the index.
  static int mod4(int k) { return ((k - 1) % 4 + 4) % 4; }
  const Vec2& tv(int k) const { return t[mod4(k)]; }
  const Vec2& nv(int k) const { return n[mod4(k)]; }
  double av(int k) const { return a[mod4(k)]; }
  double b0v(int k) const { return b0[mod4(k)]; }
  double b1v(int k) const { return b1[mod4(k)]; }
  Vec2 qv(int k) const { return (mod4(k) % 2 == 0) ? Vec2(q1) : Vec2(-q1); }

  // Symmetric 2x2 coefficient tensors, 1-based component access i,j in {1,2}.
  double T(int k, int i, int j) const { return tv(k)[i - 1] * tv(k)[j - 1]; }
  double Q(int k, int i, int j) const { return tv(k - 1)[i - 1] * tv(k)[j - 1] + tv(k - 1)[j - 1] * tv(k)[i - 1]; }
  double N(int k, int i, int j) const { return nv(k)[i - 1] * tv(k)[j - 1] + nv(k)[j - 1] * tv(k)[i - 1]; }
};

inline ElementGeometry element_geometry(const std::array<Vec2, 4>& corners) {
  ElementGeometry g;
  g.v = corners;
  for (int i = 0; i < 4; ++i) g.t[i] = corners[(i + 1) % 4] - corners[i];
  for (int i = 0; i < 4; ++i) {
    g.a[i] = det2(g.t[(i + 3) % 4], g.t[i]);
    const double len2 = g.t[i].squaredNorm();
    if (!(len2 > 0.0)) throw std::invalid_argument("element_geometry: zero-length edge");
    g.n[i] = rot90(g.t[i]) / std::sqrt(len2);
    g.b0[i] = g.t[(i + 3) % 4].dot(g.t[i]) / len2;
    g.b1[i] = g.t[(i + 1) % 4].dot(g.t[i]) / len2;
    g.h = std::max(g.h, std::sqrt(len2));
  }
  g.q1 = corners[0] - corners[1] + corners[2] - corners[3];
  for (double a : g.a)
    if (!(a > 0.0)) throw std::invalid_argument("element_geometry: quad is not strictly convex CCW");
  return g;
}

// ---------------------------------------------------------------------------
// Coefficient tables: display adapter and rotation

using Table = Eigen::MatrixXd;

// Display layout: row r (top-down) holds j2 = n-1-r, column c holds j1 = c.
inline Eigen::MatrixXd to_display(const Table& D) {
  const int n = static_cast<int>(D.rows());
  Eigen::MatrixXd disp(n, D.cols());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < D.cols(); ++c) disp(r, c) = D(c, n - 1 - r);
  return disp;
}

inline Table from_display(const Eigen::MatrixXd& disp) {
  const int n = static_cast<int>(disp.rows());
  Table D(n, disp.cols());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < disp.cols(); ++c) D(c, n - 1 - r) = disp(r, c);
  return D;
}

// R_k: rotate the table pattern by (k-1) quarter turns counterclockwise in the
// parameter square, moving a corner-1 pattern to corner k. R_1 is the
// identity and R_a . R_b = R_{((a+b-2) mod 4)+1}.
inline Table rotate_table(const Table& D, int k) {
  if (D.rows() != D.cols()) throw std::invalid_argument("rotate_table: table must be square");
  const int n = static_cast<int>(D.rows());
  Table cur = D;
  const int turns = ((k - 1) % 4 + 4) % 4;
  for (int s = 0; s < turns; ++s) {
    Table next(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) next(a, b) = cur(b, n - 1 - a);
    cur = next;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Local basis container

enum class DofKind { VertexValue, VertexDx, VertexDy, VertexDxx, VertexDxy, VertexDyy, EdgePoint, EdgeNormal, FacePoint };

struct LocalDof {
  DofKind kind = DofKind::VertexValue;
  int entity = 0;  // vertex or edge index; 0 for faces
  int index = 0;   // sub-index within the entity
  Vec2 xi = Vec2::Zero();  // parametric anchor
  Vec2 x = Vec2::Zero();   // physical anchor
};

inline std::string dof_label(const LocalDof& d, int face_per_dir) {
  switch (d.kind) {
    case DofKind::VertexValue: return "v" + std::to_string(d.entity + 1) + ".value";
    case DofKind::VertexDx: return "v" + std::to_string(d.entity + 1) + ".d1";
    case DofKind::VertexDy: return "v" + std::to_string(d.entity + 1) + ".d2";
    case DofKind::VertexDxx: return "v" + std::to_string(d.entity + 1) + ".d11";
    case DofKind::VertexDxy: return "v" + std::to_string(d.entity + 1) + ".d12";
    case DofKind::VertexDyy: return "v" + std::to_string(d.entity + 1) + ".d22";
    case DofKind::EdgePoint: return "e" + std::to_string(d.entity + 1) + ".trace" + std::to_string(d.index + 1);
    case DofKind::EdgeNormal: return "e" + std::to_string(d.entity + 1) + ".normal" + std::to_string(d.index + 1);
    case DofKind::FacePoint:
      return "f." + std::to_string(d.index % face_per_dir + 2) + "_" + std::to_string(d.index / face_per_dir + 2);
  }
  return "?";
}

struct LocalBasis {
  int p = 0, k = 0, n = 0;  // n = 2k+p-1 basis functions per direction
  KnotVector kv;            // direction space, smoothness p-2 at inner knots
  ElementGeometry geom;
  std::vector<Table> tables;
  std::vector<LocalDof> dofs;
  std::vector<double> theta;   // Greville abscissae of kv
  int edge_point_count = 0;    // trace DoFs per edge (k+p-6)
  int edge_normal_count = 0;   // normal-derivative DoFs per edge (k+p-5)
  int face_per_dir = 0;        // n-4
  Eigen::MatrixXd stacked;     // nb x n^2, row f holds tables[f] flattened as i1*n+i2

  int nb() const { return static_cast<int>(tables.size()); }
  int vertex_offset(int corner) const { return 6 * corner; }
  int edge_offset(int e) const { return 24 + e * (edge_point_count + edge_normal_count); }
  int face_offset() const { return 24 + 4 * (edge_point_count + edge_normal_count); }
  int face_index(int j1, int j2) const { return face_offset() + (j2 - 2) * face_per_dir + (j1 - 2); }
};

// Parameter point on local edge e at edge coordinate s.
inline Vec2 edge_param_point(int e, double s) {
  switch (e) {
    case 0: return {s, 0.0};
    case 1: return {1.0, s};
    case 2: return {s, 1.0};
    case 3: return {0.0, s};
  }
  throw std::invalid_argument("edge_param_point: edge index out of range");
}

// ---------------------------------------------------------------------------
// Physical pushforward of parametric jets

// Matrix M with (value, dx, dy, dxx, dxy, dyy)^T = M (value, d1, d2, d11,
// d12, d22)^T, given the Jacobian J of F at the point and the (constant)
// mixed second derivative m of F. Second derivatives transform with the
// inverse Jacobian twice plus a first-derivative correction from the
// curvature of F.
inline Eigen::Matrix<double, 6, 6> jet_pushforward(const Mat2& J, const Vec2& m) {
  Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
  M(0, 0) = 1.0;
  const Mat2 A = J.inverse().transpose();
  M.block<2, 2>(1, 1) = A;

  Mat2 P;
  P << 0, 1, 1, 0;
  const Mat2 K = A * P * A.transpose();
  const Vec2 w = A.transpose() * m;  // physical-gradient weight of the correction

  const double A00 = A(0, 0), A01 = A(0, 1), A10 = A(1, 0), A11 = A(1, 1);
  // Rows for H_xx, H_xy, H_yy against parametric (d11, d12, d22).
  M(3, 3) = A00 * A00;
  M(3, 4) = 2 * A00 * A01;
  M(3, 5) = A01 * A01;
  M(4, 3) = A00 * A10;
  M(4, 4) = A00 * A11 + A01 * A10;
  M(4, 5) = A01 * A11;
  M(5, 3) = A10 * A10;
  M(5, 4) = 2 * A10 * A11;
  M(5, 5) = A11 * A11;
  // Correction -(grad . m) K against parametric (d1, d2).
  M(3, 1) = -K(0, 0) * w[0];
  M(3, 2) = -K(0, 0) * w[1];
  M(4, 1) = -K(0, 1) * w[0];
  M(4, 2) = -K(0, 1) * w[1];
  M(5, 1) = -K(1, 1) * w[0];
  M(5, 2) = -K(1, 1) * w[1];
  return M;
}

// Parametric evaluation matrix: rows indexed i1*n+i2, columns (value[, d1,
// d2[, d11, d12, d22]]) of N_{i1}(xi1) N_{i2}(xi2).
inline Eigen::MatrixXd parametric_eval_matrix(const KnotVector& kv, double xi1, double xi2, int nders = 2,
                                              Side sx = Side::Right, Side sy = Side::Right) {
  const int n = kv.num_basis();
  const int ncols = nders == 0 ? 1 : (nders == 1 ? 3 : 6);
  const Eigen::MatrixXd Bx = bspline_eval(kv, xi1, nders, sx);
  const Eigen::MatrixXd By = bspline_eval(kv, xi2, nders, sy);
  Eigen::MatrixXd E(n * n, ncols);
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2) {
      const int r = i1 * n + i2;
      E(r, 0) = Bx(i1, 0) * By(i2, 0);
      if (nders >= 1) {
        E(r, 1) = Bx(i1, 1) * By(i2, 0);
        E(r, 2) = Bx(i1, 0) * By(i2, 1);
      }
      if (nders >= 2) {
        E(r, 3) = Bx(i1, 2) * By(i2, 0);
        E(r, 4) = Bx(i1, 1) * By(i2, 1);
        E(r, 5) = Bx(i1, 0) * By(i2, 2);
      }
    }
  return E;
}

// Values and physical derivatives of every basis function at one parameter
// point: nb x {1,3,6} matrix with columns (value[, dx, dy[, dxx, dxy, dyy]]).
inline Eigen::MatrixXd eval_basis(const LocalBasis& B, double xi1, double xi2, int nders = 2,
                                  Side sx = Side::Right, Side sy = Side::Right) {
  const Eigen::MatrixXd E = parametric_eval_matrix(B.kv, xi1, xi2, nders, sx, sy);
  Eigen::MatrixXd par = B.stacked * E;
  if (nders == 0) return par;
  const ParamMap F{B.geom.v};
  const Eigen::Matrix<double, 6, 6> M = jet_pushforward(F.jacobian(xi1, xi2), B.geom.q1);
  if (nders == 1) return par * M.topLeftCorner<3, 3>().transpose();
  return par * M.transpose();
}

// ---------------------------------------------------------------------------
// Explicit coefficient tables, p in {3, 4, 5} at the default segment count

namespace detail {

struct DegreeData {
  double edge_factor;                       // times 1/|t|
  std::vector<std::pair<int, double>> edge_a;   // (j1, weight) entries for a^(j) at row j2=1
  std::vector<std::pair<int, double>> edge_a1;  // entries for a^(j+1)
  double grad_pre, grad_edge, second_pre, second_edge;  // combination prefactors
};

inline const DegreeData& degree_data(int p) {
  static const DegreeData d5{8.0 / 25, {{2, 1}}, {{3, 1}}, 2.0 / 5, 5.0 / 16, 1.0 / 20, 1.0 / 32};
  static const DegreeData d4{1.0 / 32, {{2, 2}, {3, 3}}, {{3, 3}, {4, 2}}, 3.0 / 8, 1.0 / 4, 1.0 / 24, 1.0 / 48};
  static const DegreeData d3{2.0 / 81, {{2, 1}, {3, 3}, {4, 2}}, {{3, 2}, {4, 3}, {5, 1}}, 1.0 / 3, 1.0 / 8, 1.0 / 27, 1.0 / 96};
  switch (p) {
    case 5: return d5;
    case 4: return d4;
    case 3: return d3;
  }
  throw std::invalid_argument("explicit tables exist only for p in {3, 4, 5}");
}

// Base pattern of the edge function on edge 1 (before rotation): coefficients
// on the j2=1 row built from the two corner determinants.
inline Table edge_base_table(const ElementGeometry& g, int p, int n, int j) {
  const DegreeData& dd = degree_data(p);
  Table D = Table::Zero(n, n);
  for (const auto& [j1, w] : dd.edge_a) D(j1, 1) += w * g.av(j);
  for (const auto& [j1, w] : dd.edge_a1) D(j1, 1) += w * g.av(j + 1);
  D *= dd.edge_factor / g.tv(j).norm();
  return D;
}

// The left-edge matrix M^L_k (uses b-coefficients of edge k-1).
inline Table ml_table(int p, int n, double b0, double b1) {
  Table D = Table::Zero(n, n);
  switch (p) {
    case 5:
      D(1, 3) = -(3.0 / 5) * b0;
      D(0, 2) = 1;
      D(1, 2) = 1 + (3.0 / 5) * b1;
      D(0, 1) = 0.5;
      D(1, 1) = 0.5;
      break;
    case 4:
      D(1, 4) = -(1.0 / 8) * b0;
      D(0, 3) = 0.5;
      D(1, 3) = 0.5 + (3.0 / 16) * (b1 - b0);
      D(0, 2) = 2.0 / 3;
      D(1, 2) = 2.0 / 3 + (1.0 / 8) * b1;
      D(0, 1) = 1.0 / 3;
      D(1, 1) = 1.0 / 3;
      break;
    case 3:
      D(1, 5) = -(1.0 / 18) * b0;
      D(0, 4) = 1.0 / 3;
      D(1, 4) = 1.0 / 3 + (1.0 / 9) * b1 - (1.0 / 6) * b0;
      D(0, 3) = 2.0 / 3;
      D(1, 3) = 2.0 / 3 + (1.0 / 6) * b1 - (1.0 / 9) * b0;
      D(0, 2) = 2.0 / 3;
      D(1, 2) = 2.0 / 3 + (1.0 / 18) * b1;
      D(0, 1) = 1.0 / 3;
      D(1, 1) = 1.0 / 3;
      break;
  }
  return D;
}

// The bottom-edge matrix M^B_k (uses b-coefficients of edge k).
inline Table mb_table(int p, int n, double b0, double b1) {
  Table D = Table::Zero(n, n);
  switch (p) {
    case 5:
      D(1, 1) = 0.5;
      D(2, 1) = 1 + (3.0 / 5) * b0;
      D(3, 1) = -(3.0 / 5) * b1;
      D(1, 0) = 0.5;
      D(2, 0) = 1;
      break;
    case 4:
      D(1, 1) = 1.0 / 3;
      D(2, 1) = 2.0 / 3 + (1.0 / 8) * b0;
      D(3, 1) = 0.5 + (3.0 / 16) * (b0 - b1);
      D(4, 1) = -(1.0 / 8) * b1;
      D(1, 0) = 1.0 / 3;
      D(2, 0) = 2.0 / 3;
      D(3, 0) = 0.5;
      break;
    case 3:
      D(1, 1) = 1.0 / 3;
      D(2, 1) = 2.0 / 3 + (1.0 / 18) * b0;
      D(3, 1) = 2.0 / 3 + (1.0 / 6) * b0 - (1.0 / 9) * b1;
      D(4, 1) = 1.0 / 3 + (1.0 / 9) * b0 - (1.0 / 6) * b1;
      D(5, 1) = -(1.0 / 18) * b1;
      D(1, 0) = 1.0 / 3;
      D(2, 0) = 2.0 / 3;
      D(3, 0) = 2.0 / 3;
      D(4, 0) = 1.0 / 3;
      break;
  }
  return D;
}

// The corner matrix X (geometry independent).
inline Table x_table(int p, int n) {
  Table D = Table::Zero(n, n);
  if (p == 5) {
    D(0, 1) = 0.5;
    D(0, 0) = 1;
    D(1, 0) = 0.5;
  } else {
    D(0, 2) = 1.0 / 3;
    D(1, 2) = 1.0 / 3;
    D(0, 1) = 2.0 / 3;
    D(1, 1) = 1.0 / 3;
    D(2, 1) = 1.0 / 3;
    D(0, 0) = 1;
    D(1, 0) = 2.0 / 3;
    D(2, 0) = 1.0 / 3;
  }
  return D;
}

// Gradient auxiliary matrix Y_{k,i}; arguments are the i-th components of
// t^(k-2), q^(k), t^(k+1).
inline Table y_table(int p, int n, double tm2, double q, double tp1) {
  Table D = Table::Zero(n, n);
  switch (p) {
    case 5:
      D(1, 2) = -(1.0 / 5) * tm2;
      D(1, 1) = (1.0 / 10) * q;
      D(2, 1) = (1.0 / 5) * tp1;
      break;
    case 4:
      D(1, 3) = -(1.0 / 24) * tm2;
      D(1, 2) = -(1.0 / 4) * tm2 - (1.0 / 6) * q;
      D(1, 1) = (1.0 / 24) * q;
      D(2, 1) = (1.0 / 4) * tp1 - (1.0 / 6) * q;
      D(3, 1) = (1.0 / 24) * tp1;
      break;
    case 3:
      D(1, 3) = -(1.0 / 18) * tm2 - (1.0 / 54) * q;
      D(1, 2) = -(5.0 / 18) * tm2 - (11.0 / 54) * q;
      D(1, 1) = (1.0 / 27) * q;
      D(2, 1) = (5.0 / 18) * tp1 - (11.0 / 54) * q;
      D(3, 1) = (1.0 / 18) * tp1 - (1.0 / 54) * q;
      break;
  }
  return D;
}

// Second-derivative auxiliary matrix Z_{k,(i,j)}; arguments are the (i,j)
// entries of T^(k-1), T^(k), Q^(k-1), Q^(k), Q^(k+1).
inline Table z_table(int p, int n, double Tm1, double T0, double Qm1, double Q0, double Qp1) {
  Table D = Table::Zero(n, n);
  switch (p) {
    case 5:
      D(1, 2) = (1.0 / 5) * Qm1;
      D(0, 1) = -(1.0 / 2) * Tm1;
      D(1, 1) = -(2.0 / 5) * Q0 - (1.0 / 2) * Tm1 - (1.0 / 2) * T0;
      D(2, 1) = (1.0 / 5) * Qp1;
      D(1, 0) = -(1.0 / 2) * T0;
      break;
    case 4:
      D(1, 3) = (1.0 / 32) * Qm1;
      D(0, 2) = -(1.0 / 6) * Tm1;
      D(1, 2) = -(1.0 / 6) * Tm1 - (1.0 / 8) * Q0 + (1.0 / 16) * Qm1;
      D(0, 1) = -(1.0 / 3) * Tm1;
      D(1, 1) = -(1.0 / 3) * Tm1 - (1.0 / 3) * T0 - (3.0 / 16) * Q0;
      D(2, 1) = -(1.0 / 8) * Q0 + (1.0 / 16) * Qp1 - (1.0 / 6) * T0;
      D(3, 1) = (1.0 / 32) * Qp1;
      D(1, 0) = -(1.0 / 3) * T0;
      D(2, 0) = -(1.0 / 6) * T0;
      break;
    case 3:
      D(1, 3) = -(1.0 / 72) * Q0 + (1.0 / 36) * Qm1;
      D(0, 2) = -(1.0 / 6) * Tm1;
      D(1, 2) = -(1.0 / 6) * Tm1 - (11.0 / 72) * Q0 + (1.0 / 18) * Qm1;
      D(0, 1) = -(1.0 / 3) * Tm1;
      D(1, 1) = -(1.0 / 3) * Tm1 - (1.0 / 3) * T0 - (1.0 / 6) * Q0;
      D(2, 1) = -(11.0 / 72) * Q0 + (1.0 / 18) * Qp1 - (1.0 / 6) * T0;
      D(3, 1) = (1.0 / 36) * Qp1 - (1.0 / 72) * Q0;
      D(1, 0) = -(1.0 / 3) * T0;
      D(2, 0) = -(1.0 / 6) * T0;
      break;
  }
  return D;
}

inline void finalize_basis(LocalBasis& B) {
  const int n = B.n;
  B.stacked.resize(B.nb(), n * n);
  for (int f = 0; f < B.nb(); ++f)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) B.stacked(f, i1 * n + i2) = B.tables[f](i1, i2);
}

// Shared DoF metadata: vertex jets, edge trace/normal anchor points, face
// points, in the local basis ordering.
inline void build_dof_metadata(LocalBasis& B) {
  const ParamMap F{B.geom.v};
  const KnotVector kv_tr = make_knots(B.p, B.k, B.p - 1);
  const KnotVector kv_nd = make_knots(B.p - 1, B.k, B.p - 2);
  const std::vector<double> eta_tr = greville(kv_tr);
  const std::vector<double> eta_nd = greville(kv_nd);

  B.dofs.clear();
  const Vec2 corner_xi[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const DofKind vertex_kinds[6] = {DofKind::VertexValue, DofKind::VertexDx,  DofKind::VertexDy,
                                   DofKind::VertexDxx,   DofKind::VertexDxy, DofKind::VertexDyy};
  for (int c = 0; c < 4; ++c)
    for (int d = 0; d < 6; ++d) {
      LocalDof dof;
      dof.kind = vertex_kinds[d];
      dof.entity = c;
      dof.index = d;
      dof.xi = corner_xi[c];
      dof.x = B.geom.v[c];
      B.dofs.push_back(dof);
    }
  for (int e = 0; e < 4; ++e) {
    for (int j = 0; j < B.edge_point_count; ++j) {
      LocalDof dof;
      dof.kind = DofKind::EdgePoint;
      dof.entity = e;
      dof.index = j;
      dof.xi = edge_param_point(e, eta_tr[j + 3]);
      dof.x = F.at(dof.xi.x(), dof.xi.y());
      B.dofs.push_back(dof);
    }
    for (int j = 0; j < B.edge_normal_count; ++j) {
      LocalDof dof;
      dof.kind = DofKind::EdgeNormal;
      dof.entity = e;
      dof.index = j;
      dof.xi = edge_param_point(e, eta_nd[j + 2]);
      dof.x = F.at(dof.xi.x(), dof.xi.y());
      B.dofs.push_back(dof);
    }
  }
  for (int j2 = 2; j2 <= B.n - 3; ++j2)
    for (int j1 = 2; j1 <= B.n - 3; ++j1) {
      LocalDof dof;
      dof.kind = DofKind::FacePoint;
      dof.entity = 0;
      dof.index = (j2 - 2) * B.face_per_dir + (j1 - 2);
      dof.xi = Vec2(B.theta[j1], B.theta[j2]);
      dof.x = F.at(dof.xi.x(), dof.xi.y());
      B.dofs.push_back(dof);
    }
}

}  // namespace detail

inline LocalBasis build_basis_explicit(const std::array<Vec2, 4>& corners, int p) {
  if (p < 3 || p > 5) throw std::invalid_argument("build_basis_explicit: degree must be 3, 4, or 5");
  LocalBasis B;
  B.p = p;
  B.k = 6 - p;
  B.kv = make_knots(p, B.k, p - 2);
  B.n = B.kv.num_basis();
  B.geom = element_geometry(corners);
  B.theta = greville(B.kv);
  B.edge_point_count = B.k + p - 6;  // zero at the default segment count
  B.edge_normal_count = B.k + p - 5;
  B.face_per_dir = B.n - 4;
  const ElementGeometry& g = B.geom;
  const detail::DegreeData& dd = detail::degree_data(p);
  const int n = B.n;

  std::array<Table, 4> edge_tab;
  for (int j = 1; j <= 4; ++j) edge_tab[j - 1] = rotate_table(detail::edge_base_table(g, p, n, j), j);
  auto edge_of = [&](int j) -> const Table& { return edge_tab[ElementGeometry::mod4(j)]; };

  B.tables.clear();
  for (int kc = 1; kc <= 4; ++kc) {
    const Table ML = detail::ml_table(p, n, g.b0v(kc - 1), g.b1v(kc - 1));
    const Table MB = detail::mb_table(p, n, g.b0v(kc), g.b1v(kc));
    const Table X = detail::x_table(p, n);

    B.tables.push_back(rotate_table(ML + MB + X, kc));

    for (int i = 1; i <= 2; ++i) {
      const Table Y = detail::y_table(p, n, g.tv(kc - 2)[i - 1], g.qv(kc)[i - 1], g.tv(kc + 1)[i - 1]);
      const Table base = -g.tv(kc - 1)[i - 1] * ML + g.tv(kc)[i - 1] * MB + Y;
      B.tables.push_back(dd.grad_pre * rotate_table(base, kc) - dd.grad_edge * g.nv(kc)[i - 1] * edge_of(kc) -
                         dd.grad_edge * g.nv(kc - 1)[i - 1] * edge_of(kc - 1));
    }

    const int pairs[3][2] = {{1, 1}, {1, 2}, {2, 2}};
    for (const auto& ij : pairs) {
      const int i = ij[0], j = ij[1];
      const double lambda = (i == j) ? 1.0 : 2.0;
      const Table Z = detail::z_table(p, n, g.T(kc - 1, i, j), g.T(kc, i, j), g.Q(kc - 1, i, j), g.Q(kc, i, j),
                                      g.Q(kc + 1, i, j));
      const Table base = g.T(kc - 1, i, j) * ML + g.T(kc, i, j) * MB + Z;
      B.tables.push_back(lambda * dd.second_pre * rotate_table(base, kc) -
                         lambda * dd.second_edge * g.N(kc, i, j) * edge_of(kc) +
                         lambda * dd.second_edge * g.N(kc - 1, i, j) * edge_of(kc - 1));
    }
  }
  for (int j = 1; j <= 4; ++j) B.tables.push_back(edge_tab[j - 1]);
  for (int j2 = 2; j2 <= n - 3; ++j2)
    for (int j1 = 2; j1 <= n - 3; ++j1) {
      Table D = Table::Zero(n, n);
      D(j1, j2) = 1.0;
      B.tables.push_back(D);
    }

  detail::build_dof_metadata(B);
  detail::finalize_basis(B);
  return B;
}

// ---------------------------------------------------------------------------
// Numeric builder: membership constraints plus biorthogonality rows

namespace detail {

// Rows spanning the orthogonal complement of the column range of E (which
// must have full column rank): the trailing columns of a full QR.
inline Eigen::MatrixXd complement_rows(const Eigen::MatrixXd& E) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(E);
  const Eigen::MatrixXd Q = qr.householderQ();
  return Q.rightCols(E.rows() - E.cols()).transpose();
}

}  // namespace detail

// Builds the same basis as the explicit tables by brute force: for each dual
// functional, solve the linear system combining (a) membership of the
// candidate in the local space (edge traces one degree smoother than the knot
// multiplicity allows; scaled normal derivative along each edge in the
// degree-(p-1) spline space) and (b) biorthogonality to all functionals.
inline LocalBasis build_basis_numeric(const std::array<Vec2, 4>& corners, int p, int k) {
  if (p < 3) throw std::invalid_argument("build_basis_numeric: degree must be at least 3");
  if (k < std::max(1, 6 - p)) throw std::invalid_argument("build_basis_numeric: too few segments for the degree");
  LocalBasis B;
  B.p = p;
  B.k = k;
  B.kv = make_knots(p, k, p - 2);
  B.n = B.kv.num_basis();
  B.geom = element_geometry(corners);
  B.theta = greville(B.kv);
  B.edge_point_count = k + p - 6;
  B.edge_normal_count = k + p - 5;
  B.face_per_dir = B.n - 4;
  detail::build_dof_metadata(B);

  const int n = B.n;
  const int nsq = n * n;
  const int nb = 24 + 4 * (B.edge_point_count + B.edge_normal_count) + B.face_per_dir * B.face_per_dir;
  const ParamMap F{B.geom.v};

  const KnotVector kv_tr = make_knots(p, k, p - 1);
  const KnotVector kv_nd = make_knots(p - 1, k, p - 2);
  const KnotVector kv_w = uniform_open_knots(p, k, 3);
  const std::vector<double> gw = greville(kv_w);
  const int dim_w = kv_w.num_basis();

  // Trace smoothness: complement of the embedding of the C^{p-1} trace space.
  const Eigen::MatrixXd comp_tr = detail::complement_rows(subspace_embedding(kv_tr, B.kv));  // (k-1) x n

  const Eigen::PartialPivLU<Eigen::MatrixXd> cw_lu(collocation_matrix(kv_w, gw));

  std::vector<Eigen::RowVectorXd> rows;
  rows.reserve(4 * (3 * k - 2) + nb);

  for (int e = 0; e < 4; ++e) {
    // (a) Trace coefficients along the edge, in edge-coordinate order.
    std::vector<int> trace_cells(n);
    for (int i = 0; i < n; ++i) {
      const int i1 = (e == 0 || e == 2) ? i : (e == 1 ? n - 1 : 0);
      const int i2 = (e == 1 || e == 3) ? i : (e == 2 ? n - 1 : 0);
      trace_cells[i] = i1 * n + i2;
    }
    for (int r = 0; r < comp_tr.rows(); ++r) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nsq);
      for (int i = 0; i < n; ++i) row(trace_cells[i]) = comp_tr(r, i);
      rows.push_back(row);
    }

    // (b) The scaled normal derivative G(s) = det(n, F_2) d1 + det(F_1, n) d2
    // along the edge, expanded in the multiplicity-3 space W; membership in
    // det(J) * S^{p-1} is enforced through the complement within W.
    const Vec2 nn = B.geom.n[e];
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim_w, nsq);
    Eigen::MatrixXd scaled_nd(dim_w, kv_nd.num_basis());
    for (int m = 0; m < dim_w; ++m) {
      const Vec2 xi = edge_param_point(e, gw[m]);
      const Mat2 J = F.jacobian(xi.x(), xi.y());
      const double w1 = det2(nn, J.col(1));
      const double w2 = det2(J.col(0), nn);
      const Eigen::MatrixXd Bx = bspline_eval(B.kv, xi.x(), 1);
      const Eigen::MatrixXd By = bspline_eval(B.kv, xi.y(), 1);
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
          G(m, i1 * n + i2) = w1 * Bx(i1, 1) * By(i2, 0) + w2 * Bx(i1, 0) * By(i2, 1);
      scaled_nd.row(m) = J.determinant() * bspline_eval(kv_nd, gw[m], 0).col(0).transpose();
    }
    const Eigen::MatrixXd comp_nd = detail::complement_rows(cw_lu.solve(scaled_nd));  // (2k-1) x dim_w
    const Eigen::MatrixXd nd_rows = comp_nd * cw_lu.solve(G);
    for (int r = 0; r < nd_rows.rows(); ++r) rows.push_back(nd_rows.row(r));
  }

  const int n_membership = static_cast<int>(rows.size());

  // Biorthogonality rows, one per dual functional, in DoF order.
  for (const LocalDof& dof : B.dofs) {
    switch (dof.kind) {
      case DofKind::VertexValue:
      case DofKind::VertexDx:
      case DofKind::VertexDy:
      case DofKind::VertexDxx:
      case DofKind::VertexDxy:
      case DofKind::VertexDyy: {
        if (dof.index > 0) break;  // handled as a block below
        const Eigen::MatrixXd E = parametric_eval_matrix(B.kv, dof.xi.x(), dof.xi.y(), 2);
        const Eigen::Matrix<double, 6, 6> M = jet_pushforward(F.jacobian(dof.xi.x(), dof.xi.y()), B.geom.q1);
        const Eigen::MatrixXd phys = M * E.transpose();  // 6 x nsq
        for (int d = 0; d < 6; ++d) rows.push_back(phys.row(d));
        break;
      }
      case DofKind::EdgePoint: {
        const Eigen::MatrixXd E = parametric_eval_matrix(B.kv, dof.xi.x(), dof.xi.y(), 0);
        rows.push_back(E.col(0).transpose());
        break;
      }
      case DofKind::EdgeNormal: {
        const Vec2 nn = B.geom.n[dof.entity];
        const Mat2 J = F.jacobian(dof.xi.x(), dof.xi.y());
        const double w1 = det2(nn, J.col(1)) / J.determinant();
        const double w2 = det2(J.col(0), nn) / J.determinant();
        const Eigen::MatrixXd E = parametric_eval_matrix(B.kv, dof.xi.x(), dof.xi.y(), 1);
        rows.push_back((w1 * E.col(1) + w2 * E.col(2)).transpose());
        break;
      }
      case DofKind::FacePoint: {
        const int j1 = dof.index % B.face_per_dir + 2;
        const int j2 = dof.index / B.face_per_dir + 2;
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nsq);
        row(j1 * n + j2) = 1.0;
        rows.push_back(row);
        break;
      }
    }
  }

  const int nrows = static_cast<int>(rows.size());
  if (nrows != n_membership + nb) throw std::logic_error("build_basis_numeric: functional row count mismatch");

  Eigen::MatrixXd A(nrows, nsq);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nrows, nb);
  for (int r = 0; r < nrows; ++r) {
    const double scale = rows[r].norm();
    if (!(scale > 0)) throw std::runtime_error("build_basis_numeric: zero constraint row (degenerate quad?)");
    A.row(r) = rows[r] / scale;
    if (r >= n_membership) rhs(r, r - n_membership) = 1.0 / scale;
  }

  // Tall but consistent: membership rows overlap with the vertex/edge
  // functional rows in rank, so least squares reproduces an exact solution.
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < nsq)
    throw std::runtime_error("build_basis_numeric: singular system (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(nsq) + ")");
  const Eigen::MatrixXd X = qr.solve(rhs);
  const double residual = (A * X - rhs).cwiseAbs().maxCoeff();
  if (residual > 1e-8)
    throw std::runtime_error("build_basis_numeric: inconsistent constraint system, residual " + std::to_string(residual));

  B.tables.resize(nb, Table::Zero(n, n));
  for (int f = 0; f < nb; ++f)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) B.tables[f](i1, i2) = X(i1 * n + i2, f);
  detail::finalize_basis(B);
  return B;
}

// Preferred builder: exact closed-form tables where they exist, otherwise the
// constraint solve.
inline LocalBasis build_basis(const std::array<Vec2, 4>& corners, int p, int k) {
  if (p >= 3 && p <= 5 && k == 6 - p) return build_basis_explicit(corners, p);
  return build_basis_numeric(corners, p, k);
}

// ---------------------------------------------------------------------------
// Change of interior functionals: coefficient duals <-> face-point evaluations

// Values of every basis function at the face points; rows follow the face DoF
// ordering, columns the basis ordering.
inline Eigen::MatrixXd face_point_values(const LocalBasis& B) {
  const int m = B.face_per_dir;
  Eigen::MatrixXd V(m * m, B.nb());
  for (int j2 = 2; j2 <= B.n - 3; ++j2)
    for (int j1 = 2; j1 <= B.n - 3; ++j1)
      V.row((j2 - 2) * m + (j1 - 2)) = eval_basis(B, B.theta[j1], B.theta[j2], 0).col(0).transpose();
  return V;
}

// Rebuild the basis so that the interior functions are dual to face-point
// evaluations (the public DoF convention) instead of coefficient duals (the
// construction's convention). Vertex and edge functions are corrected to
// vanish at the face points; their own functional identities are unchanged
// because interior functions carry no vertex or edge data.
inline LocalBasis to_point_dual(const LocalBasis& B) {
  const int nf = B.face_per_dir * B.face_per_dir;
  const int off = B.face_offset();
  const Eigen::MatrixXd V = face_point_values(B);
  const Eigen::PartialPivLU<Eigen::MatrixXd> aint(V.rightCols(nf));

  LocalBasis R = B;
  const Eigen::MatrixXd Ainv = aint.inverse();
  for (int f = 0; f < nf; ++f) {
    Table D = Table::Zero(B.n, B.n);
    for (int g = 0; g < nf; ++g) D += Ainv(g, f) * B.tables[off + g];
    R.tables[off + f] = D;
  }
  for (int b = 0; b < off; ++b) {
    const Eigen::VectorXd x = aint.solve(V.col(b));
    Table D = B.tables[b];
    for (int g = 0; g < nf; ++g) D -= x[g] * B.tables[off + g];
    R.tables[b] = D;
  }
  detail::finalize_basis(R);
  return R;
}

}  // namespace bsq
