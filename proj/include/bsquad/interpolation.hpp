#pragma once

// Interpolation onto the C1 space: a smooth-function interface with
// finite-difference validation, and the local/global projection operators
// driven by the public degrees of freedom (vertex jets, edge trace values,
// edge normal derivatives, face point values).

#include <bsquad/element.hpp>
#include <bsquad/global_space.hpp>

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <vector>

namespace bsq {

struct SmoothFunction {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  std::function<Eigen::Vector3d(const Vec2&)> hessian;  // (dxx, dxy, dyy)
};

// Worst relative mismatch between the derivative callbacks and centered
// differences of the value callback over the given points.
inline double validate_smooth_function(const SmoothFunction& f, const std::vector<Vec2>& pts, double h = 1e-5) {
  double worst = 0.0;
  for (const Vec2& x : pts) {
    const Vec2 ex(1, 0), ey(0, 1);
    const double vpx = f.value(x + h * ex), vmx = f.value(x - h * ex);
    const double vpy = f.value(x + h * ey), vmy = f.value(x - h * ey);
    const double v0 = f.value(x);
    const Vec2 g = f.gradient(x);
    const Eigen::Vector3d H = f.hessian(x);
    const double scale_g = 1.0 + g.norm();
    const double scale_h = 1.0 + H.norm();
    worst = std::max(worst, std::abs((vpx - vmx) / (2 * h) - g.x()) / scale_g);
    worst = std::max(worst, std::abs((vpy - vmy) / (2 * h) - g.y()) / scale_g);
    worst = std::max(worst, std::abs((vpx - 2 * v0 + vmx) / (h * h) - H[0]) / scale_h);
    worst = std::max(worst, std::abs((vpy - 2 * v0 + vmy) / (h * h) - H[2]) / scale_h);
    const double mixed = (f.value(x + h * (ex + ey)) - f.value(x + h * (ex - ey)) - f.value(x - h * (ex - ey)) +
                          f.value(x - h * (ex + ey))) /
                         (4 * h * h);
    worst = std::max(worst, std::abs(mixed - H[1]) / scale_h);
  }
  return worst;
}

namespace detail {

inline double dof_data(const SmoothFunction& f, DofKind kind, const Vec2& x, const Vec2& normal) {
  switch (kind) {
    case DofKind::VertexValue: return f.value(x);
    case DofKind::VertexDx: return f.gradient(x).x();
    case DofKind::VertexDy: return f.gradient(x).y();
    case DofKind::VertexDxx: return f.hessian(x)[0];
    case DofKind::VertexDxy: return f.hessian(x)[1];
    case DofKind::VertexDyy: return f.hessian(x)[2];
    case DofKind::EdgePoint: return f.value(x);
    case DofKind::EdgeNormal: return normal.dot(f.gradient(x));
    case DofKind::FacePoint: return f.value(x);
  }
  throw std::logic_error("dof_data: unknown kind");
}

// Face coefficients completing a vertex/edge partial interpolant so the field
// matches f at the face points; works for either interior-dual convention.
inline void solve_face_block(const LocalBasis& B, const SmoothFunction& f, Eigen::VectorXd& c) {
  const int off = B.face_offset();
  const int nf = B.nb() - off;
  Eigen::MatrixXd A(nf, nf);
  Eigen::VectorXd r(nf);
  Eigen::VectorXd partial = c;
  partial.tail(nf).setZero();
  for (int pi = 0; pi < nf; ++pi) {
    const LocalDof& dof = B.dofs[off + pi];
    const Eigen::VectorXd vals = eval_basis(B, dof.xi.x(), dof.xi.y(), 0).col(0);
    A.row(pi) = vals.segment(off, nf).transpose();
    r[pi] = f.value(dof.x) - partial.dot(vals);
  }
  c.tail(nf) = A.partialPivLu().solve(r);
}

}  // namespace detail

// Interpolates f on a single element; returns the local coefficient vector.
inline Eigen::VectorXd project_local(const LocalBasis& B, const SmoothFunction& f) {
  Eigen::VectorXd c(B.nb());
  for (int i = 0; i < B.face_offset(); ++i) {
    const LocalDof& dof = B.dofs[i];
    const Vec2 normal = (dof.kind == DofKind::EdgeNormal) ? B.geom.n[dof.entity] : Vec2::Zero();
    c[i] = detail::dof_data(f, dof.kind, dof.x, normal);
  }
  detail::solve_face_block(B, f, c);
  return c;
}

// Interpolates f on the whole mesh; returns global dof values.
inline Eigen::VectorXd project_global(const GlobalSpace& S, const SmoothFunction& f) {
  Eigen::VectorXd U(S.num_dofs());
  for (int g = 0; g < S.num_dofs(); ++g) {
    const GlobalDof& dof = S.dofs[g];
    if (dof.kind == DofKind::FacePoint) continue;
    U[g] = detail::dof_data(f, dof.kind, dof.x, dof.normal);
  }
  for (int q = 0; q < S.mesh.num_quads(); ++q) {
    const LocalBasis& B = S.bases[q];
    Eigen::VectorXd c(B.nb());
    const int off = B.face_offset();
    for (int i = 0; i < off; ++i) c[i] = S.l2g[q][i].sign * U[S.l2g[q][i].g];
    detail::solve_face_block(B, f, c);
    for (int i = off; i < B.nb(); ++i) U[S.l2g[q][i].g] = c[i];
  }
  return U;
}

}  // namespace bsq
