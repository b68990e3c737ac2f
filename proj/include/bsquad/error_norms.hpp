#pragma once

// Error measurement for fields in the global space: max-norm on a dense
// per-cell sample grid, and relative L2 / H1 / H2 (semi)norms by Gauss
// quadrature on each knot cell. Also provides the cached tensor-product
// evaluation tables reused by the assembly routines.

#include <bsquad/global_space.hpp>
#include <bsquad/interpolation.hpp>
#include <bsquad/quadrature.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace bsq {

// Parameter-space evaluation table for a fixed set of 2D tensor points:
// column block 6*pt..6*pt+5 holds the jet components of every coefficient
// cell, so a field's parametric jets come from one vector-matrix product.
struct TensorEval {
  int n = 0;
  int npts = 0;
  std::vector<double> x1, x2;  // point coordinates, size npts
  std::vector<double> w;       // tensor quadrature weights; empty for sample grids
  Eigen::MatrixXd E;           // n^2 rows, 6*npts columns
};

inline std::vector<double> knot_breaks(const KnotVector& kv) {
  std::vector<double> b;
  for (double t : kv.knots)
    if (b.empty() || t > b.back() + 1e-14) b.push_back(t);
  return b;
}

// Equally spaced samples per knot cell, endpoints included.
inline std::vector<double> cell_sample_points(const KnotVector& kv, int per_cell) {
  const std::vector<double> br = knot_breaks(kv);
  std::vector<double> pts;
  for (size_t c = 0; c + 1 < br.size(); ++c)
    for (int i = 0; i < per_cell; ++i) pts.push_back(br[c] + (br[c + 1] - br[c]) * i / (per_cell - 1.0));
  return pts;
}

// Gauss points and weights per knot cell.
inline void cell_gauss(const KnotVector& kv, int npts, std::vector<double>& pts, std::vector<double>& wts) {
  const std::vector<double> br = knot_breaks(kv);
  const QuadratureRule rule = gauss_legendre(npts);
  pts.clear();
  wts.clear();
  for (size_t c = 0; c + 1 < br.size(); ++c) {
    const double len = br[c + 1] - br[c];
    for (int i = 0; i < npts; ++i) {
      pts.push_back(br[c] + len * rule.points[i]);
      wts.push_back(len * rule.weights[i]);
    }
  }
}

inline TensorEval make_tensor_eval(const KnotVector& kv, const std::vector<double>& pts1d,
                                   const std::vector<double>& wts1d = {}) {
  TensorEval T;
  T.n = kv.num_basis();
  const int m = static_cast<int>(pts1d.size());
  T.npts = m * m;
  T.x1.resize(T.npts);
  T.x2.resize(T.npts);
  if (!wts1d.empty()) T.w.resize(T.npts);

  std::vector<Eigen::MatrixXd> B(m);
  for (int i = 0; i < m; ++i) B[i] = bspline_eval(kv, pts1d[i], 2);

  T.E.resize(T.n * T.n, 6 * T.npts);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const int pt = a * m + b;
      T.x1[pt] = pts1d[a];
      T.x2[pt] = pts1d[b];
      if (!wts1d.empty()) T.w[pt] = wts1d[a] * wts1d[b];
      for (int i1 = 0; i1 < T.n; ++i1)
        for (int i2 = 0; i2 < T.n; ++i2) {
          const int r = i1 * T.n + i2;
          T.E(r, 6 * pt + 0) = B[a](i1, 0) * B[b](i2, 0);
          T.E(r, 6 * pt + 1) = B[a](i1, 1) * B[b](i2, 0);
          T.E(r, 6 * pt + 2) = B[a](i1, 0) * B[b](i2, 1);
          T.E(r, 6 * pt + 3) = B[a](i1, 2) * B[b](i2, 0);
          T.E(r, 6 * pt + 4) = B[a](i1, 1) * B[b](i2, 1);
          T.E(r, 6 * pt + 5) = B[a](i1, 0) * B[b](i2, 2);
        }
    }
  return T;
}

struct NormReport {
  double linf = 0.0;
  double l2_rel = 0.0, h1_rel = 0.0, h2_rel = 0.0;
  double l2_abs = 0.0, h1_abs = 0.0, h2_abs = 0.0;
  double u_l2 = 0.0, u_h1 = 0.0, u_h2 = 0.0;
};

// Error of the field U against the exact solution u. The max-norm samples a
// 10x10 grid per knot cell (boundaries included); the integral norms use
// Gauss quadrature with p+2 points per cell and direction. H1 and H2 are
// seminorms.
inline NormReport error_norms(const GlobalSpace& S, const Eigen::VectorXd& U, const SmoothFunction& u,
                              int linf_per_cell = 10) {
  NormReport rep;
  if (S.bases.empty()) return rep;
  const KnotVector& kv = S.bases[0].kv;

  const TensorEval sample = make_tensor_eval(kv, cell_sample_points(kv, linf_per_cell));
  std::vector<double> gp, gw;
  cell_gauss(kv, S.p + 2, gp, gw);
  const TensorEval gauss = make_tensor_eval(kv, gp, gw);

  double e2 = 0, eh1 = 0, eh2 = 0, u2 = 0, uh1 = 0, uh2 = 0;
  for (int q = 0; q < S.mesh.num_quads(); ++q) {
    const LocalBasis& B = S.bases[q];
    const ParamMap F = param_map(S.mesh, q);
    const Eigen::VectorXd vec = B.stacked.transpose() * local_coefficients(S, q, U);

    const Eigen::RowVectorXd vals = vec.transpose() * sample.E;
    for (int pt = 0; pt < sample.npts; ++pt) {
      const Vec2 x = F.at(sample.x1[pt], sample.x2[pt]);
      rep.linf = std::max(rep.linf, std::abs(vals[6 * pt] - u.value(x)));
    }

    const Eigen::RowVectorXd jets = vec.transpose() * gauss.E;
    for (int pt = 0; pt < gauss.npts; ++pt) {
      const double x1 = gauss.x1[pt], x2 = gauss.x2[pt];
      const Mat2 J = F.jacobian(x1, x2);
      const Eigen::Matrix<double, 6, 6> M = jet_pushforward(J, B.geom.q1);
      const Eigen::Matrix<double, 6, 1> par = jets.segment<6>(6 * pt).transpose();
      const Eigen::Matrix<double, 6, 1> phys = M * par;

      const Vec2 x = F.at(x1, x2);
      const double uv = u.value(x);
      const Vec2 ug = u.gradient(x);
      const Eigen::Vector3d uh = u.hessian(x);
      const double dv = phys[0] - uv;
      const double d1 = phys[1] - ug.x(), d2 = phys[2] - ug.y();
      const double h11 = phys[3] - uh[0], h12 = phys[4] - uh[1], h22 = phys[5] - uh[2];

      const double m = gauss.w[pt] * std::abs(J.determinant());
      e2 += m * dv * dv;
      eh1 += m * (d1 * d1 + d2 * d2);
      eh2 += m * (h11 * h11 + 2 * h12 * h12 + h22 * h22);
      u2 += m * uv * uv;
      uh1 += m * ug.squaredNorm();
      uh2 += m * (uh[0] * uh[0] + 2 * uh[1] * uh[1] + uh[2] * uh[2]);
    }
  }
  rep.l2_abs = std::sqrt(e2);
  rep.h1_abs = std::sqrt(eh1);
  rep.h2_abs = std::sqrt(eh2);
  rep.u_l2 = std::sqrt(u2);
  rep.u_h1 = std::sqrt(uh1);
  rep.u_h2 = std::sqrt(uh2);
  rep.l2_rel = rep.u_l2 > 0 ? rep.l2_abs / rep.u_l2 : rep.l2_abs;
  rep.h1_rel = rep.u_h1 > 0 ? rep.h1_abs / rep.u_h1 : rep.h1_abs;
  rep.h2_rel = rep.u_h2 > 0 ? rep.h2_abs / rep.u_h2 : rep.h2_abs;
  return rep;
}

}  // namespace bsq
