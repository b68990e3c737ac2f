#pragma once

// Univariate polynomial and spline bases on [0, 1]: Bernstein evaluation,
// open knot vectors with uniform interior knots, Greville abscissae, B-spline
// evaluation with derivatives and one-sided limits, collocation matrices, and
// Greville-collocation dual functionals.

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsq {

// Values and derivatives of the degree-p Bernstein basis at xi.
// Returns a (p+1) x (nders+1) matrix; column d holds the d-th derivatives.
inline Eigen::MatrixXd bernstein_eval(int p, double xi, int nders = 2) {
  if (p < 0) throw std::invalid_argument("bernstein_eval: degree must be nonnegative");
  if (nders < 0 || nders > 2) throw std::invalid_argument("bernstein_eval: derivative order must be 0, 1, or 2");

  // Triangular recurrence b_{j,r} = xi b_{j-1,r-1} + (1-xi) b_{j,r-1},
  // evaluated in place with j descending.
  auto values = [xi](int q) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(std::max(q, 0) + 1);
    if (q < 0) return b;
    b[0] = 1.0;
    for (int r = 1; r <= q; ++r)
      for (int j = r; j >= 0; --j) b[j] = (j > 0 ? xi * b[j - 1] : 0.0) + (j < r ? (1.0 - xi) * b[j] : 0.0);
    return b;
  };

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p + 1, nders + 1);
  out.col(0) = values(p);
  if (nders >= 1) {
    const Eigen::VectorXd lo = values(p - 1);
    for (int j = 0; j <= p; ++j) {
      double d = 0.0;
      if (j >= 1 && j - 1 <= p - 1) d += lo[j - 1];
      if (j <= p - 1) d -= lo[j];
      out(j, 1) = p * d;
    }
  }
  if (nders >= 2) {
    const Eigen::VectorXd lo = values(p - 2);
    for (int j = 0; j <= p; ++j) {
      double d = 0.0;
      if (j >= 2 && j - 2 <= p - 2) d += lo[j - 2];
      if (j >= 1 && j - 1 <= p - 2) d -= 2.0 * lo[j - 1];
      if (j <= p - 2) d += lo[j];
      out(j, 2) = p * (p - 1) * d;
    }
  }
  return out;
}

struct KnotVector {
  int degree = 0;
  std::vector<double> knots;  // nondecreasing, open (first/last knot repeated degree+1 times)

  int num_basis() const { return static_cast<int>(knots.size()) - degree - 1; }
  double domain_begin() const { return knots[degree]; }
  double domain_end() const { return knots[num_basis()]; }
};

// Open knot vector on [0, 1] with interior knots i/k, i = 1..k-1, each of
// multiplicity mult.
inline KnotVector uniform_open_knots(int p, int k, int mult) {
  if (p < 1) throw std::invalid_argument("uniform_open_knots: degree must be positive");
  if (k < 1) throw std::invalid_argument("uniform_open_knots: segment count must be positive");
  if (mult < 1 || mult > p + 1) throw std::invalid_argument("uniform_open_knots: invalid interior multiplicity");
  KnotVector kv;
  kv.degree = p;
  kv.knots.assign(p + 1, 0.0);
  for (int i = 1; i < k; ++i) kv.knots.insert(kv.knots.end(), mult, static_cast<double>(i) / k);
  kv.knots.insert(kv.knots.end(), p + 1, 1.0);
  return kv;
}

// Spline space S^{p,r}_k: degree p, k uniform segments, smoothness r at the
// interior breakpoints. Supports the two smoothness grades the element
// constructions use.
inline KnotVector make_knots(int p, int k, int r) {
  if (r != p - 1 && r != p - 2) throw std::invalid_argument("make_knots: smoothness must be p-1 or p-2");
  if (r < 0) throw std::invalid_argument("make_knots: smoothness must be nonnegative");
  return uniform_open_knots(p, k, p - r);
}

inline std::vector<double> greville(const KnotVector& kv) {
  const int nb = kv.num_basis();
  if (nb <= 0) throw std::invalid_argument("greville: empty basis");
  std::vector<double> g(nb, 0.0);
  for (int i = 0; i < nb; ++i) {
    double s = 0.0;
    for (int j = 1; j <= kv.degree; ++j) s += kv.knots[i + j];
    g[i] = s / kv.degree;
  }
  return g;
}

enum class Side { Left, Right };

// Index s of the knot span containing xi, honoring the requested one-sided
// limit when xi sits on a knot. The span [knots[s], knots[s+1]) is nonempty.
inline int find_span(const KnotVector& kv, double xi, Side side = Side::Right) {
  const int p = kv.degree;
  const int nb = kv.num_basis();
  const auto& U = kv.knots;
  const double lo = U[p], hi = U[nb];
  if (xi < lo - 1e-12 || xi > hi + 1e-12) throw std::invalid_argument("find_span: point outside knot domain");
  xi = std::clamp(xi, lo, hi);

  int s;
  if (side == Side::Right) {
    if (xi >= hi) {
      s = nb - 1;
      while (s > p && U[s] == U[s + 1]) --s;
    } else {
      s = static_cast<int>(std::upper_bound(U.begin(), U.end(), xi) - U.begin()) - 1;
    }
  } else {
    if (xi <= lo) {
      s = p;
      while (s < nb - 1 && U[s] == U[s + 1]) ++s;
    } else {
      s = static_cast<int>(std::lower_bound(U.begin(), U.end(), xi) - U.begin()) - 1;
    }
  }
  return std::clamp(s, p, nb - 1);
}

namespace detail {

// Derivatives of the p+1 B-splines supported on one span (basis function
// indices span-p .. span). ders(d, j) is the d-th derivative of function
// span-p+j. Standard triangular-table algorithm.
inline Eigen::MatrixXd ders_basis_funs(const KnotVector& kv, int span, double xi, int nders) {
  const int p = kv.degree;
  const auto& U = kv.knots;
  const int nd = std::min(nders, p);

  Eigen::MatrixXd ndu(p + 1, p + 1);
  Eigen::VectorXd left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = xi - U[span + 1 - j];
    right[j] = U[span + j] - xi;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(nders + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int d = 1; d <= nd; ++d) {
      double val = 0.0;
      const int rk = r - d, pk = p - d;
      if (r >= d) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        val = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? d - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        val += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, d) = -a(s1, d - 1) / ndu(pk + 1, r);
        val += a(s2, d) * ndu(r, pk);
      }
      ders(d, r) = val;
      std::swap(s1, s2);
    }
  }

  double factor = p;
  for (int d = 1; d <= nd; ++d) {
    for (int j = 0; j <= p; ++j) ders(d, j) *= factor;
    factor *= (p - d);
  }
  return ders;
}

}  // namespace detail

// Values and derivatives of every basis function at xi, as a dense
// num_basis x (nders+1) matrix (column d = d-th derivatives). At interior
// knots the limit is taken from the requested side.
inline Eigen::MatrixXd bspline_eval(const KnotVector& kv, double xi, int nders = 2, Side side = Side::Right) {
  if (nders < 0 || nders > 2) throw std::invalid_argument("bspline_eval: derivative order must be 0, 1, or 2");
  const int p = kv.degree;
  const int nb = kv.num_basis();
  const int span = find_span(kv, xi, side);
  const Eigen::MatrixXd local = detail::ders_basis_funs(kv, span, std::clamp(xi, kv.domain_begin(), kv.domain_end()), nders);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nb, nders + 1);
  for (int j = 0; j <= p; ++j)
    for (int d = 0; d <= nders; ++d) out(span - p + j, d) = local(d, j);
  return out;
}

// Values of all basis functions at the given points: (points x num_basis).
inline Eigen::MatrixXd collocation_matrix(const KnotVector& kv, const std::vector<double>& pts) {
  Eigen::MatrixXd C(static_cast<int>(pts.size()), kv.num_basis());
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) C.row(i) = bspline_eval(kv, pts[i], 0).col(0).transpose();
  return C;
}

// Dual functionals realized by collocation at the Greville abscissae: returns
// the coefficient vector of the spline interpolating f there. For f in the
// space this recovers its B-spline coefficients exactly.
inline Eigen::VectorXd dual_functionals(const KnotVector& kv, const std::function<double(double)>& f) {
  const std::vector<double> g = greville(kv);
  Eigen::MatrixXd C = collocation_matrix(kv, g);
  Eigen::VectorXd rhs(static_cast<int>(g.size()));
  for (int i = 0; i < rhs.size(); ++i) rhs[i] = f(g[i]);
  return C.partialPivLu().solve(rhs);
}

// Coefficients in `super` of every basis function of `sub`, for nested spaces
// (same degree and breakpoints, `super` with more knots, or lower-degree `sub`
// composed with multiplication handled by the caller). Computed by Greville
// collocation in `super`, which is exact for members of `super`.
inline Eigen::MatrixXd subspace_embedding(const KnotVector& sub, const KnotVector& super) {
  const std::vector<double> g = greville(super);
  Eigen::MatrixXd vals(static_cast<int>(g.size()), sub.num_basis());
  for (int i = 0; i < static_cast<int>(g.size()); ++i) vals.row(i) = bspline_eval(sub, g[i], 0).col(0).transpose();
  return collocation_matrix(super, g).partialPivLu().solve(vals);
}

}  // namespace bsq
