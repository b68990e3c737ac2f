#pragma once

// Manufactured solutions for the biharmonic solver and the convergence
// studies: exact value/gradient/Hessian callbacks plus the matching
// right-hand side (the bilaplacian of the solution).

#include <bsquad/interpolation.hpp>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace bsq {

struct Problem {
  std::string name;
  SmoothFunction u;
  std::function<double(const Vec2&)> rhs;
};

// Known problems: "trig", "bubble" (clamped on the unit square), "sextic",
// and "patch" whose solution (1+x+y)^m has total degree patch_degree.
inline Problem make_problem(const std::string& name, int patch_degree = 4) {
  Problem prob;
  prob.name = name;
  if (name == "trig") {
    prob.u.value = [](const Vec2& x) { return -4 * std::cos(x.x() / 2) * std::sin(x.y() / 2); };
    prob.u.gradient = [](const Vec2& x) {
      return Vec2(2 * std::sin(x.x() / 2) * std::sin(x.y() / 2), -2 * std::cos(x.x() / 2) * std::cos(x.y() / 2));
    };
    prob.u.hessian = [](const Vec2& x) {
      const double cs = std::cos(x.x() / 2) * std::sin(x.y() / 2);
      return Eigen::Vector3d(cs, std::sin(x.x() / 2) * std::cos(x.y() / 2), cs);
    };
    prob.rhs = [](const Vec2& x) { return -std::cos(x.x() / 2) * std::sin(x.y() / 2); };
  } else if (name == "bubble") {
    // 200 (x - x^2)^2 (y - y^2)^2, clamped to zero on the unit square edge.
    auto A = [](double t) { return (t - t * t) * (t - t * t); };
    auto A1 = [](double t) { return 2 * (t - t * t) * (1 - 2 * t); };
    auto A2 = [](double t) { return 2 * (1 - 6 * t + 6 * t * t); };
    auto A4 = []() { return 24.0; };
    prob.u.value = [=](const Vec2& x) { return 200 * A(x.x()) * A(x.y()); };
    prob.u.gradient = [=](const Vec2& x) {
      return Vec2(200 * A1(x.x()) * A(x.y()), 200 * A(x.x()) * A1(x.y()));
    };
    prob.u.hessian = [=](const Vec2& x) {
      return Eigen::Vector3d(200 * A2(x.x()) * A(x.y()), 200 * A1(x.x()) * A1(x.y()), 200 * A(x.x()) * A2(x.y()));
    };
    prob.rhs = [=](const Vec2& x) {
      return 200 * (A4() * A(x.y()) + 2 * A2(x.x()) * A2(x.y()) + A(x.x()) * A4());
    };
  } else if (name == "sextic") {
    // u = (x^3 + 5 y^2 - 10 y^3 + y^4)^2 / 4.
    auto g = [](double x, double y) { return x * x * x + 5 * y * y - 10 * y * y * y + y * y * y * y; };
    auto gy = [](double y) { return 10 * y - 30 * y * y + 4 * y * y * y; };
    prob.u.value = [=](const Vec2& p) {
      const double v = g(p.x(), p.y());
      return 0.25 * v * v;
    };
    prob.u.gradient = [=](const Vec2& p) {
      const double v = g(p.x(), p.y());
      return Vec2(0.5 * v * 3 * p.x() * p.x(), 0.5 * v * gy(p.y()));
    };
    prob.u.hessian = [=](const Vec2& p) {
      const double x = p.x(), y = p.y();
      const double v = g(x, y);
      const double gx = 3 * x * x;
      const double gyy = 10 - 60 * y + 12 * y * y;
      return Eigen::Vector3d(0.5 * (gx * gx + v * 6 * x), 0.5 * gx * gy(y), 0.5 * (gy(y) * gy(y) + v * gyy));
    };
    prob.rhs = [](const Vec2& p) {
      const double x = p.x(), y = p.y();
      return 12 * x * x * x + 90 * x * x + 72 * x * y * y - 360 * x * y + 60 * x + 420 * y * y * y * y -
             4200 * y * y * y + 9900 * y * y - 3000 * y + 150;
    };
  } else if (name == "patch") {
    const int m = patch_degree;
    if (m < 1) throw std::invalid_argument("make_problem: patch degree must be positive");
    prob.name = "patch" + std::to_string(m);
    prob.u.value = [=](const Vec2& x) { return std::pow(1 + x.x() + x.y(), m); };
    prob.u.gradient = [=](const Vec2& x) {
      const double d = m * std::pow(1 + x.x() + x.y(), m - 1);
      return Vec2(d, d);
    };
    prob.u.hessian = [=](const Vec2& x) {
      const double d = (m < 2) ? 0.0 : m * (m - 1) * std::pow(1 + x.x() + x.y(), m - 2);
      return Eigen::Vector3d(d, d, d);
    };
    prob.rhs = [=](const Vec2& x) {
      if (m < 4) return 0.0;
      return 4.0 * m * (m - 1) * (m - 2) * (m - 3) * std::pow(1 + x.x() + x.y(), m - 4);
    };
  } else {
    throw std::invalid_argument("make_problem: unknown problem '" + name + "'");
  }
  return prob;
}

}  // namespace bsq
