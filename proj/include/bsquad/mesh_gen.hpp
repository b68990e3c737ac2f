#pragma once

// Built-in mesh generators, addressable as "name" or "name:param1,param2".
//
//   unit-square-grid:n        n x n grid on the unit square
//   l-shape                   three unit quads in an L
//   trapezoid:level[,slant]   congruent-trapezoid partition of the unit square
//                             (4*2^level columns/rows); regenerated per level,
//                             these meshes are deliberately non-nested
//   perturbed-grid:n[,mag]    n x n grid with interior vertices jittered by
//                             uniform(-mag, mag)/n per coordinate (seeded)
//   extraordinary-vertex:v    fan of v quads around one interior vertex of
//                             valence v
//   mixed-valence             five quads with a boundary valence-5 vertex
//                             and an interior valence-3 vertex

#include <bsquad/quad_mesh.hpp>

#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace bsq {

inline QuadMesh generate_unit_square_grid(int n) {
  if (n < 1) throw std::invalid_argument("unit-square-grid: need n >= 1");
  QuadMesh mesh;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) mesh.quads.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  return mesh;
}

inline QuadMesh generate_l_shape() {
  QuadMesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}, {0, 2}, {1, 2}};
  mesh.quads = {{0, 1, 4, 3}, {1, 2, 5, 4}, {3, 4, 7, 6}};
  return mesh;
}

// Alternating-slant trapezoid columns: every quad is congruent to one of two
// mirror-image trapezoids, at every level, but the level-(L+1) mesh is not a
// subdivision of the level-L mesh.
inline QuadMesh generate_trapezoid(int level, double slant = 0.15) {
  if (level < 0 || level > 8) throw std::invalid_argument("trapezoid: level must be in 0..8");
  if (!(std::abs(slant) < 0.45)) throw std::invalid_argument("trapezoid: slant too large for convexity");
  const int n = 4 << level;
  QuadMesh mesh;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      double y = static_cast<double>(j) / n;
      if (j > 0 && j < n) y += (((i + j) % 2 == 0) ? slant : -slant) / n;
      mesh.vertices.emplace_back(static_cast<double>(i) / n, y);
    }
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) mesh.quads.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  return mesh;
}

inline QuadMesh generate_perturbed_grid(int n, double magnitude, unsigned seed) {
  if (n < 1) throw std::invalid_argument("perturbed-grid: need n >= 1");
  if (magnitude < 0 || magnitude > 0.3) throw std::invalid_argument("perturbed-grid: magnitude must be in [0, 0.3]");
  QuadMesh mesh = generate_unit_square_grid(n);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-magnitude, magnitude);
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) {
      Vec2& v = mesh.vertices[j * (n + 1) + i];
      v.x() += unif(rng) / n;
      v.y() += unif(rng) / n;
    }
  return mesh;
}

inline QuadMesh generate_extraordinary_vertex(int valence) {
  if (valence < 3 || valence > 12) throw std::invalid_argument("extraordinary-vertex: valence must be in 3..12");
  QuadMesh mesh;
  mesh.vertices.emplace_back(0.0, 0.0);
  // Ring alternates quad corners (radius 1.25) and edge-opposite vertices
  // (radius 0.8); quad i spans the sector around angle 2*pi*i/valence.
  for (int i = 0; i < valence; ++i) {
    const double th = 2.0 * M_PI * i / valence;
    const double tm = th - M_PI / valence;
    mesh.vertices.emplace_back(1.25 * std::cos(th), 1.25 * std::sin(th));   // corner C_i -> index 1+2i
    mesh.vertices.emplace_back(0.8 * std::cos(tm), 0.8 * std::sin(tm));     // mid M_{i-1/2} -> index 2+2i
  }
  for (int i = 0; i < valence; ++i) {
    const int c_i = 1 + 2 * i;
    const int m_prev = 2 + 2 * i;
    const int m_next = 2 + 2 * ((i + 1) % valence);
    mesh.quads.push_back({0, m_prev, c_i, m_next});
  }
  return mesh;
}

// Five quads, one extraordinary vertex of each kind: P sits on the boundary
// with four quads fanned over it (valence 5), and a fifth quad closes over
// the spoke vertex A, making A interior with valence 3. (An interior
// valence-5 vertex of a 5-quad mesh would force the closed fan, whose other
// vertices are all boundary-regular.) The outer vertices sit on a circle so
// the domain is convex; a reentrant corner would degrade the duality
// argument that solver studies on this mesh rely on. The radius is several
// units so that study solutions vary across the domain and errors on the
// finest levels stay well above roundoff.
inline QuadMesh generate_mixed_valence() {
  QuadMesh mesh;
  auto on_circle = [](double radius, double deg) {
    return Vec2(radius * std::cos(deg * M_PI / 180.0), radius * std::sin(deg * M_PI / 180.0));
  };
  mesh.vertices = {
      {0.0, 0.0},              // 0: P, valence 5
      {3.0, 0.0},              // 1
      on_circle(1.62, 43.0),   // 2: A, interior, valence 3
      on_circle(3.0, 91.0),    // 3
      on_circle(3.0, 136.0),   // 4
      {-3.0, 0.0},             // 5
      on_circle(3.0, 21.0),    // 6
      on_circle(3.0, 69.0),    // 7
      on_circle(3.0, 110.0),   // 8
      on_circle(3.0, 158.5),   // 9
      on_circle(3.0, 47.0),    // 10: outer corner of the closing quad
  };
  mesh.quads = {
      {0, 1, 6, 2}, {0, 2, 7, 3}, {0, 3, 8, 4}, {0, 4, 9, 5}, {2, 6, 10, 7},
  };
  return mesh;
}

// Parse "name" or "name:p1,p2,..." and dispatch. The seed only affects the
// perturbed-grid generator.
inline QuadMesh generate_mesh(const std::string& spec, unsigned seed = 0) {
  std::string name = spec;
  std::vector<double> params;
  if (const auto colon = spec.find(':'); colon != std::string::npos) {
    name = spec.substr(0, colon);
    std::stringstream ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("generate_mesh: bad parameter '" + tok + "' in '" + spec + "'");
      }
      if (used != tok.size()) throw std::invalid_argument("generate_mesh: bad parameter '" + tok + "' in '" + spec + "'");
      params.push_back(value);
    }
  }
  auto ival = [&](size_t i, int dflt) { return i < params.size() ? static_cast<int>(std::lround(params[i])) : dflt; };
  auto dval = [&](size_t i, double dflt) { return i < params.size() ? params[i] : dflt; };

  QuadMesh mesh;
  if (name == "unit-square-grid") {
    mesh = generate_unit_square_grid(ival(0, 1));
  } else if (name == "l-shape") {
    mesh = generate_l_shape();
  } else if (name == "trapezoid") {
    mesh = generate_trapezoid(ival(0, 0), dval(1, 0.15));
  } else if (name == "perturbed-grid") {
    mesh = generate_perturbed_grid(ival(0, 2), dval(1, 0.15), seed);
  } else if (name == "extraordinary-vertex") {
    mesh = generate_extraordinary_vertex(ival(0, 3));
  } else if (name == "mixed-valence") {
    mesh = generate_mixed_valence();
  } else {
    throw std::invalid_argument("generate_mesh: unknown generator '" + name + "'");
  }
  validate_mesh(mesh);
  return mesh;
}

}  // namespace bsq
