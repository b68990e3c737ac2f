#pragma once

// Convergence-study harness: builds a mesh hierarchy (uniform refinement, or
// per-level regeneration for the non-nested trapezoid family), runs either
// the interpolation operator or the biharmonic solver on each level, and
// reports error norms, observed rates, and CSV output.

#include <bsquad/biharmonic.hpp>
#include <bsquad/error_norms.hpp>
#include <bsquad/interpolation.hpp>
#include <bsquad/mesh_gen.hpp>
#include <bsquad/problems.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsq {

struct StudyConfig {
  int degree = 5;
  int segments = -1;  // -1 means the default for the degree
  int levels = 3;
  std::string generate = "unit-square-grid:2";  // generator spec; ignored when a base mesh is given
  QuadMesh base_mesh;
  bool has_base_mesh = false;
  std::string problem = "trig";
  WeakForm form = WeakForm::Laplacian;
  bool interpolation_only = false;
  unsigned seed = 0;
};

struct StudyRow {
  int level = 0;
  double h = 0.0;
  int ndof = 0;
  NormReport norms;
  double solver_residual = 0.0;
};

struct StudyResult {
  std::string problem;
  int degree = 0;
  std::vector<StudyRow> rows;
};

// The mesh for each level. Trapezoid meshes are regenerated (the family is
// not nested); all other bases are refined uniformly.
inline std::vector<QuadMesh> study_meshes(const StudyConfig& cfg) {
  if (cfg.levels < 1) throw std::invalid_argument("study_meshes: need at least one level");
  std::vector<QuadMesh> meshes;
  if (!cfg.has_base_mesh && cfg.generate.rfind("trapezoid", 0) == 0) {
    int base_level = 0;
    std::string tail;  // extra parameters after the level, if any
    const auto colon = cfg.generate.find(':');
    if (colon != std::string::npos) {
      const std::string params = cfg.generate.substr(colon + 1);
      const auto comma = params.find(',');
      base_level = std::stoi(params.substr(0, comma));
      if (comma != std::string::npos) tail = params.substr(comma);
    }
    for (int i = 0; i < cfg.levels; ++i)
      meshes.push_back(generate_mesh("trapezoid:" + std::to_string(base_level + i) + tail, cfg.seed));
    return meshes;
  }
  meshes.push_back(cfg.has_base_mesh ? cfg.base_mesh : generate_mesh(cfg.generate, cfg.seed));
  for (int i = 1; i < cfg.levels; ++i) meshes.push_back(refine_regular(meshes.back()));
  return meshes;
}

inline StudyResult run_convergence(const StudyConfig& cfg) {
  StudyResult result;
  result.degree = cfg.degree;
  const Problem prob = make_problem(cfg.problem, cfg.degree);
  result.problem = prob.name;
  const std::vector<QuadMesh> meshes = study_meshes(cfg);
  for (int i = 0; i < cfg.levels; ++i) {
    const GlobalSpace S = build_global_space(meshes[i], cfg.degree, cfg.segments);
    StudyRow row;
    row.level = i;
    row.h = geometry_report(meshes[i]).h;
    row.ndof = S.num_dofs();
    if (cfg.interpolation_only) {
      row.norms = error_norms(S, project_global(S, prob.u), prob.u);
    } else {
      const SolveReport rep = solve_biharmonic(S, prob.u, prob.rhs, cfg.form);
      if (rep.residual > 1e-9)
        throw std::runtime_error("run_convergence: linear solver residual " + std::to_string(rep.residual));
      row.solver_residual = rep.residual;
      row.norms = error_norms(S, rep.U, prob.u);
    }
    result.rows.push_back(row);
  }
  return result;
}

// Least-squares slope of log2(err) against log2(h): the observed rate.
inline double least_squares_rate(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2)
    throw std::invalid_argument("least_squares_rate: need matching lists of at least two levels");
  const int n = static_cast<int>(h.size());
  double mx = 0, my = 0;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    if (!(h[i] > 0) || !(err[i] > 0))
      throw std::invalid_argument("least_squares_rate: sizes and errors must be positive");
    x[i] = std::log2(h[i]);
    y[i] = std::log2(err[i]);
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

inline std::string to_csv(const StudyResult& result) {
  std::string out = "level,h,ndof,err_linf,err_l2_rel,err_h1_rel,err_h2_rel,rate_linf,rate_l2,rate_h1,rate_h2\n";
  char buf[512];
  for (size_t i = 0; i < result.rows.size(); ++i) {
    const StudyRow& r = result.rows[i];
    std::snprintf(buf, sizeof(buf), "%d,%.12e,%d,%.12e,%.12e,%.12e,%.12e", r.level, r.h, r.ndof, r.norms.linf,
                  r.norms.l2_rel, r.norms.h1_rel, r.norms.h2_rel);
    out += buf;
    if (i == 0) {
      out += ",,,,";
    } else {
      const StudyRow& p = result.rows[i - 1];
      auto rate = [](double prev, double cur) { return (prev > 0 && cur > 0) ? std::log2(prev / cur) : 0.0; };
      std::snprintf(buf, sizeof(buf), ",%.4f,%.4f,%.4f,%.4f", rate(p.norms.linf, r.norms.linf),
                    rate(p.norms.l2_rel, r.norms.l2_rel), rate(p.norms.h1_rel, r.norms.h1_rel),
                    rate(p.norms.h2_rel, r.norms.h2_rel));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace bsq
