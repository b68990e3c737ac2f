// Command line front end: dump the element coefficient tables for a degree,
// or run an interpolation / biharmonic convergence study and emit CSV.

#include <bsquad/bsquad.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace bsq;

namespace {

std::string format_tables(int p, int k) {
  const std::array<Vec2, 4> unit = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  const LocalBasis B = build_basis(unit, p, k);
  std::ostringstream os;
  char buf[64];
  os << "# degree " << B.p << ", segments " << B.k << ", " << B.n << " b-splines per direction, " << B.nb()
     << " basis functions\n";
  os << "# knots:";
  for (double t : B.kv.knots) {
    std::snprintf(buf, sizeof(buf), " %.17g", t);
    os << buf;
  }
  os << "\n# columns are the first parameter, top row is the highest second index\n";
  for (int f = 0; f < B.nb(); ++f) {
    os << "\n" << dof_label(B.dofs[f], B.face_per_dir) << "\n";
    const Table D = to_display(B.tables[f]);
    for (int r = 0; r < D.rows(); ++r) {
      for (int c = 0; c < D.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", D(r, c));
        os << (c ? " " : "") << buf;
      }
      os << "\n";
    }
  }
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"C1 quadrilateral spline elements: element tables and convergence studies"};

  int degree = 5;
  int segments = -1;
  int levels = 3;
  unsigned seed = 0;
  std::string generate = "unit-square-grid:2";
  std::string mesh_path, out_path, write_mesh_path;
  std::string problem = "trig";
  std::string weak_form = "laplacian";
  bool dump_tables = false;
  bool interpolation_only = false;

  app.add_option("--degree", degree, "spline degree (3, 4, 5 use the closed-form element)");
  app.add_option("--segments", segments, "segments per direction; default pairs with the degree");
  app.add_option("--levels", levels, "number of refinement levels in a study");
  app.add_option("--generate", generate, "mesh generator spec, e.g. unit-square-grid:4 or trapezoid:1,0.2");
  app.add_option("--mesh", mesh_path, "load the base mesh from a JSON file instead of generating one");
  app.add_option("--problem", problem, "manufactured solution: trig, bubble, sextic, patch");
  app.add_option("--weak-form", weak_form, "bilinear form: laplacian or hessian");
  app.add_option("--out", out_path, "output file; stdout when omitted");
  app.add_option("--seed", seed, "seed for randomized generators");
  app.add_option("--write-mesh", write_mesh_path, "write the base mesh as JSON and continue");
  app.add_flag("--dump-tables", dump_tables, "print the element coefficient tables and exit");
  app.add_flag("--interpolation-only", interpolation_only, "study the interpolation operator instead of solving");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump_tables) {
      const int k = segments < 0 ? std::max(1, 6 - degree) : segments;
      write_output(out_path, format_tables(degree, k));
      return 0;
    }

    StudyConfig cfg;
    cfg.degree = degree;
    cfg.segments = segments;
    cfg.levels = levels;
    cfg.generate = generate;
    cfg.problem = problem;
    cfg.form = weak_form_from_string(weak_form);
    cfg.interpolation_only = interpolation_only;
    cfg.seed = seed;
    if (!mesh_path.empty()) {
      cfg.base_mesh = load_mesh(mesh_path);
      cfg.has_base_mesh = true;
    }
    if (!write_mesh_path.empty()) {
      const std::vector<QuadMesh> meshes = study_meshes(cfg);
      save_mesh(meshes[0], write_mesh_path);
    }

    const StudyResult res = run_convergence(cfg);
    write_output(out_path, to_csv(res));

    if (!out_path.empty() && res.rows.size() >= 2) {
      std::vector<double> h, el, e2, e1s, e2s;
      bool positive = true;
      for (const StudyRow& r : res.rows) {
        h.push_back(r.h);
        el.push_back(r.norms.linf);
        e2.push_back(r.norms.l2_rel);
        e1s.push_back(r.norms.h1_rel);
        e2s.push_back(r.norms.h2_rel);
        positive = positive && r.norms.linf > 0 && r.norms.l2_rel > 0 && r.norms.h1_rel > 0 && r.norms.h2_rel > 0;
      }
      std::printf("%s, degree %d, %d levels, %d dofs on the finest level\n", res.problem.c_str(), res.degree,
                  static_cast<int>(res.rows.size()), res.rows.back().ndof);
      if (positive)
        std::printf("observed orders: max %.2f, l2 %.2f, h1 %.2f, h2 %.2f\n", least_squares_rate(h, el),
                    least_squares_rate(h, e2), least_squares_rate(h, e1s), least_squares_rate(h, e2s));
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
