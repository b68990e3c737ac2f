#include <bsquad/biharmonic.hpp>
#include <bsquad/error_norms.hpp>
#include <bsquad/interpolation.hpp>
#include <bsquad/mesh_gen.hpp>
#include <bsquad/problems.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace bsq;

TEST_CASE("weak form names parse") {
  REQUIRE(weak_form_from_string("laplacian") == WeakForm::Laplacian);
  REQUIRE(weak_form_from_string("hessian") == WeakForm::Hessian);
  REQUIRE_THROWS_AS(weak_form_from_string("energy"), std::invalid_argument);
}

TEST_CASE("solver reproduces polynomial solutions on unstructured meshes") {
  for (const char* spec : {"perturbed-grid:2", "l-shape"}) {
    const QuadMesh mesh = generate_mesh(spec, 5);
    for (int p : {3, 4, 5}) {
      const Problem prob = make_problem("patch", p);
      const GlobalSpace S = build_global_space(mesh, p);
      for (WeakForm form : {WeakForm::Laplacian, WeakForm::Hessian}) {
        const SolveReport rep = solve_biharmonic(S, prob.u, prob.rhs, form);
        REQUIRE(rep.dim == S.num_dofs());
        REQUIRE(rep.residual < 1e-9);
        const NormReport err = error_norms(S, rep.U, prob.u);
        INFO(spec << " p=" << p << (form == WeakForm::Laplacian ? " laplacian" : " hessian"));
        REQUIRE(err.linf < 1e-8);
        REQUIRE(err.l2_rel < 1e-10);
        REQUIRE(err.h2_rel < 1e-8);
      }
    }
  }
}

TEST_CASE("constraint bookkeeping matches the boundary trace dofs") {
  // 2x2 grid: 4 corner vertices pin all six jet components, 4 straight
  // boundary vertices pin five and leave the normal-normal second
  // derivative free, and every boundary edge dof is pinned.
  const GlobalSpace S = build_global_space(generate_mesh("unit-square-grid:2"), 4);
  const std::vector<char> bmark = boundary_dofs(S);
  int nb = 0;
  for (char c : bmark) nb += c;
  const Problem prob = make_problem("patch", 4);
  const SolveReport rep = solve_biharmonic(S, prob.u, prob.rhs);
  REQUIRE(rep.num_constrained == nb - 4);
  REQUIRE(rep.dim == S.num_dofs());

  // Constrained entries carry the manufactured data. The solve is exact for
  // this polynomial, so all boundary jets match it even where unpinned.
  for (int g = 0; g < S.num_dofs(); ++g)
    if (bmark[g] && S.dofs[g].kind == DofKind::VertexValue)
      REQUIRE(rep.U[g] == Catch::Approx(prob.u.value(S.dofs[g].x)).margin(1e-12));
}

TEST_CASE("the two weak forms produce the same discrete solution") {
  const Problem trig = make_problem("trig");

  // On an affine mesh the quadrature is exact and the forms differ by a null
  // Lagrangian, so the solutions agree to solver precision.
  const GlobalSpace S = build_global_space(generate_mesh("unit-square-grid:2"), 4);
  const SolveReport lap = solve_biharmonic(S, trig.u, trig.rhs, WeakForm::Laplacian);
  const SolveReport hes = solve_biharmonic(S, trig.u, trig.rhs, WeakForm::Hessian);
  REQUIRE((lap.U - hes.U).cwiseAbs().maxCoeff() < 1e-7);

  // On a non-affine mesh they agree to discretization accuracy.
  const GlobalSpace Sp = build_global_space(generate_mesh("perturbed-grid:2", 2), 4);
  const NormReport el = error_norms(Sp, solve_biharmonic(Sp, trig.u, trig.rhs, WeakForm::Laplacian).U, trig.u);
  const NormReport eh = error_norms(Sp, solve_biharmonic(Sp, trig.u, trig.rhs, WeakForm::Hessian).U, trig.u);
  REQUIRE(el.l2_rel < 1e-6);
  REQUIRE(eh.l2_rel < 1e-6);
  REQUIRE(el.l2_rel < 2 * eh.l2_rel);
  REQUIRE(eh.l2_rel < 2 * el.l2_rel);
}

TEST_CASE("solution error shrinks under refinement") {
  const Problem trig = make_problem("trig");
  const GlobalSpace coarse = build_global_space(generate_mesh("unit-square-grid:2"), 3);
  const GlobalSpace fine = build_global_space(generate_mesh("unit-square-grid:4"), 3);
  const NormReport ec = error_norms(coarse, solve_biharmonic(coarse, trig.u, trig.rhs).U, trig.u);
  const NormReport ef = error_norms(fine, solve_biharmonic(fine, trig.u, trig.rhs).U, trig.u);
  REQUIRE(ec.l2_rel < 1e-4);
  REQUIRE(ec.l2_rel / ef.l2_rel > 8);   // expected order four
  REQUIRE(ec.h2_rel / ef.h2_rel > 2);   // expected order two
}

TEST_CASE("clamped bubble solve keeps homogeneous boundary data") {
  const Problem bubble = make_problem("bubble");
  const GlobalSpace S = build_global_space(generate_mesh("unit-square-grid:3"), 4);
  const SolveReport rep = solve_biharmonic(S, bubble.u, bubble.rhs, WeakForm::Hessian);
  const std::vector<char> bmark = boundary_dofs(S);
  for (int g = 0; g < S.num_dofs(); ++g) {
    const DofKind k = S.dofs[g].kind;
    const bool first_order = k == DofKind::VertexValue || k == DofKind::VertexDx || k == DofKind::VertexDy ||
                             k == DofKind::EdgePoint || k == DofKind::EdgeNormal;
    if (bmark[g] && first_order) REQUIRE(std::abs(rep.U[g]) < 1e-13);
  }
  const NormReport err = error_norms(S, rep.U, bubble.u);
  REQUIRE(err.l2_rel < 0.01);
  REQUIRE(err.linf < 0.01);  // the solution peaks at 200/256
}
