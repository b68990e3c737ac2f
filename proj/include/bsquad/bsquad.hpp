#pragma once

#include <bsquad/geometry.hpp>
#include <bsquad/spline_basis.hpp>
#include <bsquad/quadrature.hpp>
#include <bsquad/quad_mesh.hpp>
#include <bsquad/mesh_gen.hpp>
#include <bsquad/element.hpp>
#include <bsquad/global_space.hpp>
#include <bsquad/interpolation.hpp>
#include <bsquad/problems.hpp>
#include <bsquad/error_norms.hpp>
#include <bsquad/biharmonic.hpp>
#include <bsquad/study.hpp>
