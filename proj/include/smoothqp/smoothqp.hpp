#pragma once

// Dense differentiable QP toolkit: primal-dual interior-point solvers for
// standard and elastic (ℓ1-penalized) quadratic programs, central-path
// relaxation at a chosen barrier level, and implicit-function-theorem
// gradients through the solution.

#include "smoothqp/dense.hpp"
#include "smoothqp/problem.hpp"
#include "smoothqp/kkt.hpp"
#include "smoothqp/solver.hpp"
#include "smoothqp/relax.hpp"
#include "smoothqp/gradients.hpp"
#include "smoothqp/demos.hpp"
