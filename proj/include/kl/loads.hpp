#pragma once

// Load-potential tensors balancing the in-plane loads.

#include "kl/grid.hpp"
#include "kl/plate.hpp"
#include "kl/shell.hpp"

#include <optional>
#include <vector>

namespace kl {

struct TTildeResult {
    TensorField2x2 T;
    double C = 0.0;  // shift actually applied
};

// T11 = -int_{x0}^{x} P1 dx, T22 = -int_{y0}^{y} P2 dy (trapezoid along grid
// lines), T12 = 0, then T + C delta. Without C the shift is the largest
// node-wise spectral radius plus one.
TTildeResult build_t_tilde(const Grid& g, const ScalarField& P1, const ScalarField& P2,
                           std::optional<double> C = std::nullopt);

struct MinNormResult {
    Vec X;          // minimal-norm field, X = L lambda
    Vec lambda;     // potential (zero on unconstrained rows)
    double residual = 0.0;  // max |L^T W X - r| / weight over constrained rows
};

// Minimises 1/2 X^T diag(W) X subject to (L^T diag(W) X)_i = r_i for i in
// `rows`. The minimiser is X = L lambda with (L^T W L) lambda = r on those rows.
// `row_scale` (size of lambda) converts the weak residual to a pointwise one.
MinNormResult min_norm_div_solve(const SpMat& L, const Vec& W, const Vec& rhs, const std::vector<int>& rows,
                                 const Vec& row_scale);

struct T0Result {
    TensorField2x2 T;   // not symmetric in general; component (a, b) = T_ab
    double residual = 0.0;
    double norm_sq = 0.0;  // sum of weighted squared components
};

// Least-norm T with T_ab,b + P_a = 0 in the interior and T_ab n_b = Pt_a on
// traction edges, via T_ab = v_a,b and the Poisson problems for v_a.
T0Result build_t0_plate(const Grid& g, const PlateLoads& loads);
// Same construction with the covariant gradient v_l,b - Gamma^a_lb v_a and
// sqrt(a)-weighted pairings.
T0Result build_t0_shell(const Grid& g, const SurfaceGeometry& geom, const ScalarField& P1, const ScalarField& P2);

// Operator v -> T used by the builders (4n x 2n; rows ordered T11, T12, T21, T22).
SpMat t0_gradient_operator(const Grid& g, const SurfaceGeometry* geom);

}  // namespace kl
