#pragma once

// Discrete energy model shared by the plate and the shell.
//
// Unknowns are stacked as x = [u1; u2; w] (3n entries, node order inside each
// block). Strain operators act linearly on x:
//   theta = L_theta x   (3n, Mandel components stacked as three n-blocks)
//   phi   = L_phi x     (2n, rotation / slope vector)
//   kappa = L_kappa x   (3n, Mandel)
// and the membrane strain is gamma = theta + q(phi) with
// q(phi) = (phi1^2 / 2, phi2^2 / 2, phi1 phi2 / sqrt(2)).
// Energies are weighted sums with node weights omega (quadrature times area
// element) and per-node 3x3 elasticity matrices.

#include "kl/grid.hpp"
#include "kl/material.hpp"

#include <string>
#include <vector>

namespace kl {

struct EnergyBreakdown {
    double G1 = 0.0;
    double G2 = 0.0;
    double F1 = 0.0;
    double J = 0.0;
};

struct DisplacementField {
    ScalarField u1, u2, w;
};

DisplacementField make_displacement(const Grid& g);
Vec to_dofs(const DisplacementField& u);
DisplacementField from_dofs(const Grid& g, const Vec& x);

struct Strains {
    Vec theta;  // 3n Mandel
    Vec phi;    // 2n
    Vec gamma;  // 3n Mandel
    Vec kappa;  // 3n Mandel
};

// Converts stacked Mandel data to a symmetric tensor field (and back).
TensorField2x2 mandel_to_tensor(const Grid& g, const Vec& m);
Vec tensor_to_mandel(const TensorField2x2& t);
VectorField2 stacked_to_vector(const Grid& g, const Vec& v);
Vec vector_to_stacked(const VectorField2& v);

struct EnergyModel {
    std::string kind;  // "plate" or "shell"
    Grid grid;
    SpMat L_theta, L_phi, L_kappa;
    Vec omega;
    std::vector<Mat3> membrane, bending, membrane_inverse;
    Vec load;                    // f, already weighted
    std::vector<char> is_free;   // per DOF
    std::vector<int> free_dofs;
    std::vector<Mat2> curvature;  // b_{ab} per node; empty for the plate
    double load_magnitude = 0.0;  // largest absolute nodal load value

    // Marks every DOF of a clamped node as eliminated and fills free_dofs.
    void eliminate_clamped();

    int nodes() const { return grid.size(); }
    int dofs() const { return 3 * grid.size(); }

    Strains strains(const Vec& x) const;
    // N = H gamma, Mandel stacked.
    Vec membrane_force(const Vec& x) const;
    EnergyBreakdown energy(const Vec& x) const;
    // Exact gradient of the discrete energy; zero on eliminated DOFs.
    Vec gradient(const Vec& x) const;
    // Hessian restricted to the free DOFs (free_dofs order).
    SpMat hessian_free(const Vec& x) const;
    // Linearised (membrane coupling off) stiffness on all DOFs.
    SpMat linear_stiffness() const;

    // Applies a per-node 3x3 matrix field to stacked Mandel data, scaled by omega
    // when `weighted` is set.
    Vec apply_nodes(const std::vector<Mat3>& m, const Vec& v, bool weighted) const;
    SpMat node_matrix(const std::vector<Mat3>& m) const;  // weighted block matrix
    Vec restrict_free(const Vec& x) const;
    Vec extend_free(const Vec& y) const;
    // Scale for load-relative tolerances; 1 when the loads vanish.
    double load_scale() const { return load_magnitude > 0.0 ? load_magnitude : 1.0; }
};

void require_finite(const Vec& x, const char* code);

}  // namespace kl
