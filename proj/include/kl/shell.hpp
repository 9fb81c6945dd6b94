#pragma once

// Shell middle-surface geometry and moderately-large-rotation kinematics.
//
// The surface is r(xi1, xi2) over the parameter grid. With a_a = r,a:
//   a_ab = a_a . a_b, n = a_1 x a_2 / |a_1 x a_2|, b_ab = n . r,ab,
//   b_a^b = b_al a^lb, Gamma_{gab} = a_g . r,ab, Gamma^l_ab = a^lg Gamma_{gab}.
// Displacements are covariant components u_a plus the normal deflection w.
//   theta_ab = (u_a|b + u_b|a) / 2 - b_ab w
//   phi_a    = w,a + b_a^b u_b
//   gamma_ab = theta_ab + phi_a phi_b / 2
//   kappa_ab = -w|ab - b^l_a|b u_l - b_a^l u_l|b - b_b^l u_l|a + b_a^l b_lb w

#include "kl/grid.hpp"
#include "kl/material.hpp"
#include "kl/model.hpp"
#include "kl/plate.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kl {

using Vec3d = Eigen::Vector3d;

struct Surface {
    std::string name;
    std::function<Vec3d(double, double)> r;
    // First partials (r,1, r,2) and second partials (r,11, r,12, r,22).
    std::function<std::array<Vec3d, 2>(double, double)> dr;
    std::function<std::array<Vec3d, 3>(double, double)> ddr;
    // Analytic Gauss curvature, when known.
    std::function<double(double, double)> gauss;
};

Surface plane_surface();
Surface cylinder_surface(double R);
// r = R (cos xi1 cos xi2, cos xi1 sin xi2, sin xi1); xi1 is the latitude.
Surface sphere_patch_surface(double R);
// r = (xi1, xi2, a xi1^2 + b xi2^2).
Surface paraboloid_surface(double a, double b);

// Index helpers for three-index symbols stored as 8 nodal vectors.
constexpr std::size_t sym3(int i, int j, int k) { return static_cast<std::size_t>(4 * i + 2 * j + k); }

struct SurfaceGeometry {
    GridId grid = 0;
    std::vector<Mat2> a, a_inv, b, b_mixed;  // b_mixed(a, b) = b_a^b
    Vec sqrt_a;
    std::vector<Vec3d> normal;
    std::array<Vec, 8> christoffel_first;  // Gamma_{gab} at sym3(g, a, b)
    std::array<Vec, 8> christoffel;        // Gamma^l_ab at sym3(l, a, b)
    std::array<Vec, 8> b_derivative;       // b^l_{a|b} at sym3(l, a, b)

    double gauss_curvature(int k) const { return b[static_cast<std::size_t>(k)].determinant() / a[static_cast<std::size_t>(k)].determinant(); }
};

SurfaceGeometry build_geometry(const Grid& g, const Surface& s);
// Positions sampled at the grid nodes (node order); derivatives by finite differences.
SurfaceGeometry build_geometry_sampled(const Grid& g, const std::vector<Vec3d>& positions);

struct GeometryDiagnostics {
    double sqrt_a_min = 0.0, sqrt_a_max = 0.0;
    double metric_inverse_error = 0.0;   // max |a a^-1 - I| (Frobenius)
    double normal_unit_error = 0.0;      // max ||n| - 1|
    double b_asymmetry = 0.0;            // max |b_12 - b_21|
    double christoffel_asymmetry = 0.0;  // max |Gamma^l_12 - Gamma^l_21|
    double gauss_min = 0.0, gauss_max = 0.0;
    std::optional<double> gauss_error;   // max deviation from the analytic value
};

GeometryDiagnostics geometry_diagnostics(const Grid& g, const SurfaceGeometry& geom, const Surface* s = nullptr);

struct ShellMaterial {
    std::vector<Mat3> membrane, bending, membrane_inverse;
};

ShellMaterial shell_material(const Grid& g, const SurfaceGeometry& geom, double E, double nu, double h);

EnergyModel shell_model(const Grid& g, const SurfaceGeometry& geom, const ShellMaterial& material,
                        const PlateLoads& loads);

struct ShellStrains {
    TensorField2x2 theta, gamma, kappa;
    VectorField2 phi;
};

ShellStrains shell_strains(const EnergyModel& model, const DisplacementField& u);
EnergyBreakdown shell_energy(const EnergyModel& model, const DisplacementField& u);

}  // namespace kl
