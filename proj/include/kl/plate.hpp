#pragma once

// Kirchhoff-Love plate: kinematics, energy and gradient.
//
//   gamma_ab = (u_a,b + u_b,a) / 2 + w,a w,b / 2
//   kappa_ab = -w,ab
//   J = 1/2 <H gamma, gamma> + 1/2 <h kappa, kappa> - <w, P> - <u_a, P_a> - traction terms

#include "kl/grid.hpp"
#include "kl/material.hpp"
#include "kl/model.hpp"

namespace kl {

struct PlateLoads {
    ScalarField P, P1, P2;
    // Traction data; must vanish away from traction-tagged nodes.
    ScalarField Pt, Pt1, Pt2;
};

PlateLoads zero_loads(const Grid& g);
void validate_loads(const Grid& g, const PlateLoads& loads);
double load_magnitude(const PlateLoads& loads);

// Stencil policies of the energy operators. All use the summation closure so
// that discrete integration by parts is exact. Curvatures reflect w across
// clamped edges; slopes keep one-sided boundary rows, which keeps the slope
// operator injective on interior deflections (a reflected, zeroed boundary row
// admits an odd-odd checkerboard kernel on grids with an odd node count).
StencilPolicy displacement_policy();
StencilPolicy deflection_policy();
StencilPolicy slope_policy();

EnergyModel plate_model(const Grid& g, const PlateMaterial& material, const PlateLoads& loads);

TensorField2x2 membrane_strain(const Grid& g, const DisplacementField& u);
TensorField2x2 bending_strain(const Grid& g, const DisplacementField& u);

EnergyBreakdown energy(const Grid& g, const DisplacementField& u, const PlateMaterial& material,
                       const PlateLoads& loads);
// Exact gradient of the discrete energy; zero on clamped nodes.
DisplacementField energy_gradient(const Grid& g, const DisplacementField& u, const PlateMaterial& material,
                                  const PlateLoads& loads);

}  // namespace kl
