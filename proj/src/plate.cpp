#include "kl/plate.hpp"

#include "kl/linalg.hpp"

#include <cmath>

namespace kl {

PlateLoads zero_loads(const Grid& g) {
    return {make_scalar(g), make_scalar(g), make_scalar(g), make_scalar(g), make_scalar(g), make_scalar(g)};
}

void validate_loads(const Grid& g, const PlateLoads& loads) {
    const ScalarField* all[] = {&loads.P, &loads.P1, &loads.P2, &loads.Pt, &loads.Pt1, &loads.Pt2};
    for (const ScalarField* f : all) {
        require_same_grid(g.id(), f->grid, "loads");
        if (!f->v.allFinite()) throw Error("plate.loads", "non-finite load values");
    }
    for (const ScalarField* f : {&loads.Pt, &loads.Pt1, &loads.Pt2})
        for (int k = 0; k < g.size(); ++k)
            if (f->v[k] != 0.0 && g.tag(k) != NodeTag::traction)
                throw Error("plate.loads", "traction data on a node that is not on a traction edge (node " +
                                               std::to_string(k) + ")");
}

double load_magnitude(const PlateLoads& loads) {
    double m = 0.0;
    for (const ScalarField* f : {&loads.P, &loads.P1, &loads.P2, &loads.Pt, &loads.Pt1, &loads.Pt2})
        if (f->v.size() > 0) m = std::max(m, f->v.cwiseAbs().maxCoeff());
    return m;
}

StencilPolicy displacement_policy() { return {Closure::summation, false}; }
StencilPolicy deflection_policy() { return {Closure::summation, true}; }
StencilPolicy slope_policy() { return {Closure::summation, false}; }

EnergyModel plate_model(const Grid& g, const PlateMaterial& material, const PlateLoads& loads) {
    validate_loads(g, loads);
    const int n = g.size();
    const StencilPolicy pu = displacement_policy(), pw = deflection_policy();
    const SpMat dxu = g.d_x(pu), dyu = g.d_y(pu);
    const SpMat dxw = g.d_x(slope_policy()), dyw = g.d_y(slope_policy());
    const SpMat dxx = g.d_xx(pw), dyy = g.d_yy(pw), dxy = g.d_xy(pw);
    const SpMat sdyu = (1.0 / kSqrt2) * dyu, sdxu = (1.0 / kSqrt2) * dxu;
    const SpMat mxx = -dxx, myy = -dyy, mxy = (-kSqrt2) * dxy;

    const std::vector<int> s3 = {n, n, n}, s2 = {n, n};
    EnergyModel m;
    m.kind = "plate";
    m.grid = g;
    m.L_theta = linalg::blocks({{&dxu, nullptr, nullptr}, {nullptr, &dyu, nullptr}, {&sdyu, &sdxu, nullptr}}, s3, s3);
    m.L_phi = linalg::blocks({{nullptr, nullptr, &dxw}, {nullptr, nullptr, &dyw}}, s2, s3);
    m.L_kappa = linalg::blocks({{nullptr, nullptr, &mxx}, {nullptr, nullptr, &myy}, {nullptr, nullptr, &mxy}}, s3, s3);
    m.omega = g.weights();
    m.membrane.assign(static_cast<std::size_t>(n), material.membrane);
    m.bending.assign(static_cast<std::size_t>(n), material.bending);
    m.membrane_inverse.assign(static_cast<std::size_t>(n), material.membrane_inverse);

    const Vec& w = g.weights();
    const Vec& tw = g.traction_weights();
    m.load.resize(3 * n);
    m.load << w.cwiseProduct(loads.P1.v) + tw.cwiseProduct(loads.Pt1.v),
        w.cwiseProduct(loads.P2.v) + tw.cwiseProduct(loads.Pt2.v), w.cwiseProduct(loads.P.v) + tw.cwiseProduct(loads.Pt.v);
    m.load_magnitude = load_magnitude(loads);

    m.eliminate_clamped();
    return m;
}

namespace {

EnergyModel geometry_only(const Grid& g) {
    return plate_model(g, build_material(1.0, 0.0, 1.0), zero_loads(g));
}

}  // namespace

TensorField2x2 membrane_strain(const Grid& g, const DisplacementField& u) {
    require_same_grid(g.id(), u.w.grid, "membrane_strain");
    return mandel_to_tensor(g, geometry_only(g).strains(to_dofs(u)).gamma);
}

TensorField2x2 bending_strain(const Grid& g, const DisplacementField& u) {
    require_same_grid(g.id(), u.w.grid, "bending_strain");
    return mandel_to_tensor(g, geometry_only(g).strains(to_dofs(u)).kappa);
}

EnergyBreakdown energy(const Grid& g, const DisplacementField& u, const PlateMaterial& material,
                       const PlateLoads& loads) {
    require_same_grid(g.id(), u.w.grid, "energy");
    return plate_model(g, material, loads).energy(to_dofs(u));
}

DisplacementField energy_gradient(const Grid& g, const DisplacementField& u, const PlateMaterial& material,
                                  const PlateLoads& loads) {
    require_same_grid(g.id(), u.w.grid, "energy_gradient");
    return from_dofs(g, plate_model(g, material, loads).gradient(to_dofs(u)));
}

}  // namespace kl
