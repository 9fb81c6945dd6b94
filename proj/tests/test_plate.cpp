#include <gtest/gtest.h>

#include "kl/plate.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace kl;

namespace {

Grid unit_grid(int n, BoundarySpec spec = {}) { return Grid::build({0.0, 1.0, 0.0, 1.0}, n, n, spec); }

// Smooth random state vanishing on the boundary (with zero normal slope for w).
DisplacementField random_state(const Grid& g, unsigned seed, double amp = 0.1) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    DisplacementField u = make_displacement(g);
    for (int k = 0; k < g.size(); ++k) {
        if (g.is_clamped(k)) continue;
        u.u1.v[k] = amp * U(rng);
        u.u2.v[k] = amp * U(rng);
        u.w.v[k] = amp * U(rng);
    }
    return u;
}

PlateLoads random_loads(const Grid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    PlateLoads l = zero_loads(g);
    for (int k = 0; k < g.size(); ++k) {
        l.P.v[k] = U(rng);
        l.P1.v[k] = U(rng);
        l.P2.v[k] = U(rng);
    }
    return l;
}

}  // namespace

TEST(PlateMaterial, IsotropicComponents) {
    PlateMaterial m = build_material(1.0, 0.0, 1.0);
    EXPECT_NEAR(m.membrane_tensor(0, 0, 0, 0), 1.0, 1e-15);
    EXPECT_NEAR(m.membrane_tensor(0, 0, 1, 1), 0.0, 1e-15);
    EXPECT_NEAR(m.membrane_tensor(0, 1, 0, 1), 0.5, 1e-15);
    EXPECT_NEAR(m.membrane_tensor(1, 0, 0, 1), 0.5, 1e-15);
}

TEST(PlateMaterial, PoissonCoupling) {
    PlateMaterial m = build_material(1.0, 0.3, 1.0);
    // Hand evaluation: (1 / (2 * 1.3)) * (2 * 0.3 / 0.7).
    EXPECT_NEAR(m.membrane_tensor(0, 0, 1, 1), 0.32967032967032966, 1e-14);
    EXPECT_NEAR((m.membrane * m.membrane_inverse - Mat3::Identity()).norm(), 0.0, 1e-14);
    EXPECT_GT(min_eigenvalue(m.membrane), 0.0);
}

TEST(PlateMaterial, BendingScaling) {
    PlateMaterial m = build_material(2.0, 0.25, 0.1);
    EXPECT_EQ(m.bending, (0.1 * 0.1 / 12.0) * m.membrane);
    EXPECT_LT((m.bending - (0.01 / 12.0) * m.membrane).norm(), 1e-18);
}

TEST(PlateMaterial, RejectsBadParameters) {
    try {
        build_material(1.0, 0.7, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "plate.nu");
        EXPECT_NE(std::string(e.what()).find("nu out of range"), std::string::npos);
    }
    EXPECT_THROW(build_material(1.0, -1.0, 1.0), Error);
    EXPECT_THROW(build_material(0.0, 0.3, 1.0), Error);
    EXPECT_THROW(build_material(1.0, 0.3, -0.1), Error);
}

TEST(PlateStrain, ZeroDisplacement) {
    Grid g = unit_grid(7);
    DisplacementField u = make_displacement(g);
    TensorField2x2 gam = membrane_strain(g, u), kap = bending_strain(g, u);
    for (int c = 0; c < 4; ++c) {
        EXPECT_EQ(gam.c[c].cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(kap.c[c].cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(PlateStrain, LinearStretch) {
    Grid g = unit_grid(9);
    DisplacementField u = make_displacement(g);
    u.u1 = sample(g, [](double x, double) { return x; });
    TensorField2x2 gam = membrane_strain(g, u);
    EXPECT_TRUE(gam.symmetric);
    EXPECT_EQ(gam.max_asymmetry(), 0.0);
    for (int k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        EXPECT_NEAR(gam(0, 0)[k], 1.0, 1e-12);
        EXPECT_NEAR(gam(1, 1)[k], 0.0, 1e-12);
        EXPECT_NEAR(gam(0, 1)[k], 0.0, 1e-12);
    }
}

TEST(PlateStrain, QuadraticSlopeTerm) {
    Grid g = unit_grid(9);
    const double eps = 0.3;
    DisplacementField u = make_displacement(g);
    u.w = sample(g, [eps](double x, double) { return eps * x; });
    TensorField2x2 gam = membrane_strain(g, u);
    for (int k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        EXPECT_NEAR(gam(0, 0)[k], 0.5 * eps * eps, 1e-12);
        EXPECT_NEAR(gam(1, 1)[k], 0.0, 1e-12);
    }
}

TEST(PlateStrain, BendingOfParabola) {
    Grid g = unit_grid(9);
    DisplacementField u = make_displacement(g);
    u.w = sample(g, [](double x, double) { return x * x; });
    TensorField2x2 kap = bending_strain(g, u);
    for (int k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        EXPECT_NEAR(kap(0, 0)[k], -2.0, 1e-9);
        EXPECT_NEAR(kap(1, 1)[k], 0.0, 1e-9);
    }
}

TEST(PlateStrain, BendingIgnoresInPlaneDisplacement) {
    Grid g = unit_grid(9);
    DisplacementField u = random_state(g, 5);
    TensorField2x2 k0 = bending_strain(g, u);
    u.u1.v.array() += 0.4;
    u.u2 = sample(g, [](double x, double y) { return x * y; });
    TensorField2x2 k1 = bending_strain(g, u);
    for (int c = 0; c < 4; ++c) EXPECT_EQ((k0.c[c] - k1.c[c]).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PlateEnergy, ZeroStateZeroEnergy) {
    Grid g = unit_grid(7);
    EnergyBreakdown e = energy(g, make_displacement(g), build_material(1.0, 0.3, 0.1), random_loads(g, 1));
    EXPECT_EQ(e.G1, 0.0);
    EXPECT_EQ(e.G2, 0.0);
    EXPECT_EQ(e.F1, 0.0);
    EXPECT_EQ(e.J, 0.0);
}

TEST(PlateEnergy, UniformStretchEnergy) {
    // Independent evaluation: gamma_11 = 1 everywhere, so G1 = 1/2 * H1111 * area.
    Grid g = unit_grid(9);
    DisplacementField u = make_displacement(g);
    u.u1 = sample(g, [](double x, double) { return x; });
    PlateMaterial m = build_material(1.0, 0.0, 1.0);
    EnergyBreakdown e = energy(g, u, m, zero_loads(g));
    EXPECT_NEAR(e.G1, 0.5 * m.membrane_tensor(0, 0, 0, 0) * 1.0, 1e-13);
    EXPECT_EQ(e.G2, 0.0);
    EXPECT_NEAR(e.J, 0.5, 1e-13);
}

TEST(PlateEnergy, DeflectionSignSymmetry) {
    Grid g = unit_grid(11);
    PlateMaterial m = build_material(1.0, 0.3, 0.1);
    PlateLoads l = random_loads(g, 2);
    DisplacementField u = random_state(g, 3);
    const double j0 = energy(g, u, m, l).J;
    u.w.v = -u.w.v;
    l.P.v = -l.P.v;
    EXPECT_EQ(energy(g, u, m, l).J, j0);
}

TEST(PlateEnergy, NonNegativeStoredEnergyAndBendingBound) {
    Grid g = unit_grid(11);
    PlateMaterial m = build_material(1.0, 0.3, 0.1);
    EnergyModel model = plate_model(g, m, zero_loads(g));
    const double c = 0.5 * min_eigenvalue(m.bending);
    for (unsigned s = 0; s < 10; ++s) {
        Vec x = to_dofs(random_state(g, 100 + s, 1.0));
        EnergyBreakdown e = model.energy(x);
        EXPECT_GE(e.G1, 0.0);
        EXPECT_GE(e.G2, 0.0);
        const Vec kappa = model.strains(x).kappa;
        double hk = 0.0;
        for (int k = 0; k < g.size(); ++k)
            hk += model.omega[k] * (kappa[k] * kappa[k] + kappa[g.size() + k] * kappa[g.size() + k] +
                                    kappa[2 * g.size() + k] * kappa[2 * g.size() + k]);
        EXPECT_GE(e.G2, c * hk * (1.0 - 1e-12));
    }
}

TEST(PlateEnergy, GradientZeroAtRest) {
    Grid g = unit_grid(9);
    DisplacementField d = energy_gradient(g, make_displacement(g), build_material(1.0, 0.3, 0.1), zero_loads(g));
    EXPECT_EQ(to_dofs(d).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PlateEnergy, GradientMatchesFiniteDifferences) {
    Grid g = unit_grid(17);
    PlateMaterial m = build_material(1.0, 0.3, 0.1);
    EnergyModel model = plate_model(g, m, random_loads(g, 9));
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (unsigned s = 0; s < 5; ++s) {
        const Vec x = to_dofs(random_state(g, 40 + s, 0.2));
        Vec d(model.dofs());
        for (int i = 0; i < d.size(); ++i) d[i] = model.is_free[static_cast<std::size_t>(i)] ? U(rng) : 0.0;
        const double step = 1e-5;
        const double fd = (model.energy(x + step * d).J - model.energy(x - step * d).J) / (2 * step);
        const double an = model.gradient(x).dot(d);
        EXPECT_LE(std::abs(fd - an), 1e-6 * std::abs(an)) << "fd " << fd << " analytic " << an;
    }
}

TEST(PlateEnergy, GradientVanishesOnClampedNodes) {
    Grid g = unit_grid(9);
    EnergyModel model = plate_model(g, build_material(1.0, 0.3, 0.1), random_loads(g, 4));
    const Vec gr = model.gradient(to_dofs(random_state(g, 8)));
    for (int k = 0; k < g.size(); ++k) {
        if (!g.is_clamped(k)) continue;
        for (int c = 0; c < 3; ++c) EXPECT_EQ(gr[c * g.size() + k], 0.0);
    }
}

TEST(PlateEnergy, HessianMatchesGradientDifferences) {
    Grid g = unit_grid(9);
    EnergyModel model = plate_model(g, build_material(1.0, 0.3, 0.1), random_loads(g, 6));
    const Vec x = to_dofs(random_state(g, 12, 0.3));
    const SpMat H = model.hessian_free(x);
    Vec d = Vec::Random(static_cast<Eigen::Index>(model.free_dofs.size()));
    const double step = 1e-6;
    const Vec dx = model.extend_free(d);
    const Vec fd = model.restrict_free(model.gradient(x + step * dx) - model.gradient(x - step * dx)) / (2 * step);
    const Vec an = H * d;
    EXPECT_LE((fd - an).norm(), 1e-6 * an.norm());
}

TEST(PlateLoads, TractionOnlyOnTractionNodes) {
    BoundarySpec spec;
    spec.top = EdgeKind::traction;
    Grid g = unit_grid(7, spec);
    PlateLoads l = zero_loads(g);
    l.Pt.v[g.index(3, 6)] = 1.0;
    EXPECT_NO_THROW(plate_model(g, build_material(1.0, 0.3, 0.1), l));
    l.Pt.v[g.index(3, 3)] = 1.0;
    EXPECT_THROW(plate_model(g, build_material(1.0, 0.3, 0.1), l), Error);
}

TEST(PlateLoads, TractionWorkUsesEdgeQuadrature) {
    BoundarySpec spec;
    spec.top = EdgeKind::traction;
    Grid g = unit_grid(9, spec);
    PlateLoads l = zero_loads(g);
    for (int k = 0; k < g.size(); ++k)
        if (g.tag(k) == NodeTag::traction) l.Pt.v[k] = 2.0;
    DisplacementField u = make_displacement(g);
    u.w.v.setConstant(1.0);
    // Seven non-corner nodes on the top edge, each with 1-D weight h. The
    // interior w contributes nothing because P = 0.
    const double h = g.hx();
    const double expected = 2.0 * (7 * h);
    EXPECT_NEAR(energy(g, u, build_material(1.0, 0.3, 0.1), l).F1, expected, 1e-14);
}
