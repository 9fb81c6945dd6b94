#include "kl/shell.hpp"

#include "kl/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace kl {

Surface plane_surface() {
    Surface s;
    s.name = "plane";
    s.r = [](double x, double y) { return Vec3d(x, y, 0.0); };
    s.dr = [](double, double) { return std::array<Vec3d, 2>{Vec3d(1, 0, 0), Vec3d(0, 1, 0)}; };
    s.ddr = [](double, double) { return std::array<Vec3d, 3>{Vec3d::Zero(), Vec3d::Zero(), Vec3d::Zero()}; };
    s.gauss = [](double, double) { return 0.0; };
    return s;
}

Surface cylinder_surface(double R) {
    if (!(R > 0.0)) throw Error("shell.surface", "cylinder radius must be positive");
    Surface s;
    s.name = "cylinder";
    s.r = [R](double t, double z) { return Vec3d(R * std::cos(t), R * std::sin(t), z); };
    s.dr = [R](double t, double) {
        return std::array<Vec3d, 2>{Vec3d(-R * std::sin(t), R * std::cos(t), 0), Vec3d(0, 0, 1)};
    };
    s.ddr = [R](double t, double) {
        return std::array<Vec3d, 3>{Vec3d(-R * std::cos(t), -R * std::sin(t), 0), Vec3d::Zero(), Vec3d::Zero()};
    };
    s.gauss = [](double, double) { return 0.0; };
    return s;
}

Surface sphere_patch_surface(double R) {
    if (!(R > 0.0)) throw Error("shell.surface", "sphere radius must be positive");
    Surface s;
    s.name = "sphere-patch";
    s.r = [R](double p, double t) {
        return Vec3d(R * std::cos(p) * std::cos(t), R * std::cos(p) * std::sin(t), R * std::sin(p));
    };
    s.dr = [R](double p, double t) {
        const double cp = std::cos(p), sp = std::sin(p), ct = std::cos(t), st = std::sin(t);
        return std::array<Vec3d, 2>{Vec3d(-R * sp * ct, -R * sp * st, R * cp), Vec3d(-R * cp * st, R * cp * ct, 0)};
    };
    s.ddr = [R](double p, double t) {
        const double cp = std::cos(p), sp = std::sin(p), ct = std::cos(t), st = std::sin(t);
        return std::array<Vec3d, 3>{Vec3d(-R * cp * ct, -R * cp * st, -R * sp), Vec3d(R * sp * st, -R * sp * ct, 0),
                                    Vec3d(-R * cp * ct, -R * cp * st, 0)};
    };
    s.gauss = [R](double, double) { return 1.0 / (R * R); };
    return s;
}

Surface paraboloid_surface(double a, double b) {
    Surface s;
    s.name = "paraboloid";
    s.r = [a, b](double x, double y) { return Vec3d(x, y, a * x * x + b * y * y); };
    s.dr = [a, b](double x, double y) {
        return std::array<Vec3d, 2>{Vec3d(1, 0, 2 * a * x), Vec3d(0, 1, 2 * b * y)};
    };
    s.ddr = [a, b](double, double) {
        return std::array<Vec3d, 3>{Vec3d(0, 0, 2 * a), Vec3d::Zero(), Vec3d(0, 0, 2 * b)};
    };
    s.gauss = [a, b](double x, double y) {
        const double q = 1.0 + 4.0 * a * a * x * x + 4.0 * b * b * y * y;
        return 4.0 * a * b / (q * q);
    };
    return s;
}

namespace {

using Partials1 = std::vector<std::array<Vec3d, 2>>;
using Partials2 = std::vector<std::array<Vec3d, 3>>;

int second_index(int a, int b) { return a == b ? (a == 0 ? 0 : 2) : 1; }

SurfaceGeometry assemble(const Grid& g, const Partials1& d1, const Partials2& d2) {
    const int n = g.size();
    SurfaceGeometry geo;
    geo.grid = g.id();
    geo.a.resize(static_cast<std::size_t>(n));
    geo.a_inv.resize(static_cast<std::size_t>(n));
    geo.b.resize(static_cast<std::size_t>(n));
    geo.b_mixed.resize(static_cast<std::size_t>(n));
    geo.normal.resize(static_cast<std::size_t>(n));
    geo.sqrt_a.resize(n);
    for (auto* arr : {&geo.christoffel_first, &geo.christoffel, &geo.b_derivative})
        for (Vec& v : *arr) v = Vec::Zero(n);

    for (int k = 0; k < n; ++k) {
        const auto& t = d1[static_cast<std::size_t>(k)];
        const auto& s = d2[static_cast<std::size_t>(k)];
        Mat2 a;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) a(i, j) = t[i].dot(t[j]);
        const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        if (!(det > 0.0) || !std::isfinite(det) || !(a(0, 0) > 0.0))
            throw Error("shell.geometry", "degenerate metric (not an immersion) at node " + std::to_string(k));
        const Vec3d cr = t[0].cross(t[1]);
        const Vec3d nrm = cr / cr.norm();
        Mat2 ainv;
        ainv << a(1, 1) / det, -a(0, 1) / det, -a(1, 0) / det, a(0, 0) / det;
        Mat2 b;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) b(i, j) = nrm.dot(s[static_cast<std::size_t>(second_index(i, j))]);
        const std::size_t ks = static_cast<std::size_t>(k);
        geo.a[ks] = a;
        geo.a_inv[ks] = ainv;
        geo.b[ks] = b;
        geo.b_mixed[ks] = b * ainv;
        geo.normal[ks] = nrm;
        geo.sqrt_a[k] = cr.norm();
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    geo.christoffel_first[sym3(c, i, j)][k] = t[c].dot(s[static_cast<std::size_t>(second_index(i, j))]);
        for (int l = 0; l < 2; ++l)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double v = 0.0;
                    for (int c = 0; c < 2; ++c) v += ainv(l, c) * geo.christoffel_first[sym3(c, i, j)][k];
                    geo.christoffel[sym3(l, i, j)][k] = v;
                }
    }

    // b^l_{a|b} = b^l_{a,b} + Gamma^l_{bm} b^m_a - Gamma^m_{ab} b^l_m, with the
    // partial derivative taken on the grid and the result symmetrised in (a, b).
    const StencilPolicy p{};
    const SpMat D[2] = {g.d_x(p), g.d_y(p)};
    std::array<Vec, 4> bm;  // b^l_a = b_a^l at index 2 l + a
    for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i) {
            Vec v(n);
            for (int k = 0; k < n; ++k) v[k] = geo.b_mixed[static_cast<std::size_t>(k)](i, l);
            bm[static_cast<std::size_t>(2 * l + i)] = v;
        }
    std::array<Vec, 8> raw;
    for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                Vec v = D[j] * bm[static_cast<std::size_t>(2 * l + i)];
                for (int m = 0; m < 2; ++m) {
                    v += geo.christoffel[sym3(l, j, m)].cwiseProduct(bm[static_cast<std::size_t>(2 * m + i)]);
                    v -= geo.christoffel[sym3(m, i, j)].cwiseProduct(bm[static_cast<std::size_t>(2 * l + m)]);
                }
                raw[sym3(l, i, j)] = v;
            }
    for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) geo.b_derivative[sym3(l, i, j)] = 0.5 * (raw[sym3(l, i, j)] + raw[sym3(l, j, i)]);
    return geo;
}

}  // namespace

GeometryDiagnostics geometry_diagnostics(const Grid& g, const SurfaceGeometry& geom, const Surface* s) {
    require_same_grid(g.id(), geom.grid, "geometry_diagnostics");
    GeometryDiagnostics d;
    const int n = g.size();
    if (n == 0) return d;
    d.sqrt_a_min = geom.sqrt_a.minCoeff();
    d.sqrt_a_max = geom.sqrt_a.maxCoeff();
    d.gauss_min = d.gauss_max = geom.gauss_curvature(0);
    double gauss_error = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        d.metric_inverse_error = std::max(d.metric_inverse_error, (geom.a[ks] * geom.a_inv[ks] - Mat2::Identity()).norm());
        d.normal_unit_error = std::max(d.normal_unit_error, std::abs(geom.normal[ks].norm() - 1.0));
        d.b_asymmetry = std::max(d.b_asymmetry, std::abs(geom.b[ks](0, 1) - geom.b[ks](1, 0)));
        for (int l = 0; l < 2; ++l)
            d.christoffel_asymmetry = std::max(
                d.christoffel_asymmetry, std::abs(geom.christoffel[sym3(l, 0, 1)][k] - geom.christoffel[sym3(l, 1, 0)][k]));
        const double K = geom.gauss_curvature(k);
        d.gauss_min = std::min(d.gauss_min, K);
        d.gauss_max = std::max(d.gauss_max, K);
        if (s && s->gauss) gauss_error = std::max(gauss_error, std::abs(K - s->gauss(g.xk(k), g.yk(k))));
    }
    if (s && s->gauss) d.gauss_error = gauss_error;
    return d;
}

SurfaceGeometry build_geometry(const Grid& g, const Surface& s) {
    const int n = g.size();
    Partials1 d1(static_cast<std::size_t>(n));
    Partials2 d2(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        d1[static_cast<std::size_t>(k)] = s.dr(g.xk(k), g.yk(k));
        d2[static_cast<std::size_t>(k)] = s.ddr(g.xk(k), g.yk(k));
    }
    return assemble(g, d1, d2);
}

SurfaceGeometry build_geometry_sampled(const Grid& g, const std::vector<Vec3d>& positions) {
    const int n = g.size();
    if (static_cast<int>(positions.size()) != n)
        throw Error("shell.geometry", "expected " + std::to_string(n) + " sampled positions, got " +
                                          std::to_string(positions.size()));
    const StencilPolicy p{};
    const SpMat dx = g.d_x(p), dy = g.d_y(p), dxx = g.d_xx(p), dyy = g.d_yy(p), dxy = g.d_xy(p);
    Partials1 d1(static_cast<std::size_t>(n));
    Partials2 d2(static_cast<std::size_t>(n));
    for (int c = 0; c < 3; ++c) {
        Vec r(n);
        for (int k = 0; k < n; ++k) r[k] = positions[static_cast<std::size_t>(k)][c];
        const Vec rx = dx * r, ry = dy * r, rxx = dxx * r, rxy = dxy * r, ryy = dyy * r;
        for (int k = 0; k < n; ++k) {
            auto& a = d1[static_cast<std::size_t>(k)];
            auto& b = d2[static_cast<std::size_t>(k)];
            a[0][c] = rx[k];
            a[1][c] = ry[k];
            b[0][c] = rxx[k];
            b[1][c] = rxy[k];
            b[2][c] = ryy[k];
        }
    }
    return assemble(g, d1, d2);
}

ShellMaterial shell_material(const Grid& g, const SurfaceGeometry& geom, double E, double nu, double h) {
    require_same_grid(g.id(), geom.grid, "shell_material");
    check_material_parameters(E, nu, h, "shell");
    ShellMaterial m;
    const int n = g.size();
    for (int k = 0; k < n; ++k) {
        const Mat3 H = isotropic_mandel(E, nu, h, geom.a_inv[static_cast<std::size_t>(k)]);
        if (!(min_eigenvalue(H) > 0.0))
            throw Error("shell.material", "elasticity tensor is not positive definite at node " + std::to_string(k));
        m.membrane.push_back(H);
        m.bending.push_back((h * h / 12.0) * H);
        m.membrane_inverse.push_back(H.inverse());
    }
    return m;
}

namespace {

// Dense grid of sparse n x n blocks, assembled with linalg::blocks at the end.
struct BlockOp {
    int rows, cols, n;
    std::vector<SpMat> b;
    BlockOp(int r, int c, int nn) : rows(r), cols(c), n(nn), b(static_cast<std::size_t>(r * c), SpMat(nn, nn)) {}
    SpMat& at(int i, int j) { return b[static_cast<std::size_t>(i * cols + j)]; }
    SpMat build() const {
        std::vector<std::vector<const SpMat*>> grid(static_cast<std::size_t>(rows));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) grid[static_cast<std::size_t>(i)].push_back(&b[static_cast<std::size_t>(i * cols + j)]);
        SpMat m = linalg::blocks(grid, std::vector<int>(static_cast<std::size_t>(rows), n),
                                 std::vector<int>(static_cast<std::size_t>(cols), n));
        m.prune(0.0);
        return m;
    }
};

constexpr int kPairA[3] = {0, 1, 0};
constexpr int kPairB[3] = {0, 1, 1};

}  // namespace

EnergyModel shell_model(const Grid& g, const SurfaceGeometry& geom, const ShellMaterial& material,
                        const PlateLoads& loads) {
    require_same_grid(g.id(), geom.grid, "shell_model");
    if (!g.boundary().fully_clamped())
        throw Error("shell.boundary", "the shell parameter domain must be clamped on every edge");
    validate_loads(g, loads);
    const int n = g.size();
    const StencilPolicy pu = displacement_policy(), pw = deflection_policy();
    const SpMat Du[2] = {g.d_x(pu), g.d_y(pu)};
    const SpMat Dw[2] = {g.d_x(pw), g.d_y(pw)};
    const SpMat Dww[3] = {g.d_xx(pw), g.d_yy(pw), g.d_xy(pw)};
    auto dg = [](const Vec& v) { return linalg::diagonal(v); };
    auto nodal = [&](auto f) {
        Vec v(n);
        for (int k = 0; k < n; ++k) v[k] = f(static_cast<std::size_t>(k));
        return v;
    };
    auto bcov = [&](int i, int j) { return nodal([&](std::size_t k) { return geom.b[k](i, j); }); };
    auto bmix = [&](int i, int j) { return nodal([&](std::size_t k) { return geom.b_mixed[k](i, j); }); };
    const Vec* G = geom.christoffel.data();

    BlockOp theta(3, 3, n), phi(2, 3, n), kappa(3, 3, n);
    for (int I = 0; I < 3; ++I) {
        const int a = kPairA[I], b = kPairB[I];
        const double f = I == 2 ? kSqrt2 : 1.0;
        // theta_ab
        for (int l = 0; l < 2; ++l) {
            SpMat op(n, n);
            if (l == a) op += 0.5 * Du[b];
            if (l == b) op += 0.5 * Du[a];
            op -= dg(G[sym3(l, a, b)]);
            theta.at(I, l) = f * op;
        }
        theta.at(I, 2) = -f * dg(bcov(a, b));

        // kappa_ab
        SpMat kw = -Dww[I];
        for (int l = 0; l < 2; ++l) kw += dg(G[sym3(l, a, b)]) * Dw[l];
        Vec bb = Vec::Zero(n);
        for (int l = 0; l < 2; ++l) bb += bmix(a, l).cwiseProduct(bcov(l, b));
        kw += dg(bb);
        kappa.at(I, 2) = f * kw;
        for (int l = 0; l < 2; ++l) {
            SpMat op = -dg(geom.b_derivative[sym3(l, a, b)]);
            op -= dg(bmix(a, l)) * Du[b];
            op -= dg(bmix(b, l)) * Du[a];
            Vec c = Vec::Zero(n);
            for (int m = 0; m < 2; ++m) {
                c += bmix(a, m).cwiseProduct(G[sym3(l, m, b)]);
                c += bmix(b, m).cwiseProduct(G[sym3(l, m, a)]);
            }
            op += dg(c);
            kappa.at(I, l) = f * op;
        }
    }
    for (int a = 0; a < 2; ++a) {
        for (int l = 0; l < 2; ++l) phi.at(a, l) = dg(bmix(a, l));
        phi.at(a, 2) = a == 0 ? g.d_x(slope_policy()) : g.d_y(slope_policy());
    }

    EnergyModel m;
    m.kind = "shell";
    m.grid = g;
    m.L_theta = theta.build();
    m.L_phi = phi.build();
    m.L_kappa = kappa.build();
    m.omega = g.weights().cwiseProduct(geom.sqrt_a);
    m.membrane = material.membrane;
    m.bending = material.bending;
    m.membrane_inverse = material.membrane_inverse;
    m.load.resize(3 * n);
    m.load << m.omega.cwiseProduct(loads.P1.v), m.omega.cwiseProduct(loads.P2.v), m.omega.cwiseProduct(loads.P.v);
    m.load_magnitude = load_magnitude(loads);
    m.eliminate_clamped();
    m.curvature = geom.b;
    return m;
}

ShellStrains shell_strains(const EnergyModel& model, const DisplacementField& u) {
    require_same_grid(model.grid.id(), u.w.grid, "shell_strains");
    const Strains s = model.strains(to_dofs(u));
    return {mandel_to_tensor(model.grid, s.theta), mandel_to_tensor(model.grid, s.gamma),
            mandel_to_tensor(model.grid, s.kappa), stacked_to_vector(model.grid, s.phi)};
}

EnergyBreakdown shell_energy(const EnergyModel& model, const DisplacementField& u) {
    require_same_grid(model.grid.id(), u.w.grid, "shell_energy");
    return model.energy(to_dofs(u));
}

}  // namespace kl
