#include "kl/loads.hpp"

#include "kl/linalg.hpp"

#include <cmath>

namespace kl {

TTildeResult build_t_tilde(const Grid& g, const ScalarField& P1, const ScalarField& P2, std::optional<double> C) {
    require_same_grid(g.id(), P1.grid, "build_t_tilde");
    require_same_grid(g.id(), P2.grid, "build_t_tilde");
    if (!P1.v.allFinite() || !P2.v.allFinite()) throw Error("loads.nonfinite", "non-finite loads");
    TTildeResult out;
    out.T = make_tensor(g, true);
    Vec& t11 = out.T(0, 0);
    Vec& t22 = out.T(1, 1);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 1; i < g.nx(); ++i)
            t11[g.index(i, j)] = t11[g.index(i - 1, j)] - 0.5 * g.hx() * (P1.v[g.index(i - 1, j)] + P1.v[g.index(i, j)]);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 1; j < g.ny(); ++j)
            t22[g.index(i, j)] = t22[g.index(i, j - 1)] - 0.5 * g.hy() * (P2.v[g.index(i, j - 1)] + P2.v[g.index(i, j)]);

    if (C) {
        if (!std::isfinite(*C)) throw Error("loads.nonfinite", "non-finite shift");
        out.C = *C;
    } else {
        // The off-diagonal part is zero, so the spectral radius is max(|T11|, |T22|).
        double rho = 0.0;
        if (g.size() > 0) rho = std::max(t11.cwiseAbs().maxCoeff(), t22.cwiseAbs().maxCoeff());
        out.C = rho + 1.0;
    }
    t11.array() += out.C;
    t22.array() += out.C;
    return out;
}

MinNormResult min_norm_div_solve(const SpMat& L, const Vec& W, const Vec& rhs, const std::vector<int>& rows,
                                 const Vec& row_scale) {
    MinNormResult out;
    out.lambda = Vec::Zero(L.cols());
    out.X = Vec::Zero(L.rows());
    if (rows.empty()) return out;
    const SpMat Ls = linalg::select_columns(L, rows);
    const SpMat A = SpMat(Ls.transpose()) * linalg::diagonal(W) * Ls;
    Vec r(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) r[static_cast<Eigen::Index>(i)] = rhs[rows[i]];
    if (r.cwiseAbs().maxCoeff() == 0.0) return out;
    linalg::SpdSolver solver(A, "loads");
    const Vec lam = solver.solve(r);
    out.X = Ls * lam;
    const Vec res = SpMat(Ls.transpose()) * W.cwiseProduct(out.X) - r;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.lambda[rows[i]] = lam[static_cast<Eigen::Index>(i)];
        const double s = row_scale[rows[i]];
        out.residual = std::max(out.residual, std::abs(res[static_cast<Eigen::Index>(i)]) / (s > 0.0 ? s : 1.0));
    }
    return out;
}

SpMat t0_gradient_operator(const Grid& g, const SurfaceGeometry* geom) {
    const int n = g.size();
    const StencilPolicy p = displacement_policy();
    const SpMat D[2] = {g.d_x(p), g.d_y(p)};
    linalg::Triplets t;
    // Row block 2 l + b holds T_lb = v_l,b - Gamma^a_lb v_a.
    for (int l = 0; l < 2; ++l)
        for (int b = 0; b < 2; ++b) {
            const int r0 = (2 * l + b) * n;
            for (int k = 0; k < D[b].outerSize(); ++k)
                for (SpMat::InnerIterator it(D[b], k); it; ++it)
                    t.emplace_back(r0 + static_cast<int>(it.row()), l * n + static_cast<int>(it.col()), it.value());
            if (geom == nullptr) continue;
            for (int a = 0; a < 2; ++a) {
                const Vec& G = geom->christoffel[sym3(a, l, b)];
                for (int k = 0; k < n; ++k)
                    if (G[k] != 0.0) t.emplace_back(r0 + k, a * n + k, -G[k]);
            }
        }
    SpMat L(4 * n, 2 * n);
    L.setFromTriplets(t.begin(), t.end());
    return L;
}

namespace {

T0Result solve_t0(const Grid& g, const SpMat& L, const Vec& omega, const Vec& rhs) {
    if (!g.boundary().any_clamped() || g.count(NodeTag::clamped) == 0)
        throw Error("loads.gamma0", "the clamped part of the boundary is empty");
    const int n = g.size();
    std::vector<int> rows;
    for (int a = 0; a < 2; ++a)
        for (int k = 0; k < n; ++k)
            if (!g.is_clamped(k)) rows.push_back(a * n + k);
    Vec W(4 * n);
    W << omega, omega, omega, omega;
    Vec scale(2 * n);
    scale << omega, omega;
    const MinNormResult r = min_norm_div_solve(L, W, rhs, rows, scale);
    T0Result out;
    out.T = make_tensor(g, false);
    for (int c = 0; c < 4; ++c) out.T.c[static_cast<std::size_t>(c)] = r.X.segment(c * n, n);
    out.residual = r.residual;
    out.norm_sq = r.X.dot(W.cwiseProduct(r.X));
    return out;
}

}  // namespace

T0Result build_t0_plate(const Grid& g, const PlateLoads& loads) {
    validate_loads(g, loads);
    const int n = g.size();
    const Vec& w = g.weights();
    const Vec& tw = g.traction_weights();
    Vec rhs(2 * n);
    rhs << w.cwiseProduct(loads.P1.v) + tw.cwiseProduct(loads.Pt1.v), w.cwiseProduct(loads.P2.v) + tw.cwiseProduct(loads.Pt2.v);
    return solve_t0(g, t0_gradient_operator(g, nullptr), w, rhs);
}

T0Result build_t0_shell(const Grid& g, const SurfaceGeometry& geom, const ScalarField& P1, const ScalarField& P2) {
    require_same_grid(g.id(), geom.grid, "build_t0_shell");
    require_same_grid(g.id(), P1.grid, "build_t0_shell");
    require_same_grid(g.id(), P2.grid, "build_t0_shell");
    if (!P1.v.allFinite() || !P2.v.allFinite()) throw Error("loads.nonfinite", "non-finite loads");
    const int n = g.size();
    const Vec omega = g.weights().cwiseProduct(geom.sqrt_a);
    Vec rhs(2 * n);
    rhs << omega.cwiseProduct(P1.v), omega.cwiseProduct(P2.v);
    return solve_t0(g, t0_gradient_operator(g, &geom), omega, rhs);
}

}  // namespace kl
