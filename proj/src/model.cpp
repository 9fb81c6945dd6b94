#include "kl/model.hpp"

#include "kl/linalg.hpp"

#include <cmath>

namespace kl {

DisplacementField make_displacement(const Grid& g) {
    return {make_scalar(g), make_scalar(g), make_scalar(g)};
}

Vec to_dofs(const DisplacementField& u) {
    require_same_grid(u.u1.grid, u.u2.grid, "displacement");
    require_same_grid(u.u1.grid, u.w.grid, "displacement");
    const Eigen::Index n = u.w.v.size();
    Vec x(3 * n);
    x << u.u1.v, u.u2.v, u.w.v;
    return x;
}

DisplacementField from_dofs(const Grid& g, const Vec& x) {
    const int n = g.size();
    DisplacementField u = make_displacement(g);
    u.u1.v = x.segment(0, n);
    u.u2.v = x.segment(n, n);
    u.w.v = x.segment(2 * n, n);
    return u;
}

TensorField2x2 mandel_to_tensor(const Grid& g, const Vec& m) {
    const int n = g.size();
    TensorField2x2 t = make_tensor(g, true);
    t(0, 0) = m.segment(0, n);
    t(1, 1) = m.segment(n, n);
    t(0, 1) = m.segment(2 * n, n) / kSqrt2;
    t(1, 0) = t(0, 1);
    return t;
}

Vec tensor_to_mandel(const TensorField2x2& t) {
    const Eigen::Index n = t(0, 0).size();
    Vec m(3 * n);
    m << t(0, 0), t(1, 1), (kSqrt2 * 0.5) * (t(0, 1) + t(1, 0));
    return m;
}

VectorField2 stacked_to_vector(const Grid& g, const Vec& v) {
    const int n = g.size();
    VectorField2 out = make_vector(g);
    out.c[0] = v.segment(0, n);
    out.c[1] = v.segment(n, n);
    return out;
}

Vec vector_to_stacked(const VectorField2& v) {
    Vec out(2 * v.c[0].size());
    out << v.c[0], v.c[1];
    return out;
}

void require_finite(const Vec& x, const char* code) {
    if (!x.allFinite()) throw Error(code, "non-finite field values");
}

namespace {

Vec q_of(const Vec& phi, int n) {
    Vec q(3 * n);
    for (int k = 0; k < n; ++k) {
        const double p1 = phi[k], p2 = phi[n + k];
        q[k] = 0.5 * p1 * p1;
        q[n + k] = 0.5 * p2 * p2;
        q[2 * n + k] = p1 * p2 / kSqrt2;
    }
    return q;
}

}  // namespace

Strains EnergyModel::strains(const Vec& x) const {
    Strains s;
    s.theta = L_theta * x;
    s.phi = L_phi * x;
    s.gamma = s.theta + q_of(s.phi, nodes());
    s.kappa = L_kappa * x;
    return s;
}

Vec EnergyModel::apply_nodes(const std::vector<Mat3>& m, const Vec& v, bool weighted) const {
    const int n = nodes();
    Vec out(3 * n);
    for (int k = 0; k < n; ++k) {
        Vec3 a(v[k], v[n + k], v[2 * n + k]);
        Vec3 b = m[static_cast<std::size_t>(k)] * a;
        if (weighted) b *= omega[k];
        out[k] = b[0];
        out[n + k] = b[1];
        out[2 * n + k] = b[2];
    }
    return out;
}

SpMat EnergyModel::node_matrix(const std::vector<Mat3>& m) const {
    const int n = nodes();
    linalg::Triplets t;
    t.reserve(static_cast<std::size_t>(9 * n));
    for (int k = 0; k < n; ++k)
        for (int I = 0; I < 3; ++I)
            for (int J = 0; J < 3; ++J) {
                const double v = omega[k] * m[static_cast<std::size_t>(k)](I, J);
                if (v != 0.0) t.emplace_back(I * n + k, J * n + k, v);
            }
    SpMat out(3 * n, 3 * n);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

Vec EnergyModel::membrane_force(const Vec& x) const { return apply_nodes(membrane, strains(x).gamma, false); }

EnergyBreakdown EnergyModel::energy(const Vec& x) const {
    require_finite(x, "model.energy");
    const Strains s = strains(x);
    EnergyBreakdown e;
    e.G1 = 0.5 * s.gamma.dot(apply_nodes(membrane, s.gamma, true));
    e.G2 = 0.5 * s.kappa.dot(apply_nodes(bending, s.kappa, true));
    e.F1 = load.dot(x);
    e.J = e.G1 + e.G2 - e.F1;
    return e;
}

Vec EnergyModel::gradient(const Vec& x) const {
    require_finite(x, "model.gradient");
    const int n = nodes();
    const Strains s = strains(x);
    const Vec ws = apply_nodes(membrane, s.gamma, true);
    // d q / d phi applied transposed to the weighted membrane force is N phi.
    Vec nphi(2 * n);
    for (int k = 0; k < n; ++k) {
        const double p1 = s.phi[k], p2 = s.phi[n + k];
        nphi[k] = ws[k] * p1 + ws[2 * n + k] / kSqrt2 * p2;
        nphi[n + k] = ws[2 * n + k] / kSqrt2 * p1 + ws[n + k] * p2;
    }
    Vec g = L_theta.transpose() * ws + L_phi.transpose() * nphi +
            L_kappa.transpose() * apply_nodes(bending, s.kappa, true) - load;
    for (int i = 0; i < dofs(); ++i)
        if (!is_free[static_cast<std::size_t>(i)]) g[i] = 0.0;
    return g;
}

SpMat EnergyModel::hessian_free(const Vec& x) const {
    const int n = nodes();
    const Strains s = strains(x);
    const Vec ws = apply_nodes(membrane, s.gamma, true);

    linalg::Triplets dq;
    dq.reserve(static_cast<std::size_t>(4 * n));
    linalg::Triplets wn;
    wn.reserve(static_cast<std::size_t>(4 * n));
    for (int k = 0; k < n; ++k) {
        const double p1 = s.phi[k], p2 = s.phi[n + k];
        dq.emplace_back(k, k, p1);
        dq.emplace_back(n + k, n + k, p2);
        dq.emplace_back(2 * n + k, k, p2 / kSqrt2);
        dq.emplace_back(2 * n + k, n + k, p1 / kSqrt2);
        wn.emplace_back(k, k, ws[k]);
        wn.emplace_back(n + k, n + k, ws[n + k]);
        wn.emplace_back(k, n + k, ws[2 * n + k] / kSqrt2);
        wn.emplace_back(n + k, k, ws[2 * n + k] / kSqrt2);
    }
    SpMat Dq(3 * n, 2 * n), WN(2 * n, 2 * n);
    Dq.setFromTriplets(dq.begin(), dq.end());
    WN.setFromTriplets(wn.begin(), wn.end());

    const SpMat Jg = L_theta + Dq * L_phi;
    SpMat H = SpMat(Jg.transpose() * node_matrix(membrane) * Jg) + SpMat(L_phi.transpose() * WN * L_phi) +
              SpMat(L_kappa.transpose() * node_matrix(bending) * L_kappa);
    const SpMat sel = linalg::select_columns(SpMat(H), free_dofs);
    return linalg::select_columns(SpMat(sel.transpose()), free_dofs);
}

SpMat EnergyModel::linear_stiffness() const {
    return SpMat(SpMat(L_theta.transpose() * node_matrix(membrane) * L_theta) +
                 SpMat(L_kappa.transpose() * node_matrix(bending) * L_kappa));
}

void EnergyModel::eliminate_clamped() {
    const int n = nodes();
    is_free.assign(static_cast<std::size_t>(3 * n), 1);
    free_dofs.clear();
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < n; ++k)
            if (grid.is_clamped(k)) is_free[static_cast<std::size_t>(c * n + k)] = 0;
    for (int i = 0; i < 3 * n; ++i)
        if (is_free[static_cast<std::size_t>(i)]) free_dofs.push_back(i);
}

Vec EnergyModel::restrict_free(const Vec& x) const {
    Vec y(static_cast<Eigen::Index>(free_dofs.size()));
    for (std::size_t i = 0; i < free_dofs.size(); ++i) y[static_cast<Eigen::Index>(i)] = x[free_dofs[i]];
    return y;
}

Vec EnergyModel::extend_free(const Vec& y) const {
    Vec x = Vec::Zero(dofs());
    for (std::size_t i = 0; i < free_dofs.size(); ++i) x[free_dofs[i]] = y[static_cast<Eigen::Index>(i)];
    return x;
}

}  // namespace kl
