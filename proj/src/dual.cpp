#include "kl/dual.hpp"

#include "kl/linalg.hpp"
#include "kl/loads.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace kl {

namespace {

Mat2 node_tensor(const Vec& N, int n, int k) {
    Mat2 t;
    t << N[k], N[2 * n + k] / kSqrt2, N[2 * n + k] / kSqrt2, N[n + k];
    return t;
}

// Largest eigenvalue of a symmetric 2x2 matrix in closed form.
double lambda_max2(const Mat2& t) {
    const double m = 0.5 * (t(0, 0) + t(1, 1));
    const double d = 0.5 * (t(0, 0) - t(1, 1));
    return m + std::hypot(d, t(0, 1));
}

double lambda_min2(const Mat2& t) {
    const double m = 0.5 * (t(0, 0) + t(1, 1));
    const double d = 0.5 * (t(0, 0) - t(1, 1));
    return m - std::hypot(d, t(0, 1));
}

Vec stacked_weights(const Vec& omega, int blocks) {
    const Eigen::Index n = omega.size();
    Vec w(blocks * n);
    for (int b = 0; b < blocks; ++b) w.segment(b * n, n) = omega;
    return w;
}

Vec apply_pointwise(const std::vector<Mat2>& m, const Vec& v, const Vec* weight) {
    const int n = static_cast<int>(m.size());
    Vec out(2 * n);
    for (int k = 0; k < n; ++k) {
        Eigen::Vector2d a(v[k], v[n + k]);
        Eigen::Vector2d b = m[static_cast<std::size_t>(k)] * a;
        if (weight) b *= (*weight)[k];
        out[k] = b[0];
        out[n + k] = b[1];
    }
    return out;
}

}  // namespace

double auto_shift(const Vec& N, int n) {
    double lmax = 0.0;
    for (int k = 0; k < n; ++k) lmax = std::max(lmax, lambda_max2(node_tensor(N, n, k)));
    return 1.05 * lmax + 1e-8;
}

ShiftedMembrane shift_membrane(const Grid& g, const Vec& N, std::optional<double> K) {
    const int n = g.size();
    if (N.size() != 3 * n) throw Error("dual.size", "membrane force has the wrong length");
    require_finite(N, "dual.nonfinite");
    ShiftedMembrane s;
    s.N = N;
    s.K = K ? *K : auto_shift(N, n);
    if (!std::isfinite(s.K)) throw Error("dual.nonfinite", "non-finite shift K");
    s.M.resize(static_cast<std::size_t>(n));
    s.M_inv.resize(static_cast<std::size_t>(n));
    s.lambda_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        s.M[ks] = s.K * Mat2::Identity() - node_tensor(N, n, k);
        const double det = s.M[ks].determinant();
        const double scale = s.M[ks].cwiseAbs().maxCoeff();
        if (!(std::abs(det) > 1e-14 * scale * scale)) {
            std::ostringstream msg;
            msg << "shifted membrane tensor K I - N is singular at node " << k << " (i=" << g.i_of(k)
                << ", j=" << g.j_of(k) << "); increase K";
            throw Error("dual.singular_shift", msg.str());
        }
        Mat2 inv;
        inv << s.M[ks](1, 1), -s.M[ks](0, 1), -s.M[ks](1, 0), s.M[ks](0, 0);
        s.M_inv[ks] = inv / det;
        const double lm = lambda_min2(s.M[ks]);
        if (lm < s.lambda_min) {
            s.lambda_min = lm;
            s.argmin_node = k;
        }
    }
    if (n == 0) s.lambda_min = 0.0;
    return s;
}

ShiftedMembrane shift_membrane(const Grid& g, const TensorField2x2& N, std::optional<double> K) {
    require_same_grid(g.id(), N.grid, "shift_membrane");
    double scale = 0.0;
    for (const Vec& c : N.c) scale = std::max(scale, c.size() ? c.cwiseAbs().maxCoeff() : 0.0);
    if (N.max_asymmetry() > 1e-12 * scale) throw Error("dual.asymmetric", "membrane force must be symmetric");
    return shift_membrane(g, tensor_to_mandel(N), K);
}

struct DualContext::Impl {
    linalg::SpdSolver solver;
    Vec w2;
};

DualContext::DualContext(const EnergyModel& model, double K) : model_(&model), K_(K), impl_(std::make_unique<Impl>()) {
    if (!(K >= 0.0) || !std::isfinite(K)) throw Error("dual.shift", "K must be finite and non-negative");
    impl_->w2 = stacked_weights(model.omega, 2);
    const SpMat full = SpMat(model.L_kappa.transpose() * model.node_matrix(model.bending) * model.L_kappa) +
                       K * SpMat(model.L_phi.transpose() * linalg::diagonal(impl_->w2) * model.L_phi);
    const SpMat cols = linalg::select_columns(full, model.free_dofs);
    A_ = linalg::select_columns(SpMat(cols.transpose()), model.free_dofs);
    impl_->solver = linalg::SpdSolver(A_, "dual.F");
}

DualContext::~DualContext() = default;
DualContext::DualContext(DualContext&&) noexcept = default;

double DualContext::F(const Vec& x) const {
    const Vec kappa = model_->L_kappa * x;
    const Vec phi = model_->L_phi * x;
    return 0.5 * kappa.dot(model_->apply_nodes(model_->bending, kappa, true)) +
           0.5 * K_ * phi.dot(impl_->w2.cwiseProduct(phi));
}

double DualContext::F_conjugate(const Vec& v, Vec* argmax) const {
    const Vec c = model_->restrict_free(model_->L_phi.transpose() * impl_->w2.cwiseProduct(v));
    const Vec y = impl_->solver.solve(c);
    if (argmax) *argmax = model_->extend_free(y);
    return 0.5 * c.dot(y);
}

Vec DualContext::apply_B(const Vec& v) const {
    Vec x;
    F_conjugate(v, &x);
    return impl_->w2.cwiseProduct(model_->L_phi * x);
}

Vec DualContext::solve_A(const Vec& rhs) const {
    return model_->extend_free(impl_->solver.solve(Vec(model_->restrict_free(rhs))));
}

Vec DualContext::apply_A(const Vec& x) const { return model_->extend_free(A_ * model_->restrict_free(x)); }

Eigen::MatrixXd DualContext::solve_A_dense(const Eigen::MatrixXd& rhs_free) const {
    return impl_->solver.solve(rhs_free);
}

ConjugateResult conjugate_F(const EnergyModel& model, const Vec& zstar, const Vec& Q, double K) {
    if (zstar.size() != 2 * model.nodes() || Q.size() != 2 * model.nodes())
        throw Error("dual.size", "z* and Q must have 2n entries");
    DualContext ctx(model, K);
    ConjugateResult r;
    r.value = ctx.F_conjugate(zstar + Q, &r.x);
    return r;
}

double conjugate_G(const EnergyModel& model, const Vec& zstar, const ShiftedMembrane& shift) {
    if (!shift.in_A3()) throw Error("dual.not_in_A3", "K I - N is not positive definite");
    if (zstar.size() != 2 * model.nodes()) throw Error("dual.size", "z* must have 2n entries");
    const Vec mz = apply_pointwise(shift.M_inv, zstar, &model.omega);
    return 0.5 * zstar.dot(mz) - 0.5 * shift.N.dot(model.apply_nodes(model.membrane_inverse, shift.N, true));
}

double dual_functional(const DualContext& ctx, const Vec& Q, const Vec& zstar, const ShiftedMembrane& shift) {
    return -ctx.F_conjugate(zstar + Q) + conjugate_G(ctx.model(), zstar, shift);
}

DualValue dual_value(const DualContext& ctx, const Vec& Q, const ShiftedMembrane& shift) {
    if (!shift.in_A3()) throw Error("dual.not_in_A3", "K I - N is not positive definite");
    const EnergyModel& m = ctx.model();
    const int n = m.nodes();
    auto apply = [&](const Vec& z) { return Vec(apply_pointwise(shift.M_inv, z, &m.omega) - ctx.apply_B(z)); };
    Vec diag(2 * n);
    for (int k = 0; k < n; ++k) {
        diag[k] = m.omega[k] * shift.M_inv[static_cast<std::size_t>(k)](0, 0);
        diag[n + k] = m.omega[k] * shift.M_inv[static_cast<std::size_t>(k)](1, 1);
    }
    const linalg::CgResult cg = linalg::cg_solve(apply, diag, ctx.apply_B(Q), 1e-12);
    if (!cg.converged) throw Error("dual.unbounded", "dual value unbounded below / not certified");
    DualValue out;
    out.zstar = cg.x;
    out.iterations = cg.iterations;
    out.value = dual_functional(ctx, Q, out.zstar, shift);
    return out;
}

EquilibriumResiduals check_A1_A2(const EnergyModel& model, const Vec& N, const Vec& Q) {
    const int n = model.nodes();
    if (N.size() != 3 * n || Q.size() != 2 * n) throw Error("dual.size", "N must have 3n and Q 2n entries");
    const Vec r = model.L_theta.transpose() * model.apply_nodes(std::vector<Mat3>(static_cast<std::size_t>(n), Mat3::Identity()), N, true) +
                  model.L_phi.transpose() * stacked_weights(model.omega, 2).cwiseProduct(Q) - model.load;
    EquilibriumResiduals out;
    for (int i : model.free_dofs) {
        const double v = std::abs(r[i]) / model.omega[i % n];
        if (i < 2 * n)
            out.A1 = std::max(out.A1, v);
        else
            out.A2 = std::max(out.A2, v);
    }
    return out;
}

Vec apply_A4(const DualContext& ctx, const ShiftedMembrane& shift, const Vec& v) {
    const Vec sw = stacked_weights(ctx.model().omega, 2).cwiseSqrt();
    return apply_pointwise(shift.M_inv, v, nullptr) - ctx.apply_B(v.cwiseQuotient(sw)).cwiseQuotient(sw);
}

A4Result check_A4(const DualContext& ctx, const ShiftedMembrane& shift, const A4Options& opts) {
    if (!shift.in_A3()) throw Error("dual.not_in_A3", "K I - N is not positive definite");
    const EnergyModel& m = ctx.model();
    const int n = m.nodes();
    A4Result out;
    if (n <= opts.dense_max_nodes) {
        out.method = "dense";
        const Vec sw = stacked_weights(m.omega, 2).cwiseSqrt();
        const SpMat G = linalg::select_columns(SpMat(linalg::diagonal(sw) * m.L_phi), m.free_dofs);
        const Eigen::MatrixXd Gt = Eigen::MatrixXd(SpMat(G.transpose()));
        const Eigen::MatrixXd Y = ctx.solve_A_dense(Gt);
        Eigen::MatrixXd T = -(G * Y);
        T = 0.5 * (T + T.transpose()).eval();
        for (int k = 0; k < n; ++k) {
            const Mat2& Mi = shift.M_inv[static_cast<std::size_t>(k)];
            T(k, k) += Mi(0, 0);
            T(k, n + k) += Mi(0, 1);
            T(n + k, k) += Mi(1, 0);
            T(n + k, n + k) += Mi(1, 1);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw Error("dual.eigen", "dense eigenvalue computation failed");
        out.lambda_min = es.eigenvalues()[0];
        return out;
    }
    out.method = "lanczos";
    const linalg::EigenResult e =
        linalg::lanczos_smallest([&](const Vec& v) { return apply_A4(ctx, shift, v); }, 2 * n, opts.tol);
    if (!e.converged) throw Error("dual.eigen", "smallest-eigenvalue iteration did not converge");
    out.lambda_min = e.value;
    out.iterations = e.iterations;
    return out;
}

namespace {

void finish_verdict(DualCertificate& c, bool with_gap) {
    std::vector<std::string> failed;
    if (!(c.residual_A1 <= c.tol_equilibrium)) failed.push_back("A1");
    if (!(c.residual_A2 <= c.tol_equilibrium)) failed.push_back("A2");
    if (!c.in_A3) failed.push_back("A3");
    if (!c.lambda_min_A4 || !(*c.lambda_min_A4 > 0.0)) failed.push_back("A4");
    if (with_gap && (!c.gap || !(std::abs(*c.gap) <= c.tol_gap))) failed.push_back("gap");
    if (failed.empty()) {
        c.certified = with_gap;
        c.verdict = with_gap ? "certified-global" : "dual-feasible";
        return;
    }
    c.certified = false;
    std::string v = "not-certified: ";
    for (std::size_t i = 0; i < failed.size(); ++i) {
        if (i > 0) v += ", ";
        v += failed[i] + " failed";
    }
    c.verdict = v;
}

void evaluate_a4(DualCertificate& c, const DualContext& ctx, const ShiftedMembrane& shift, const A4Options& opts) {
    const A4Result a4 = check_A4(ctx, shift, opts);
    c.lambda_min_A4 = a4.lambda_min;
    c.a4_method = a4.method;
}

}  // namespace

DualCertificate extract_certificate(const EnergyModel& model, const Vec& x0, const CertificateOptions& opts) {
    if (x0.size() != model.dofs()) throw Error("dual.size", "state has the wrong length");
    require_finite(x0, "dual.nonfinite");
    const int n = model.nodes();
    DualCertificate c;
    c.N = model.membrane_force(x0);
    const ShiftedMembrane shift = shift_membrane(model.grid, c.N, opts.K);
    c.K = shift.K;
    c.in_A3 = shift.in_A3();
    c.lambda_min_A3 = shift.lambda_min;
    const Vec phi = model.L_phi * x0;
    c.zstar = apply_pointwise(shift.M, phi, nullptr);

    const DualContext ctx(model, c.K);
    const Vec w2 = stacked_weights(model.omega, 2);
    const Vec rhs = ctx.apply_A(x0) - model.L_phi.transpose() * w2.cwiseProduct(c.zstar);
    const MinNormResult qs = min_norm_div_solve(model.L_phi, w2, rhs, model.free_dofs, stacked_weights(model.omega, 3));
    c.Q = qs.X;
    c.residual_Q = qs.residual;

    const EquilibriumResiduals res = check_A1_A2(model, c.N, c.Q);
    c.residual_A1 = res.A1;
    c.residual_A2 = res.A2;
    c.J_primal = model.energy(x0).J;
    c.tol_equilibrium = opts.tol_equilibrium * model.load_scale();
    c.tol_gap = opts.tol_gap * (1.0 + std::abs(*c.J_primal));
    (void)n;

    if (c.in_A3) {
        c.J_star = dual_functional(ctx, c.Q, c.zstar, shift);
        c.gap = *c.J_primal - *c.J_star;
        evaluate_a4(c, ctx, shift, opts.a4);
        if (*c.lambda_min_A4 > 0.0) {
            try {
                c.dual_value = dual_value(ctx, c.Q, shift).value;
            } catch (const Error&) {
                c.dual_value.reset();
            }
        }
    }
    finish_verdict(c, true);
    return c;
}

DualCertificate extract_certificate(const EnergyModel& model, const MinimizeResult& run, const CertificateOptions& opts) {
    if (!run.converged) throw Error("dual.not_converged", "the primal solve did not converge");
    return extract_certificate(model, run.x, opts);
}

DualCertificate assess_dual_point(const EnergyModel& model, const Vec& N, const Vec& Q, const CertificateOptions& opts) {
    const int n = model.nodes();
    if (N.size() != 3 * n || Q.size() != 2 * n) throw Error("dual.size", "N must have 3n and Q 2n entries");
    DualCertificate c;
    c.N = N;
    c.Q = Q;
    c.zstar = Vec::Zero(2 * n);
    const ShiftedMembrane shift = shift_membrane(model.grid, N, opts.K);
    c.K = shift.K;
    c.in_A3 = shift.in_A3();
    c.lambda_min_A3 = shift.lambda_min;
    const EquilibriumResiduals res = check_A1_A2(model, N, Q);
    c.residual_A1 = res.A1;
    c.residual_A2 = res.A2;
    c.tol_equilibrium = opts.tol_equilibrium * model.load_scale();
    if (c.in_A3) {
        const DualContext ctx(model, c.K);
        evaluate_a4(c, ctx, shift, opts.a4);
        if (*c.lambda_min_A4 > 0.0) {
            try {
                const DualValue dv = dual_value(ctx, Q, shift);
                c.zstar = dv.zstar;
                c.dual_value = dv.value;
                c.J_star = dv.value;
            } catch (const Error&) {
                c.dual_value.reset();
            }
        }
    }
    finish_verdict(c, false);
    return c;
}

double duality_gap(const EnergyModel& model, const Vec& x, const DualCertificate& cert) {
    if (!cert.J_star) throw Error("dual.not_in_A3", "the certificate has no dual value (A3 failed)");
    return model.energy(x).J - *cert.J_star;
}

std::pair<Vec, Vec> equilibrate(const EnergyModel& model, const Vec& N, const Vec& Q) {
    const int n = model.nodes();
    if (N.size() != 3 * n || Q.size() != 2 * n) throw Error("dual.size", "N must have 3n and Q 2n entries");
    Vec v(5 * n);
    v << N, Q;
    const SpMat L = linalg::blocks({{&model.L_theta}, {&model.L_phi}}, {3 * n, 2 * n}, {3 * n});
    const Vec w5 = stacked_weights(model.omega, 5);
    const Vec rhs = model.load - L.transpose() * w5.cwiseProduct(v);
    const MinNormResult corr = min_norm_div_solve(L, w5, rhs, model.free_dofs, stacked_weights(model.omega, 3));
    v += corr.X;
    return {v.head(3 * n), v.tail(2 * n)};
}

std::pair<Vec, Vec> sample_equilibrated(const EnergyModel& model, std::mt19937_64& rng, double amplitude) {
    const int n = model.nodes();
    std::uniform_real_distribution<double> U(-amplitude, amplitude);
    Vec v(5 * n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = U(rng);
    return equilibrate(model, v.head(3 * n), v.tail(2 * n));
}

}  // namespace kl
