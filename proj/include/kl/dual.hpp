#pragma once

// Duality engine: shifted membrane tensor, conjugate functionals, the dual
// feasibility sets A1..A4, certificate extraction and the duality gap.
//
// Dual fields are stacked like the strains of the energy model: membrane
// forces N as 3n Mandel data, Q and z* as 2n vectors. With weights W = omega,
//   F(x)       = G2(kappa(x)) + K/2 sum omega |phi(x)|^2
//   F*(z*, Q)  = sup_x <z* + Q, phi(x)>_W - F(x)
//   G*(z*, N)  = 1/2 sum omega z*^T M^-1 z* - 1/2 sum omega N^T H^-1 N,  M = K I - N
//   J*(v*, z*) = -F*(z*, Q) + G*(z*, N)
// and the equilibrium sets A1 (in-plane rows) and A2 (transverse rows) are the
// weak identities L_theta^T W N + L_phi^T W Q = f on the free DOFs.

#include "kl/model.hpp"
#include "kl/solver.hpp"

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace kl {

struct ShiftedMembrane {
    Vec N;  // Mandel, 3n
    double K = 0.0;
    std::vector<Mat2> M, M_inv;
    double lambda_min = 0.0;  // smallest node-wise eigenvalue of M
    int argmin_node = -1;
    bool in_A3() const { return lambda_min > 0.0; }
};

// K = 1.05 max(0, max node-wise lambda_max(N)) + 1e-8.
double auto_shift(const Vec& N, int n);
ShiftedMembrane shift_membrane(const Grid& g, const Vec& N, std::optional<double> K = std::nullopt);
// Tensor-field entry point; N must be symmetric.
ShiftedMembrane shift_membrane(const Grid& g, const TensorField2x2& N, std::optional<double> K = std::nullopt);

// Factorised F-operator A = S^T (bending + K Dirichlet form) S on the free DOFs.
class DualContext {
public:
    DualContext(const EnergyModel& model, double K);
    ~DualContext();
    DualContext(DualContext&&) noexcept;

    const EnergyModel& model() const { return *model_; }
    double K() const { return K_; }

    double F(const Vec& x) const;
    // Returns F*(v) for v = z* + Q and optionally the maximiser x.
    double F_conjugate(const Vec& v, Vec* argmax = nullptr) const;
    // B v = W L_phi S A^+ S^T L_phi^T W v.
    Vec apply_B(const Vec& v) const;
    // Pseudo-inverse solve on the free DOFs (full-length in and out).
    Vec solve_A(const Vec& rhs) const;
    Vec apply_A(const Vec& x) const;
    // Columns A^+ S^T L_phi^T W^{1/2} as a dense matrix over the free DOFs.
    Eigen::MatrixXd solve_A_dense(const Eigen::MatrixXd& rhs_free) const;
    const SpMat& A_free() const { return A_; }

private:
    const EnergyModel* model_;
    double K_;
    SpMat A_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ConjugateResult {
    double value = 0.0;
    Vec x;  // maximiser (full DOF vector)
};

ConjugateResult conjugate_F(const EnergyModel& model, const Vec& zstar, const Vec& Q, double K);
double conjugate_G(const EnergyModel& model, const Vec& zstar, const ShiftedMembrane& shift);
// J*(v*, z*) = -F*(z*, Q) + G*(z*, N).
double dual_functional(const DualContext& ctx, const Vec& Q, const Vec& zstar, const ShiftedMembrane& shift);

struct DualValue {
    double value = 0.0;
    Vec zstar;
    int iterations = 0;
};

// inf over z* of J*(v*, z*), from (C - B) z* = B Q with C = W M^-1.
DualValue dual_value(const DualContext& ctx, const Vec& Q, const ShiftedMembrane& shift);

struct EquilibriumResiduals {
    double A1 = 0.0;  // sup over in-plane rows, per unit weight
    double A2 = 0.0;  // sup over transverse rows, per unit weight
};

EquilibriumResiduals check_A1_A2(const EnergyModel& model, const Vec& N, const Vec& Q);

struct A4Options {
    int dense_max_nodes = 33 * 33;
    double tol = 1e-8;
};

struct A4Result {
    double lambda_min = 0.0;
    std::string method;  // "dense" or "lanczos"
    int iterations = 0;
    bool converged = true;
};

// Smallest eigenvalue of M^-1 - W^{1/2} L_phi S A^+ S^T L_phi^T W^{1/2}, the
// symmetrically scaled form of C - B.
A4Result check_A4(const DualContext& ctx, const ShiftedMembrane& shift, const A4Options& opts = {});
// Applies the scaled A4 operator (for Rayleigh quotients and cross-checks).
Vec apply_A4(const DualContext& ctx, const ShiftedMembrane& shift, const Vec& v);

struct CertificateOptions {
    std::optional<double> K;
    double tol_equilibrium = 1e-6;  // times the load scale
    double tol_gap = 1e-6;          // times 1 + |J|
    A4Options a4;
};

struct DualCertificate {
    Vec N, Q, zstar;
    double K = 0.0;
    double residual_A1 = 0.0;
    double residual_A2 = 0.0;
    double residual_Q = 0.0;  // stationarity residual of the Q solve
    bool in_A3 = false;
    double lambda_min_A3 = 0.0;
    std::optional<double> lambda_min_A4;
    std::string a4_method;
    std::optional<double> dual_value;  // inf over z*, present when A3 and A4 hold
    std::optional<double> J_star;      // J*(v*, z*) at the stored z*
    std::optional<double> J_primal;
    std::optional<double> gap;
    double tol_equilibrium = 0.0;  // absolute
    double tol_gap = 0.0;          // absolute
    bool certified = false;
    std::string verdict;
};

// Builds (N0, Q0, z0*, K) at a primal state x0 and evaluates every check.
DualCertificate extract_certificate(const EnergyModel& model, const Vec& x0, const CertificateOptions& opts = {});
// Refuses unconverged runs.
DualCertificate extract_certificate(const EnergyModel& model, const MinimizeResult& run,
                                    const CertificateOptions& opts = {});
// Checks a given dual point (no primal state, no gap).
DualCertificate assess_dual_point(const EnergyModel& model, const Vec& N, const Vec& Q,
                                  const CertificateOptions& opts = {});

// J(x) - J*(v0*, z0*).
double duality_gap(const EnergyModel& model, const Vec& x, const DualCertificate& cert);

// (N, Q) plus the correction of least weighted norm that satisfies the A1/A2
// identities.
std::pair<Vec, Vec> equilibrate(const EnergyModel& model, const Vec& N, const Vec& Q);

// Random (N, Q) projected onto the A1/A2 identities by a minimal weighted-norm
// correction. Entries of the raw draw are uniform in [-amplitude, amplitude].
std::pair<Vec, Vec> sample_equilibrated(const EnergyModel& model, std::mt19937_64& rng, double amplitude);

}  // namespace kl
