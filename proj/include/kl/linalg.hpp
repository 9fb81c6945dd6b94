#pragma once

#include "kl/grid.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace kl::linalg {

using Triplets = std::vector<Eigen::Triplet<double>>;
using LinearOp = std::function<Vec(const Vec&)>;

SpMat diagonal(const Vec& d);
// Keeps only the listed columns, in order.
SpMat select_columns(const SpMat& m, const std::vector<int>& cols);
// Block matrix from a row-major grid of (possibly empty) blocks; empty blocks
// are zero and must be given as 0x0 matrices.
SpMat blocks(const std::vector<std::vector<const SpMat*>>& grid, const std::vector<int>& row_sizes,
             const std::vector<int>& col_sizes);

struct CgResult {
    Vec x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

// Preconditioned conjugate gradients with a diagonal (Jacobi) preconditioner.
// Defaults: relative residual 1e-10, iteration cap 10 n.
CgResult cg_solve(const LinearOp& apply, const Vec& diag, const Vec& rhs, double tol = 1e-10, int max_iter = -1);

// Symmetric positive (semi)definite sparse system. Rows/columns whose diagonal
// is exactly zero are dropped (they carry no information in a PSD matrix) and
// their solution components are zero. The reduced matrix is factorised with a
// sparse LDL^T; if that fails (not positive definite) the solver falls back to
// Jacobi-preconditioned CG on the reduced system.
class SpdSolver {
public:
    SpdSolver();
    explicit SpdSolver(const SpMat& a, std::string context = "linalg");
    ~SpdSolver();
    SpdSolver(SpdSolver&&) noexcept;
    SpdSolver& operator=(SpdSolver&&) noexcept;

    Vec solve(const Vec& rhs) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    int size() const { return n_; }
    const std::vector<int>& active() const { return active_; }
    bool factorised() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_ = 0;
    std::vector<int> active_;
    std::string context_;
};

struct EigenResult {
    double value = 0.0;
    Vec vector;
    int iterations = 0;
    bool converged = false;
};

// Smallest eigenvalue of a symmetric operator by restarted Lanczos with full
// reorthogonalisation. `tol` is relative to the largest Ritz value magnitude.
EigenResult lanczos_smallest(const LinearOp& apply, int n, double tol = 1e-8, int krylov = 120,
                             int max_restarts = 60, unsigned seed = 7);

}  // namespace kl::linalg
