#include "kl/linalg.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>

namespace kl::linalg {

SpMat diagonal(const Vec& d) {
    SpMat m(d.size(), d.size());
    Triplets t;
    t.reserve(static_cast<std::size_t>(d.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat select_columns(const SpMat& m, const std::vector<int>& cols) {
    SpMat s(m.cols(), static_cast<Eigen::Index>(cols.size()));
    Triplets t;
    t.reserve(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) t.emplace_back(cols[c], static_cast<int>(c), 1.0);
    s.setFromTriplets(t.begin(), t.end());
    return SpMat(m * s);
}

SpMat blocks(const std::vector<std::vector<const SpMat*>>& grid, const std::vector<int>& row_sizes,
             const std::vector<int>& col_sizes) {
    int rows = 0, cols = 0;
    for (int r : row_sizes) rows += r;
    for (int c : col_sizes) cols += c;
    Triplets t;
    int r0 = 0;
    for (std::size_t bi = 0; bi < grid.size(); ++bi) {
        int c0 = 0;
        for (std::size_t bj = 0; bj < grid[bi].size(); ++bj) {
            const SpMat* b = grid[bi][bj];
            if (b != nullptr && b->nonZeros() > 0) {
                for (int k = 0; k < b->outerSize(); ++k)
                    for (SpMat::InnerIterator it(*b, k); it; ++it)
                        t.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()), it.value());
            }
            c0 += col_sizes[bj];
        }
        r0 += row_sizes[bi];
    }
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

CgResult cg_solve(const LinearOp& apply, const Vec& diag, const Vec& rhs, double tol, int max_iter) {
    const Eigen::Index n = rhs.size();
    if (max_iter < 0) max_iter = static_cast<int>(10 * n);
    CgResult res;
    res.x = Vec::Zero(n);
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Vec inv_diag(n);
    for (Eigen::Index i = 0; i < n; ++i) inv_diag[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;
    Vec r = rhs;
    Vec z = inv_diag.cwiseProduct(r);
    Vec p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter; ++it) {
        const Vec ap = apply(p);
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) break;
        const double alpha = rz / pap;
        res.x += alpha * p;
        r -= alpha * ap;
        res.iterations = it + 1;
        res.relative_residual = r.norm() / bnorm;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    res.relative_residual = r.norm() / bnorm;
    res.converged = res.relative_residual <= tol;
    return res;
}

struct SpdSolver::Impl {
    SpMat reduced;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    bool use_ldlt = false;
};

SpdSolver::SpdSolver() = default;
SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

SpdSolver::SpdSolver(const SpMat& a, std::string context)
    : impl_(std::make_unique<Impl>()), n_(static_cast<int>(a.rows())), context_(std::move(context)) {
    const Vec d = a.diagonal();
    for (int i = 0; i < n_; ++i)
        if (d[i] != 0.0) active_.push_back(i);
    impl_->reduced = select_columns(SpMat(select_columns(a, active_).transpose()), active_);
    if (active_.empty()) return;
    impl_->ldlt.compute(impl_->reduced);
    if (impl_->ldlt.info() == Eigen::Success) {
        const Vec dd = impl_->ldlt.vectorD();
        impl_->use_ldlt = (dd.array() > 0.0).all();
    }
}

bool SpdSolver::factorised() const { return impl_ && impl_->use_ldlt; }

Vec SpdSolver::solve(const Vec& rhs) const {
    Vec out = Vec::Zero(n_);
    if (active_.empty()) return out;
    Vec r(static_cast<Eigen::Index>(active_.size()));
    for (std::size_t i = 0; i < active_.size(); ++i) r[static_cast<Eigen::Index>(i)] = rhs[active_[i]];
    Vec x;
    if (impl_->use_ldlt) {
        x = impl_->ldlt.solve(r);
    } else {
        const SpMat& m = impl_->reduced;
        CgResult cg = cg_solve([&m](const Vec& v) { return Vec(m * v); }, m.diagonal(), r);
        if (!cg.converged)
            throw Error(context_ + ".solve", "linear solve did not converge (relative residual " +
                                                 std::to_string(cg.relative_residual) + ")");
        x = cg.x;
    }
    for (std::size_t i = 0; i < active_.size(); ++i) out[active_[i]] = x[static_cast<Eigen::Index>(i)];
    return out;
}

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, rhs.cols());
    if (active_.empty()) return out;
    if (impl_->use_ldlt) {
        Eigen::MatrixXd r(static_cast<Eigen::Index>(active_.size()), rhs.cols());
        for (std::size_t i = 0; i < active_.size(); ++i) r.row(static_cast<Eigen::Index>(i)) = rhs.row(active_[i]);
        const Eigen::MatrixXd x = impl_->ldlt.solve(r);
        for (std::size_t i = 0; i < active_.size(); ++i) out.row(active_[i]) = x.row(static_cast<Eigen::Index>(i));
        return out;
    }
    for (Eigen::Index c = 0; c < rhs.cols(); ++c) out.col(c) = solve(Vec(rhs.col(c)));
    return out;
}

EigenResult lanczos_smallest(const LinearOp& apply, int n, double tol, int krylov, int max_restarts, unsigned seed) {
    EigenResult res;
    krylov = std::min(krylov, n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec start(n);
    for (int i = 0; i < n; ++i) start[i] = gauss(rng);
    start.normalize();

    for (int restart = 0; restart <= max_restarts; ++restart) {
        Eigen::MatrixXd V(n, krylov + 1);
        Vec alpha = Vec::Zero(krylov), beta = Vec::Zero(krylov);
        V.col(0) = start;
        int m = 0;
        for (int j = 0; j < krylov; ++j) {
            Vec w = apply(V.col(j));
            ++res.iterations;
            alpha[j] = V.col(j).dot(w);
            // Full reorthogonalisation (twice for stability).
            for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
            beta[j] = w.norm();
            m = j + 1;
            if (beta[j] <= 1e-14 * std::max(1.0, std::abs(alpha[j]))) break;
            V.col(j + 1) = w / beta[j];
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int j = 0; j < m; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const double theta = es.eigenvalues()[0];
        const Vec s = es.eigenvectors().col(0);
        const double scale = std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[m - 1]));
        const double resid = std::abs(beta[m - 1] * s[m - 1]);
        res.value = theta;
        res.vector = V.leftCols(m) * s;
        res.vector.normalize();
        if (resid <= tol * std::max(scale, 1e-300) || m < krylov) {
            res.converged = true;
            return res;
        }
        start = res.vector;
    }
    return res;
}

}  // namespace kl::linalg
