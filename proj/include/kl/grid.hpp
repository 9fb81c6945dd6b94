#pragma once

// Structured rectangular grid with finite-difference calculus and trapezoidal
// quadrature. Node k = j * nx + i, i along x (or xi_1), j along y (or xi_2).

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kl {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

class Error : public std::runtime_error {
public:
    // `code` is module-qualified, e.g. "grid.stencil" or "dual.A3".
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

enum class EdgeKind { clamped, traction };
enum class NodeTag : std::uint8_t { interior, clamped, traction };

struct BoundarySpec {
    EdgeKind left = EdgeKind::clamped;
    EdgeKind right = EdgeKind::clamped;
    EdgeKind bottom = EdgeKind::clamped;
    EdgeKind top = EdgeKind::clamped;

    bool fully_clamped() const {
        return left == EdgeKind::clamped && right == EdgeKind::clamped &&
               bottom == EdgeKind::clamped && top == EdgeKind::clamped;
    }
    bool any_clamped() const {
        return left == EdgeKind::clamped || right == EdgeKind::clamped ||
               bottom == EdgeKind::clamped || top == EdgeKind::clamped;
    }
};

struct Extents {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

using GridId = std::uint64_t;

// Boundary closure of the derivative stencils.
//  second_order: one-sided second-order rows at the boundary.
//  summation:    first-order one-sided first-derivative rows; together with the
//                trapezoid weights this satisfies summation by parts exactly,
//                so the weighted adjoint of grad is minus the central divergence.
enum class Closure { second_order, summation };

struct StencilPolicy {
    Closure closure = Closure::second_order;
    // Ghost reflection f(-1) = f(1) at clamped edges (zero normal slope).
    bool reflect_clamped = false;
};

class Grid {
public:
    // An empty grid; only useful as a placeholder before assignment.
    Grid() = default;
    static Grid build(const Extents& extents, int nx, int ny, const BoundarySpec& spec);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int size() const { return nx_ * ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    const Extents& extents() const { return ext_; }
    const BoundarySpec& boundary() const { return spec_; }
    GridId id() const { return id_; }

    int index(int i, int j) const { return j * nx_ + i; }
    int i_of(int k) const { return k % nx_; }
    int j_of(int k) const { return k / nx_; }
    double x(int i) const { return ext_.x0 + i * hx_; }
    double y(int j) const { return ext_.y0 + j * hy_; }
    double xk(int k) const { return x(i_of(k)); }
    double yk(int k) const { return y(j_of(k)); }

    NodeTag tag(int k) const { return tags_[static_cast<std::size_t>(k)]; }
    bool is_clamped(int k) const { return tag(k) == NodeTag::clamped; }
    bool is_boundary(int k) const { return tag(k) != NodeTag::interior; }
    int count(NodeTag t) const;
    double area() const { return (ext_.x1 - ext_.x0) * (ext_.y1 - ext_.y0); }

    // 2-D trapezoid weights (product of 1-D weights).
    const Vec& weights() const { return weights_; }
    // 1-D trapezoid weights along traction edges, zero elsewhere.
    const Vec& traction_weights() const { return traction_weights_; }
    // Sparse derivative operators acting on nodal vectors.
    SpMat d_x(const StencilPolicy& p) const;
    SpMat d_y(const StencilPolicy& p) const;
    SpMat d_xx(const StencilPolicy& p) const;
    SpMat d_yy(const StencilPolicy& p) const;
    SpMat d_xy(const StencilPolicy& p) const;

private:
    Extents ext_{};
    BoundarySpec spec_{};
    int nx_ = 0, ny_ = 0;
    double hx_ = 0.0, hy_ = 0.0;
    GridId id_ = 0;
    std::vector<NodeTag> tags_;
    Vec weights_;
    Vec traction_weights_;
};

struct ScalarField {
    GridId grid = 0;
    Vec v;
};

struct VectorField2 {
    GridId grid = 0;
    std::array<Vec, 2> c;
};

// Components indexed (a, b) -> c[2 * a + b]. Symmetric fields keep c[1] == c[2]
// bit for bit.
struct TensorField2x2 {
    GridId grid = 0;
    std::array<Vec, 4> c;
    bool symmetric = false;

    const Vec& operator()(int a, int b) const { return c[static_cast<std::size_t>(2 * a + b)]; }
    Vec& operator()(int a, int b) { return c[static_cast<std::size_t>(2 * a + b)]; }
    Eigen::Matrix2d at(int k) const;
    double max_asymmetry() const { return (c[1] - c[2]).cwiseAbs().maxCoeff(); }
};

ScalarField make_scalar(const Grid& g, double value = 0.0);
VectorField2 make_vector(const Grid& g);
TensorField2x2 make_tensor(const Grid& g, bool symmetric);
// Samples f(x, y) at every node.
template <class F>
ScalarField sample(const Grid& g, F&& f) {
    ScalarField s = make_scalar(g);
    for (int k = 0; k < g.size(); ++k) s.v[k] = f(g.xk(k), g.yk(k));
    return s;
}

void require_same_grid(GridId a, GridId b, const char* what);

VectorField2 grad(const Grid& g, const ScalarField& f, const StencilPolicy& p = {});
TensorField2x2 hess(const Grid& g, const ScalarField& f, const StencilPolicy& p = {});
ScalarField div_vec(const Grid& g, const VectorField2& q, const StencilPolicy& p = {});
// Row-wise divergence T_{ab,b}.
VectorField2 div_tensor(const Grid& g, const TensorField2x2& t, const StencilPolicy& p = {});

double integrate(const Grid& g, const ScalarField& f, const ScalarField* weight = nullptr);

// Sup-norm over interior nodes only (boundary rows excluded).
double interior_max_abs(const Grid& g, const Vec& v);

}  // namespace kl
