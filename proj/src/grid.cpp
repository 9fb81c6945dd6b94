#include "kl/grid.hpp"

#include <atomic>
#include <cmath>

namespace kl {

namespace {

std::atomic<GridId> next_grid_id{1};

using Triplets = std::vector<Eigen::Triplet<double>>;

// One-dimensional first-derivative stencil rows for n points with spacing h.
// reflect_lo / reflect_hi select ghost reflection at the respective end.
void first_derivative_1d(int n, double h, Closure closure, bool reflect_lo, bool reflect_hi,
                         std::vector<std::vector<std::pair<int, double>>>& rows) {
    rows.assign(static_cast<std::size_t>(n), {});
    for (int i = 1; i < n - 1; ++i) rows[i] = {{i - 1, -0.5 / h}, {i + 1, 0.5 / h}};
    if (reflect_lo) {
        rows[0] = {};
    } else if (closure == Closure::second_order) {
        rows[0] = {{0, -1.5 / h}, {1, 2.0 / h}, {2, -0.5 / h}};
    } else {
        rows[0] = {{0, -1.0 / h}, {1, 1.0 / h}};
    }
    const int m = n - 1;
    if (reflect_hi) {
        rows[m] = {};
    } else if (closure == Closure::second_order) {
        rows[m] = {{m - 2, 0.5 / h}, {m - 1, -2.0 / h}, {m, 1.5 / h}};
    } else {
        rows[m] = {{m - 1, -1.0 / h}, {m, 1.0 / h}};
    }
}

void second_derivative_1d(int n, double h, Closure closure, bool reflect_lo, bool reflect_hi,
                          std::vector<std::vector<std::pair<int, double>>>& rows) {
    const double s = 1.0 / (h * h);
    rows.assign(static_cast<std::size_t>(n), {});
    for (int i = 1; i < n - 1; ++i) rows[i] = {{i - 1, s}, {i, -2.0 * s}, {i + 1, s}};
    const int m = n - 1;
    if (reflect_lo) {
        rows[0] = {{0, -2.0 * s}, {1, 2.0 * s}};
    } else if (closure == Closure::second_order) {
        rows[0] = {{0, 2.0 * s}, {1, -5.0 * s}, {2, 4.0 * s}, {3, -1.0 * s}};
    } else {
        rows[0] = {{0, s}, {1, -2.0 * s}, {2, s}};
    }
    if (reflect_hi) {
        rows[m] = {{m - 1, 2.0 * s}, {m, -2.0 * s}};
    } else if (closure == Closure::second_order) {
        rows[m] = {{m - 3, -1.0 * s}, {m - 2, 4.0 * s}, {m - 1, -5.0 * s}, {m, 2.0 * s}};
    } else {
        rows[m] = {{m - 2, s}, {m - 1, -2.0 * s}, {m, s}};
    }
}

using Rows = std::vector<std::vector<std::pair<int, double>>>;

// Lifts a 1-D operator along x to the 2-D grid (acts on every row j).
SpMat lift_x(const Grid& g, const Rows& rows) {
    Triplets t;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            for (auto [c, v] : rows[static_cast<std::size_t>(i)]) t.emplace_back(g.index(i, j), g.index(c, j), v);
    SpMat m(g.size(), g.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat lift_y(const Grid& g, const Rows& rows) {
    Triplets t;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            for (auto [c, v] : rows[static_cast<std::size_t>(j)]) t.emplace_back(g.index(i, j), g.index(i, c), v);
    SpMat m(g.size(), g.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

bool reflect(const StencilPolicy& p, EdgeKind e) { return p.reflect_clamped && e == EdgeKind::clamped; }

Vec trapezoid_1d(int n, double h) {
    Vec w = Vec::Constant(n, h);
    w[0] = w[n - 1] = 0.5 * h;
    return w;
}

}  // namespace

Grid Grid::build(const Extents& e, int nx, int ny, const BoundarySpec& spec) {
    if (nx < 5 || ny < 5)
        throw Error("grid.stencil", "node counts below stencil width (need nx, ny >= 5, got " +
                                        std::to_string(nx) + "x" + std::to_string(ny) + ")");
    if (!(e.x1 > e.x0) || !(e.y1 > e.y0) || !std::isfinite(e.x1 - e.x0) || !std::isfinite(e.y1 - e.y0))
        throw Error("grid.extents", "degenerate extents");

    Grid g;
    g.ext_ = e;
    g.spec_ = spec;
    g.nx_ = nx;
    g.ny_ = ny;
    g.hx_ = (e.x1 - e.x0) / (nx - 1);
    g.hy_ = (e.y1 - e.y0) / (ny - 1);
    g.id_ = next_grid_id.fetch_add(1);

    const int n = nx * ny;
    g.tags_.assign(static_cast<std::size_t>(n), NodeTag::interior);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            bool on_clamped = false, on_traction = false;
            auto mark = [&](bool on, EdgeKind kind) {
                if (!on) return;
                (kind == EdgeKind::clamped ? on_clamped : on_traction) = true;
            };
            mark(i == 0, spec.left);
            mark(i == nx - 1, spec.right);
            mark(j == 0, spec.bottom);
            mark(j == ny - 1, spec.top);
            // Corners shared with a clamped edge are clamped.
            NodeTag t = on_clamped ? NodeTag::clamped : (on_traction ? NodeTag::traction : NodeTag::interior);
            g.tags_[static_cast<std::size_t>(g.index(i, j))] = t;
        }
    }

    const Vec wx = trapezoid_1d(nx, g.hx_);
    const Vec wy = trapezoid_1d(ny, g.hy_);
    g.weights_.resize(n);
    g.traction_weights_ = Vec::Zero(n);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int k = g.index(i, j);
            g.weights_[k] = wx[i] * wy[j];
            if (g.tags_[static_cast<std::size_t>(k)] != NodeTag::traction) continue;
            double tw = 0.0;
            if (i == 0 && spec.left == EdgeKind::traction) tw += wy[j];
            if (i == nx - 1 && spec.right == EdgeKind::traction) tw += wy[j];
            if (j == 0 && spec.bottom == EdgeKind::traction) tw += wx[i];
            if (j == ny - 1 && spec.top == EdgeKind::traction) tw += wx[i];
            g.traction_weights_[k] = tw;
        }
    }
    return g;
}

int Grid::count(NodeTag t) const {
    int c = 0;
    for (NodeTag x : tags_) c += (x == t);
    return c;
}

SpMat Grid::d_x(const StencilPolicy& p) const {
    Rows r;
    first_derivative_1d(nx_, hx_, p.closure, reflect(p, spec_.left), reflect(p, spec_.right), r);
    return lift_x(*this, r);
}

SpMat Grid::d_y(const StencilPolicy& p) const {
    Rows r;
    first_derivative_1d(ny_, hy_, p.closure, reflect(p, spec_.bottom), reflect(p, spec_.top), r);
    return lift_y(*this, r);
}

SpMat Grid::d_xx(const StencilPolicy& p) const {
    Rows r;
    second_derivative_1d(nx_, hx_, p.closure, reflect(p, spec_.left), reflect(p, spec_.right), r);
    return lift_x(*this, r);
}

SpMat Grid::d_yy(const StencilPolicy& p) const {
    Rows r;
    second_derivative_1d(ny_, hy_, p.closure, reflect(p, spec_.bottom), reflect(p, spec_.top), r);
    return lift_y(*this, r);
}

SpMat Grid::d_xy(const StencilPolicy& p) const {
    // x and y operators act on different indices, so the product commutes.
    return SpMat(d_y(p) * d_x(p));
}

Eigen::Matrix2d TensorField2x2::at(int k) const {
    Eigen::Matrix2d m;
    m << c[0][k], c[1][k], c[2][k], c[3][k];
    return m;
}

ScalarField make_scalar(const Grid& g, double value) { return {g.id(), Vec::Constant(g.size(), value)}; }

VectorField2 make_vector(const Grid& g) {
    return {g.id(), {Vec::Zero(g.size()), Vec::Zero(g.size())}};
}

TensorField2x2 make_tensor(const Grid& g, bool symmetric) {
    TensorField2x2 t;
    t.grid = g.id();
    for (auto& c : t.c) c = Vec::Zero(g.size());
    t.symmetric = symmetric;
    return t;
}

void require_same_grid(GridId a, GridId b, const char* what) {
    if (a != b) throw Error("grid.mismatch", std::string("field does not belong to this grid: ") + what);
}

VectorField2 grad(const Grid& g, const ScalarField& f, const StencilPolicy& p) {
    require_same_grid(g.id(), f.grid, "grad");
    VectorField2 out = make_vector(g);
    out.c[0] = g.d_x(p) * f.v;
    out.c[1] = g.d_y(p) * f.v;
    return out;
}

TensorField2x2 hess(const Grid& g, const ScalarField& f, const StencilPolicy& p) {
    require_same_grid(g.id(), f.grid, "hess");
    TensorField2x2 out = make_tensor(g, true);
    out(0, 0) = g.d_xx(p) * f.v;
    out(1, 1) = g.d_yy(p) * f.v;
    out(0, 1) = g.d_xy(p) * f.v;
    out(1, 0) = out(0, 1);
    return out;
}

ScalarField div_vec(const Grid& g, const VectorField2& q, const StencilPolicy& p) {
    require_same_grid(g.id(), q.grid, "div_vec");
    ScalarField out = make_scalar(g);
    out.v = g.d_x(p) * q.c[0] + g.d_y(p) * q.c[1];
    return out;
}

VectorField2 div_tensor(const Grid& g, const TensorField2x2& t, const StencilPolicy& p) {
    require_same_grid(g.id(), t.grid, "div_tensor");
    const SpMat dx = g.d_x(p), dy = g.d_y(p);
    VectorField2 out = make_vector(g);
    out.c[0] = dx * t(0, 0) + dy * t(0, 1);
    out.c[1] = dx * t(1, 0) + dy * t(1, 1);
    return out;
}

double integrate(const Grid& g, const ScalarField& f, const ScalarField* weight) {
    require_same_grid(g.id(), f.grid, "integrate");
    if (weight == nullptr) return g.weights().dot(f.v);
    require_same_grid(g.id(), weight->grid, "integrate weight");
    return g.weights().dot(f.v.cwiseProduct(weight->v));
}

double interior_max_abs(const Grid& g, const Vec& v) {
    double m = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) m = std::max(m, std::abs(v[g.index(i, j)]));
    return m;
}

}  // namespace kl
