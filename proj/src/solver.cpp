#include "kl/solver.hpp"

#include "kl/linalg.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace kl {

namespace {

double sup_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Pair {
    Vec s, y;
    double rho;
};

Vec two_loop(const std::deque<Pair>& mem, const Vec& g) {
    Vec q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
        alpha[i] = mem[i].rho * mem[i].s.dot(q);
        q -= alpha[i] * mem[i].y;
    }
    if (!mem.empty()) {
        const Pair& last = mem.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const double beta = mem[i].rho * mem[i].y.dot(q);
        q += (alpha[i] - beta) * mem[i].s;
    }
    return -q;
}

}  // namespace

MinimizeResult minimize(const EnergyFn& energy, const GradientFn& gradient, const Vec& x_init,
                        const MinimizeOptions& opts, const NewtonFn& newton) {
    if (opts.max_iter < 0 || opts.memory < 1) throw Error("solver.options", "invalid minimiser options");
    require_finite(x_init, "solver.nonfinite");

    MinimizeResult r;
    Vec x = x_init;
    double J = energy(x);
    Vec g = gradient(x);
    if (!std::isfinite(J) || !g.allFinite()) throw Error("solver.nonfinite", "non-finite energy at the initial guess");
    r.gtol = opts.gtol >= 0.0 ? opts.gtol : 1e-8 * (1.0 + std::abs(J));
    double gn = sup_norm(g);
    r.history.push_back({J, gn});

    constexpr double c1 = 1e-4;
    std::deque<Pair> mem;
    int it = 0;
    while (gn > r.gtol && it < opts.max_iter) {
        Vec d = two_loop(mem, g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            mem.clear();
            d = -g;
            slope = -g.squaredNorm();
        }
        double step = 1.0;
        Vec x_new, g_new;
        double J_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            x_new = x + step * d;
            if (x_new == x) break;
            J_new = energy(x_new);
            if (!std::isfinite(J_new) || J_new > J) {
                step *= 0.5;
                continue;
            }
            if (J_new < J && J_new <= J + c1 * step * slope) {
                accepted = true;
                break;
            }
            // Near a minimiser the energy decrease drops below round-off and
            // sufficient decrease can no longer be resolved from energy values.
            // There the decrease is estimated from gradients (trapezoid rule,
            // exact for quadratics) and a curvature condition is added.
            if (J - J_new <= 1e-10 * (1.0 + std::abs(J))) {
                g_new = gradient(x_new);
                const double slope_new = g_new.dot(d);
                const double decrease = 0.5 * step * (slope + slope_new);
                if (decrease <= c1 * step * slope && slope_new >= 0.9 * slope) {
                    accepted = true;
                    break;
                }
                g_new.resize(0);
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (mem.empty()) break;  // steepest descent also stalled
            mem.clear();
            continue;
        }
        if (g_new.size() == 0) g_new = gradient(x_new);
        Pair p{x_new - x, g_new - g, 0.0};
        const double sy = p.s.dot(p.y);
        if (sy > 1e-12 * p.s.norm() * p.y.norm()) {
            p.rho = 1.0 / sy;
            mem.push_back(std::move(p));
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
        }
        x = std::move(x_new);
        g = std::move(g_new);
        J = J_new;
        gn = sup_norm(g);
        ++it;
        r.history.push_back({J, gn});
    }
    r.iterations = it;

    if (opts.newton_polish && newton) {
        for (int k = 0; k < opts.max_newton && gn > 0.0; ++k) {
            const Vec p = newton(x, g);
            if (p.size() != x.size() || !p.allFinite()) break;
            const Vec x_new = x + p;
            const double J_new = energy(x_new);
            const Vec g_new = gradient(x_new);
            const double gn_new = sup_norm(g_new);
            // Accept only steps that reduce the gradient without raising the
            // energy beyond round-off.
            const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(J));
            if (!std::isfinite(J_new) || J_new > J + slack || !(gn_new < gn)) break;
            const bool stalled = gn_new > 0.5 * gn;
            x = x_new;
            g = g_new;
            J = J_new;
            gn = gn_new;
            ++r.newton_steps;
            r.history.push_back({J, gn});
            if (stalled) break;
        }
    }

    r.x = std::move(x);
    r.J = J;
    r.grad_norm = gn;
    r.converged = gn <= r.gtol;
    return r;
}

MinimizeResult minimize(const EnergyModel& model, const Vec& x_init, const MinimizeOptions& opts) {
    if (x_init.size() != model.dofs()) throw Error("solver.size", "initial guess has the wrong length");
    for (int i = 0; i < model.dofs(); ++i)
        if (!model.is_free[static_cast<std::size_t>(i)] && x_init[i] != 0.0)
            throw Error("solver.boundary", "initial guess violates the clamped boundary conditions");
    auto energy = [&model](const Vec& x) { return model.energy(x).J; };
    auto gradient = [&model](const Vec& x) { return model.gradient(x); };
    auto newton = [&model](const Vec& x, const Vec& g) -> Vec {
        try {
            linalg::SpdSolver solver(model.hessian_free(x), "solver.newton");
            return model.extend_free(solver.solve(Vec(-model.restrict_free(g))));
        } catch (const Error&) {
            return Vec();
        }
    };
    return minimize(energy, gradient, x_init, opts, newton);
}

Vec linear_solution(const EnergyModel& model) {
    const SpMat K = model.linear_stiffness();
    const SpMat Kc = linalg::select_columns(K, model.free_dofs);
    const SpMat Kf = linalg::select_columns(SpMat(Kc.transpose()), model.free_dofs);
    const Vec f = model.restrict_free(model.load);
    if (f.size() == 0 || f.cwiseAbs().maxCoeff() == 0.0) return Vec::Zero(model.dofs());
    linalg::SpdSolver solver(Kf, "solver.linear");
    return model.extend_free(solver.solve(f));
}

double coercivity_functional(const EnergyModel& model, const TensorField2x2& T0, const Vec& x) {
    require_same_grid(model.grid.id(), T0.grid, "coercivity_functional");
    require_finite(x, "solver.nonfinite");
    const int n = model.nodes();
    const Strains s = model.strains(x);
    double J1 = 0.5 * s.kappa.dot(model.apply_nodes(model.bending, s.kappa, true));
    for (int k = 0; k < n; ++k) {
        const double p1 = s.phi[k], p2 = s.phi[n + k];
        const double quad = T0(0, 0)[k] * p1 * p1 + (T0(0, 1)[k] + T0(1, 0)[k]) * p1 * p2 + T0(1, 1)[k] * p2 * p2;
        double tb = 0.0;
        if (!model.curvature.empty()) {
            const Mat2& b = model.curvature[static_cast<std::size_t>(k)];
            for (int a = 0; a < 2; ++a)
                for (int c = 0; c < 2; ++c) tb += T0(a, c)[k] * b(a, c);
        }
        J1 += model.omega[k] * (0.5 * quad - tb * x[2 * n + k]);
    }
    J1 -= model.load.segment(2 * n, n).dot(x.segment(2 * n, n));
    return J1;
}

ProbeResult coercivity_probe(const EnergyModel& model, const TensorField2x2& T0, const std::vector<Vec>& directions,
                             const std::vector<double>& t_list) {
    if (directions.empty()) throw Error("solver.probe", "no probe directions");
    if (t_list.size() < 3) throw Error("solver.probe", "at least three sample points are required");
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        if (!(t_list[i] > 0.0) || !std::isfinite(t_list[i])) throw Error("solver.probe", "sample points must be positive");
        if (i > 0 && !(t_list[i] > t_list[i - 1])) throw Error("solver.probe", "sample points must increase");
    }
    ProbeResult out;
    out.t = t_list;
    out.coercive = true;
    const std::size_t m = t_list.size();
    const std::size_t tail = std::max<std::size_t>(3, (m + 2) / 3);
    for (const Vec& d : directions) {
        if (d.size() != model.dofs()) throw Error("solver.probe", "direction has the wrong length");
        if (d.cwiseAbs().maxCoeff() == 0.0) throw Error("solver.probe", "zero probe direction");
        std::vector<double> vals;
        vals.reserve(m);
        for (double t : t_list) vals.push_back(coercivity_functional(model, T0, t * d));
        bool ok = vals.back() > vals.front();
        for (std::size_t i = m - std::min(tail, m) + 1; i < m; ++i) ok = ok && vals[i] > vals[i - 1];
        out.values.push_back(std::move(vals));
        out.direction_coercive.push_back(ok);
        out.coercive = out.coercive && ok;
    }
    return out;
}

}  // namespace kl
