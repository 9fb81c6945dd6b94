#pragma once

// Minimisation of the discrete energy and the coercivity probe.

#include "kl/grid.hpp"
#include "kl/model.hpp"

#include <functional>
#include <vector>

namespace kl {

struct MinimizeOptions {
    double gtol = -1.0;  // negative: 1e-8 * (1 + |J(x_init)|)
    int max_iter = 5000;
    int memory = 10;
    // After the quasi-Newton phase, take exact Newton steps while they keep
    // lowering the gradient. Needs a Hessian callback.
    bool newton_polish = true;
    int max_newton = 20;
};

struct IterationRecord {
    double J = 0.0;
    double grad_norm = 0.0;
};

struct MinimizeResult {
    Vec x;
    double J = 0.0;
    double grad_norm = 0.0;  // sup norm
    double gtol = 0.0;
    int iterations = 0;
    int newton_steps = 0;
    bool converged = false;
    std::vector<IterationRecord> history;
};

using EnergyFn = std::function<double(const Vec&)>;
using GradientFn = std::function<Vec(const Vec&)>;
// Returns a step p solving H p = -g (empty vector when unavailable).
using NewtonFn = std::function<Vec(const Vec& x, const Vec& g)>;

// Limited-memory quasi-Newton descent with Armijo backtracking (c1 = 1e-4,
// halving). Entries where the gradient is identically zero stay untouched.
MinimizeResult minimize(const EnergyFn& energy, const GradientFn& gradient, const Vec& x_init,
                        const MinimizeOptions& opts = {}, const NewtonFn& newton = nullptr);

// Convenience wrapper over an energy model (Newton polish with the exact Hessian).
MinimizeResult minimize(const EnergyModel& model, const Vec& x_init, const MinimizeOptions& opts = {});

// Solution of the linearised problem (membrane coupling off).
Vec linear_solution(const EnergyModel& model);

// J1(x) = G2(kappa(x)) + 1/2 sum omega phi^T T0 phi - sum omega (T0 : b) w - f_w . w
double coercivity_functional(const EnergyModel& model, const TensorField2x2& T0, const Vec& x);

struct ProbeResult {
    std::vector<double> t;
    std::vector<std::vector<double>> values;  // values[d][i] = J1(t_i d)
    std::vector<bool> direction_coercive;
    bool coercive = false;
};

// Samples J1 along rays. A direction counts as coercive when its last value
// exceeds the first and the values strictly increase over the tail (the last
// third of the samples, at least two steps).
ProbeResult coercivity_probe(const EnergyModel& model, const TensorField2x2& T0, const std::vector<Vec>& directions,
                             const std::vector<double>& t_list);

}  // namespace kl
