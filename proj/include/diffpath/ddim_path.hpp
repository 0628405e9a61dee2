#pragma once

#include <span>

#include "diffpath/common.hpp"
#include "diffpath/schedule.hpp"
#include "diffpath/score_model.hpp"

namespace diffpath {

// Record of one forward DDIM integration: states x_{t_n} and score outputs
// eps(x_{t_n}, t_n) at every grid node, plus finite-difference time
// derivatives of eps between consecutive nodes (one fewer entry).
struct Trajectory {
    TimestepGrid grid;
    Matrix states;          // nfe x d
    Matrix epsilons;        // nfe x d
    Matrix eps_time_derivs; // (nfe-1) x d

    int nfe() const noexcept { return static_cast<int>(states.rows()); }
    int dim() const noexcept { return static_cast<int>(states.cols()); }
};

// (eps_{n+1} - eps_n) / delta_t_n over consecutive grid nodes.
Matrix finite_difference_eps_derivative(const Matrix& epsilons, const TimestepGrid& grid);

// Explicit Euler on dxbar = eps(x, t) dgamma with xbar = x * sqrt(1+gamma^2),
// eps evaluated at the left endpoint of each step (DDIM). The score is also
// evaluated at the final node so the trajectory carries nfe epsilon records.
// Throws NumericError naming the step if a state or score goes non-finite.
Trajectory integrate_forward(std::span<const double> x0, const ScoreFunction& score,
                             const NoiseSchedule& schedule, const TimestepGrid& grid);

} // namespace diffpath
