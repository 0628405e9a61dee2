#include "diffpath/ddim_path.hpp"

#include <cmath>
#include <string>

namespace diffpath {

namespace {

bool finite_row(std::span<const double> row) {
    for (double v : row)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

Matrix finite_difference_eps_derivative(const Matrix& epsilons, const TimestepGrid& grid) {
    require(grid.nfe() >= 2, "grid needs at least two nodes");
    require(epsilons.rows() == static_cast<std::size_t>(grid.nfe()),
            "epsilon row count must match grid length");
    const std::size_t d = epsilons.cols();
    Matrix derivs(epsilons.rows() - 1, d);
    for (std::size_t n = 0; n + 1 < epsilons.rows(); ++n) {
        const double inv_dt = 1.0 / grid.delta_ts[n];
        const double* hi = epsilons.row(n + 1).data();
        const double* lo = epsilons.row(n).data();
        double* out = derivs.row(n).data();
        for (std::size_t i = 0; i < d; ++i) out[i] = (hi[i] - lo[i]) * inv_dt;
    }
    return derivs;
}

Trajectory integrate_forward(std::span<const double> x0, const ScoreFunction& score,
                             const NoiseSchedule& schedule, const TimestepGrid& grid) {
    (void)schedule; // gamma values are baked into the grid
    const int nfe = grid.nfe();
    require(nfe >= 2, "grid needs at least two nodes");
    require(static_cast<int>(x0.size()) == score.dim(), "x0 dimension mismatch");
    require(finite_row(x0), "x0 must be finite");

    const std::size_t d = x0.size();
    Trajectory traj;
    traj.grid = grid;
    traj.states = Matrix(static_cast<std::size_t>(nfe), d);
    traj.epsilons = Matrix(static_cast<std::size_t>(nfe), d);

    Vec x(x0.begin(), x0.end());
    for (int n = 0; n < nfe; ++n) {
        const std::size_t row = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < d; ++i) traj.states(row, i) = x[i];
        score.eval(x, grid.indices[row], traj.epsilons.row(row));
        if (!finite_row(traj.epsilons.row(row)))
            throw NumericError("non-finite score at integration step " + std::to_string(n) +
                               " (timestep " + std::to_string(grid.indices[row]) + ")");
        if (n + 1 == nfe) break;

        const double gamma_n = grid.gamma_values[row];
        const double gamma_next = grid.gamma_values[row + 1];
        const double lift = std::sqrt(1.0 + gamma_n * gamma_n);
        const double drop = 1.0 / std::sqrt(1.0 + gamma_next * gamma_next);
        const double h = gamma_next - gamma_n;
        const double* eps = traj.epsilons.row(row).data();
        for (std::size_t i = 0; i < d; ++i) x[i] = (x[i] * lift + h * eps[i]) * drop;
        if (!finite_row(x))
            throw NumericError("non-finite state at integration step " + std::to_string(n + 1) +
                               " (timestep " + std::to_string(grid.indices[row + 1]) + ")");
    }

    traj.eps_time_derivs = finite_difference_eps_derivative(traj.epsilons, grid);
    return traj;
}

} // namespace diffpath
