#include "diffpath/schedule.hpp"

#include <cmath>

namespace diffpath {

NoiseSchedule::NoiseSchedule(std::vector<double> betas, double continuous_horizon)
    : betas_(std::move(betas)), horizon_(continuous_horizon) {
    require(!betas_.empty(), "schedule needs at least one step");
    require(horizon_ > 0.0, "continuous horizon must be positive");

    const std::size_t T = betas_.size();
    alpha_bars_.resize(T);
    sigmas_.resize(T);
    gammas_.resize(T);
    double abar = 1.0;
    double prev_abar = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
        const double b = betas_[i];
        require(b > 0.0 && b < 1.0, "beta out of (0,1)");
        abar *= 1.0 - b;
        if (!(abar > 0.0 && abar < prev_abar))
            throw NumericError("alpha_bar is not strictly decreasing in (0,1]");
        prev_abar = abar;
        alpha_bars_[i] = abar;
        sigmas_[i] = std::sqrt(1.0 - abar);
        gammas_[i] = sigmas_[i] / std::sqrt(abar);
    }
}

NoiseSchedule build_linear_schedule(int num_steps, double beta_start, double beta_end,
                                    double continuous_horizon) {
    require(num_steps >= 1, "num_steps must be >= 1");
    require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
            "need 0 < beta_start <= beta_end < 1");
    std::vector<double> betas(static_cast<std::size_t>(num_steps));
    if (num_steps == 1) {
        betas[0] = beta_start;
    } else {
        const double step = (beta_end - beta_start) / (num_steps - 1);
        for (int i = 0; i < num_steps; ++i) betas[static_cast<std::size_t>(i)] = beta_start + step * i;
    }
    return NoiseSchedule(std::move(betas), continuous_horizon);
}

NoiseSchedule build_cosine_schedule(int num_steps, double continuous_horizon) {
    require(num_steps >= 2, "num_steps must be >= 2");
    constexpr double offset = 0.008;
    constexpr double max_beta = 0.9999;
    auto profile = [&](double u) {
        const double c = std::cos((u + offset) / (1.0 + offset) * 1.5707963267948966192);
        return c * c;
    };
    const double f0 = profile(0.0);
    std::vector<double> betas(static_cast<std::size_t>(num_steps));
    double prev = 1.0;
    for (int t = 1; t <= num_steps; ++t) {
        const double abar = profile(static_cast<double>(t) / num_steps) / f0;
        double b = 1.0 - abar / prev;
        if (b > max_beta) b = max_beta;
        betas[static_cast<std::size_t>(t - 1)] = b;
        prev *= 1.0 - b;
    }
    return NoiseSchedule(std::move(betas), continuous_horizon);
}

Vec forward_marginal_sample(const NoiseSchedule& schedule, std::span<const double> x0, int t,
                            std::span<const double> noise) {
    require(x0.size() == noise.size(), "x0 and noise dimensions differ");
    const double scale = std::sqrt(schedule.alpha_bar(t));
    const double sig = schedule.sigma(t);
    Vec out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = scale * x0[i] + sig * noise[i];
    return out;
}

TimestepGrid make_timestep_grid(const NoiseSchedule& schedule, int nfe) {
    const int T = schedule.num_steps();
    require(nfe >= 2 && nfe <= T, "nfe must be in [2, T]");
    TimestepGrid grid;
    grid.indices.resize(static_cast<std::size_t>(nfe));
    grid.gamma_values.resize(static_cast<std::size_t>(nfe));
    for (int j = 0; j < nfe; ++j) {
        const double pos = 1.0 + static_cast<double>(T - 1) * j / (nfe - 1);
        const int idx = static_cast<int>(std::llround(pos));
        grid.indices[static_cast<std::size_t>(j)] = idx;
        grid.gamma_values[static_cast<std::size_t>(j)] = schedule.gamma(idx);
    }
    grid.delta_ts.resize(static_cast<std::size_t>(nfe - 1));
    const double unit = schedule.continuous_horizon() / T;
    for (int j = 0; j + 1 < nfe; ++j)
        grid.delta_ts[static_cast<std::size_t>(j)] =
            unit * (grid.indices[static_cast<std::size_t>(j + 1)] - grid.indices[static_cast<std::size_t>(j)]);
    return grid;
}

} // namespace diffpath
