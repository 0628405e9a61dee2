#pragma once

#include <span>
#include <vector>

#include "diffpath/common.hpp"

namespace diffpath {

// Discretized variance-preserving noise schedule. Timesteps are 1-based:
// t in {1..T}, stored at index t-1. By construction sigma_t^2 + abar_t = 1
// and gamma_t = sigma_t / sqrt(abar_t), so gamma is strictly increasing
// while abar strictly decreases. Immutable after construction; safe for
// concurrent reads.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas, double continuous_horizon);

    int num_steps() const noexcept { return static_cast<int>(betas_.size()); }
    double continuous_horizon() const noexcept { return horizon_; }

    double beta(int t) const { return betas_[check(t)]; }
    double alpha_bar(int t) const { return alpha_bars_[check(t)]; }
    double sigma(int t) const { return sigmas_[check(t)]; }
    double gamma(int t) const { return gammas_[check(t)]; }

    // Continuous time of discrete index t: t/T * horizon.
    double time_of(int t) const { return static_cast<double>(check(t) + 1) / num_steps() * horizon_; }

    const std::vector<double>& betas() const noexcept { return betas_; }
    const std::vector<double>& alpha_bars() const noexcept { return alpha_bars_; }
    const std::vector<double>& sigmas() const noexcept { return sigmas_; }
    const std::vector<double>& gammas() const noexcept { return gammas_; }

private:
    std::size_t check(int t) const {
        require(t >= 1 && t <= num_steps(), "timestep index out of range");
        return static_cast<std::size_t>(t - 1);
    }

    std::vector<double> betas_, alpha_bars_, sigmas_, gammas_;
    double horizon_;
};

// Strictly increasing subsequence of {1..T} used for DDIM integration,
// with the gamma values and continuous-time gaps at those indices.
struct TimestepGrid {
    std::vector<int> indices;        // length nfe, last == T
    std::vector<double> gamma_values; // length nfe
    std::vector<double> delta_ts;     // length nfe-1, continuous-time gaps
    int nfe() const noexcept { return static_cast<int>(indices.size()); }
};

NoiseSchedule build_linear_schedule(int num_steps, double beta_start, double beta_end,
                                    double continuous_horizon = 1.0);

// Squared-cosine alpha_bar profile (offset 0.008), per-step beta capped at
// 0.9999.
NoiseSchedule build_cosine_schedule(int num_steps, double continuous_horizon = 1.0);

// sqrt(abar_t) * x0 + sigma_t * noise
Vec forward_marginal_sample(const NoiseSchedule& schedule, std::span<const double> x0, int t,
                            std::span<const double> noise);

TimestepGrid make_timestep_grid(const NoiseSchedule& schedule, int nfe);

} // namespace diffpath
