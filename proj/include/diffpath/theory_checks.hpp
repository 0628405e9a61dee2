#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diffpath/common.hpp"

namespace diffpath {

// Constant-rate Ornstein-Uhlenbeck forward process dx = -x dt + sqrt(2) dw:
// drift f(x) = -x, diffusion g = sqrt(2), marginal scale abar(t) = e^{-2t},
// sigma(t)^2 = 1 - e^{-2t}. A Gaussian N(a, I) evolves to N(a e^{-t}, I),
// so score differences, the KL integrand, and the probability-flow path all
// have closed forms to verify against.
struct OuProcessSpec {
    double horizon = 6.0;       // T_max
    int quadrature_steps = 2000; // midpoint nodes over [0, horizon]
    int mc_samples = 10000;
    std::uint64_t seed = 0;

    void validate() const {
        require(horizon > 0.0, "horizon must be positive");
        require(quadrature_steps >= 1 && mc_samples >= 1, "counts must be >= 1");
    }
};

// KL(N(a0, I) || N(a1, I)) = 0.5 ||a0 - a1||^2
double gaussian_kl_closed_form(std::span<const double> a0, std::span<const double> a1);

enum class InnerExpectation { closed_form, monte_carlo };

// 0.5 * integral over [0, horizon] of E_{x ~ N(a0 e^{-t}, I)}
// [ g^2 || grad log phi_t - grad log psi_t ||^2 ], midpoint quadrature.
// The inner expectation is available in closed form (g^2 e^{-2t} ||a0-a1||^2)
// or estimated by Monte Carlo over the analytic score difference.
double theorem1_rhs_numeric(std::span<const double> a0, std::span<const double> a1,
                            const OuProcessSpec& spec, InnerExpectation inner);

// Truncation tail 0.5 ||a0 - a1||^2 e^{-2 horizon} left out by stopping the
// integral at the horizon.
double theorem1_tail_residual(std::span<const double> a0, std::span<const double> a1,
                              double horizon);

struct OtPathReport {
    double max_path_error = 0.0;          // vs x_t = x0 + a (e^{-t} - 1)
    double endpoint_ot_deviation = 0.0;   // || x_T - (x0 - a) ||
    double expected_endpoint_residual = 0.0; // ||a|| e^{-horizon}
    double max_first_derivative_error = 0.0;  // | ||dx/dt|| - ||a|| e^{-t} |, path differences
    double max_second_derivative_error = 0.0; // same for second differences at midpoints
};

// Integrates the probability-flow ODE dx/dt = -x - grad log p_t(x) with the
// analytic Gaussian score by explicit Euler and compares path, derivatives
// and endpoint against the closed forms.
OtPathReport ot_path_check(std::span<const double> a, std::span<const double> x0,
                           const OuProcessSpec& spec, long euler_steps = 10000);

struct ProportionalityReport {
    Vec scales;
    Vec statistics; // integrated curvature-norm statistic per scale
    double slope = 0.0;
    double max_relative_residual = 0.0;
    double r_squared = 1.0;
};

// The closed-form time-integrated derivative-norm statistic
// sqrt(integral ||a||^2 e^{-2t} dt) must be linear in ||a||; fits a line
// through the origin over the given scales of one direction.
ProportionalityReport statistic_proportionality_check(std::span<const double> scales,
                                                      std::span<const double> direction,
                                                      const OuProcessSpec& spec);

// One line of the `verify` report.
struct CheckLine {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// The standard verification battery with pinned tolerances.
std::vector<CheckLine> run_standard_checks();

} // namespace diffpath
