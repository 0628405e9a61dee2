#include "diffpath/theory_checks.hpp"

#include <cmath>

#include "diffpath/kernels.hpp"
#include "diffpath/parallel.hpp"
#include "diffpath/rng.hpp"

namespace diffpath {

namespace {
constexpr double kG2 = 2.0; // g(t)^2
}

double gaussian_kl_closed_form(std::span<const double> a0, std::span<const double> a1) {
    require(a0.size() == a1.size(), "mean dimension mismatch");
    return 0.5 * kernels::sqdist(a0, a1);
}

double theorem1_tail_residual(std::span<const double> a0, std::span<const double> a1,
                              double horizon) {
    return gaussian_kl_closed_form(a0, a1) * std::exp(-2.0 * horizon);
}

double theorem1_rhs_numeric(std::span<const double> a0, std::span<const double> a1,
                            const OuProcessSpec& spec, InnerExpectation inner) {
    require(a0.size() == a1.size(), "mean dimension mismatch");
    spec.validate();
    const std::size_t d = a0.size();
    const double dt = spec.horizon / spec.quadrature_steps;
    const double dist2 = kernels::sqdist(a0, a1);
    const auto nodes = static_cast<std::size_t>(spec.quadrature_steps);

    Vec node_values(nodes, 0.0);
    if (inner == InnerExpectation::closed_form) {
        // E || grad log phi - grad log psi ||^2 = e^{-2t} ||a0 - a1||^2
        for (std::size_t q = 0; q < nodes; ++q) {
            const double t = (static_cast<double>(q) + 0.5) * dt;
            node_values[q] = kG2 * dist2 * std::exp(-2.0 * t);
        }
    } else {
        parallel_for(nodes, [&](std::size_t begin, std::size_t end) {
            Vec x(d);
            for (std::size_t q = begin; q < end; ++q) {
                const double t = (static_cast<double>(q) + 0.5) * dt;
                const double decay = std::exp(-t);
                Rng rng(Rng::derive(spec.seed, q));
                double acc = 0.0;
                for (int s = 0; s < spec.mc_samples; ++s) {
                    // x ~ phi_t = N(a0 e^{-t}, I)
                    for (std::size_t i = 0; i < d; ++i) x[i] = a0[i] * decay + rng.normal();
                    // grad log phi - grad log psi = (a0 - a1) e^{-t}, evaluated
                    // here from both scores to keep the estimator generic
                    double diff2 = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        const double sphi = -(x[i] - a0[i] * decay);
                        const double spsi = -(x[i] - a1[i] * decay);
                        diff2 += (sphi - spsi) * (sphi - spsi);
                    }
                    acc += kG2 * diff2;
                }
                node_values[q] = acc / spec.mc_samples;
            }
        });
    }

    double integral = 0.0;
    for (std::size_t q = 0; q < nodes; ++q) integral += node_values[q];
    return 0.5 * integral * dt;
}

OtPathReport ot_path_check(std::span<const double> a, std::span<const double> x0,
                           const OuProcessSpec& spec, long euler_steps) {
    require(a.size() == x0.size(), "dimension mismatch");
    require(euler_steps >= 2, "need at least two Euler steps");
    spec.validate();
    const std::size_t d = a.size();
    const double dt = spec.horizon / static_cast<double>(euler_steps);
    const double a_norm = std::sqrt(kernels::sumsq(a));

    OtPathReport report;
    report.expected_endpoint_residual = a_norm * std::exp(-spec.horizon);

    Vec x(x0.begin(), x0.end());
    Vec rhs(d), prev_rhs(d), closed(d);
    for (long k = 0; k < euler_steps; ++k) {
        const double t = dt * static_cast<double>(k);
        const double decay = std::exp(-t);
        // dx/dt = f(x) - g^2/2 * grad log p_t(x) with f = -x, g^2 = 2,
        // grad log p_t(x) = -(x - a e^{-t})
        for (std::size_t i = 0; i < d; ++i) rhs[i] = -x[i] + (x[i] - a[i] * decay);

        // first-derivative profile from the realized path differences
        const double deriv_norm = std::sqrt(kernels::sumsq(rhs));
        const double first_err = std::abs(deriv_norm - a_norm * decay);
        if (first_err > report.max_first_derivative_error)
            report.max_first_derivative_error = first_err;

        if (k > 0) {
            // second differences attributed to the step midpoint
            const double t_mid = t - 0.5 * dt;
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double dd = (rhs[i] - prev_rhs[i]) / dt;
                acc += dd * dd;
            }
            const double second_err = std::abs(std::sqrt(acc) - a_norm * std::exp(-t_mid));
            if (second_err > report.max_second_derivative_error)
                report.max_second_derivative_error = second_err;
        }
        prev_rhs = rhs;

        for (std::size_t i = 0; i < d; ++i) x[i] += dt * rhs[i];

        const double t_next = dt * static_cast<double>(k + 1);
        const double shift = std::exp(-t_next) - 1.0;
        double path_err2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            closed[i] = x0[i] + a[i] * shift;
            const double diff = x[i] - closed[i];
            path_err2 += diff * diff;
        }
        if (path_err2 > report.max_path_error * report.max_path_error)
            report.max_path_error = std::sqrt(path_err2);
    }

    double end2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = x[i] - (x0[i] - a[i]);
        end2 += diff * diff;
    }
    report.endpoint_ot_deviation = std::sqrt(end2);
    return report;
}

ProportionalityReport statistic_proportionality_check(std::span<const double> scales,
                                                      std::span<const double> direction,
                                                      const OuProcessSpec& spec) {
    require(!scales.empty(), "need at least one scale");
    for (double s : scales) require(s >= 0.0, "scales must be nonnegative");
    spec.validate();
    const double dir_norm2 = kernels::sumsq(direction);
    const double dt = spec.horizon / spec.quadrature_steps;

    ProportionalityReport report;
    report.scales.assign(scales.begin(), scales.end());
    report.statistics.resize(scales.size());
    for (std::size_t s = 0; s < scales.size(); ++s) {
        // integral of || a e^{-t} ||^2 over the horizon, midpoint rule
        double integral = 0.0;
        for (int q = 0; q < spec.quadrature_steps; ++q) {
            const double t = (static_cast<double>(q) + 0.5) * dt;
            integral += scales[s] * scales[s] * dir_norm2 * std::exp(-2.0 * t);
        }
        report.statistics[s] = std::sqrt(integral * dt);
    }

    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < scales.size(); ++s) {
        num += scales[s] * report.statistics[s];
        den += scales[s] * scales[s];
    }
    report.slope = den > 0.0 ? num / den : 0.0;

    double ss_res = 0.0, ss_tot = 0.0, mean_stat = 0.0;
    for (double v : report.statistics) mean_stat += v;
    mean_stat /= static_cast<double>(report.statistics.size());
    for (std::size_t s = 0; s < scales.size(); ++s) {
        const double fit = report.slope * scales[s];
        const double res = report.statistics[s] - fit;
        ss_res += res * res;
        ss_tot += (report.statistics[s] - mean_stat) * (report.statistics[s] - mean_stat);
        if (report.statistics[s] > 0.0) {
            const double rel = std::abs(res) / report.statistics[s];
            if (rel > report.max_relative_residual) report.max_relative_residual = rel;
        }
    }
    report.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return report;
}

std::vector<CheckLine> run_standard_checks() {
    std::vector<CheckLine> lines;
    auto add = [&](std::string name, double measured, double tolerance) {
        lines.push_back({std::move(name), measured, tolerance, measured <= tolerance});
    };

    const Vec a0{1.0, 0.0}, a1{0.0, 0.0};
    const double kl = gaussian_kl_closed_form(a0, a1);

    OuProcessSpec spec;
    spec.horizon = 6.0;
    spec.quadrature_steps = 2000;
    spec.mc_samples = 10000;
    spec.seed = 1234;

    const double rhs_closed = theorem1_rhs_numeric(a0, a1, spec, InnerExpectation::closed_form);
    add("kl_identity_closed_form_rel_error", std::abs(rhs_closed - kl) / kl, 0.01);

    const double rhs_mc = theorem1_rhs_numeric(a0, a1, spec, InnerExpectation::monte_carlo);
    add("kl_identity_monte_carlo_rel_error", std::abs(rhs_mc - kl) / kl, 0.03);

    const Vec a{2.0, 0.0}, x0{0.0, 0.0};
    OuProcessSpec path_spec;
    path_spec.horizon = 6.0;
    const OtPathReport path = ot_path_check(a, x0, path_spec, 10000);
    add("ot_path_max_error", path.max_path_error, 1e-3);
    add("ot_first_derivative_profile_error", path.max_first_derivative_error, 1e-3);
    add("ot_second_derivative_profile_error", path.max_second_derivative_error, 1e-3);

    OuProcessSpec end_spec;
    end_spec.horizon = 10.0;
    const OtPathReport end_path = ot_path_check(a, x0, end_spec, 10000);
    add("ot_endpoint_deviation", end_path.endpoint_ot_deviation, 1e-3);

    // endpoint residual should shrink by about e^{-2} per horizon step of 2
    double residuals[3];
    const double horizons[3] = {4.0, 6.0, 8.0};
    for (int i = 0; i < 3; ++i) {
        OuProcessSpec s;
        s.horizon = horizons[i];
        residuals[i] = ot_path_check(a, x0, s, 1000000).endpoint_ot_deviation;
    }
    const double expected = std::exp(-2.0);
    for (int i = 0; i < 2; ++i) {
        const double factor = residuals[i + 1] / residuals[i];
        add("ot_residual_decay_factor_rel_error_" + std::to_string(i),
            std::abs(factor - expected) / expected, 0.20);
    }

    const Vec scales{1.0, 2.0, 4.0, 8.0};
    const Vec direction{1.0, 0.0};
    const ProportionalityReport prop = statistic_proportionality_check(scales, direction, spec);
    add("statistic_linearity_max_rel_residual", prop.max_relative_residual, 1e-6);
    add("statistic_linearity_r2_deficit", 1.0 - prop.r_squared, 1e-9);

    return lines;
}

} // namespace diffpath
