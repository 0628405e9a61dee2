#include <doctest.h>

#include <cmath>

#include "diffpath/theory_checks.hpp"

using namespace diffpath;

TEST_CASE("gaussian kl closed form") {
    CHECK(gaussian_kl_closed_form(Vec{1.0, 2.0}, Vec{1.0, 2.0}) == 0.0);
    CHECK(gaussian_kl_closed_form(Vec{1.0, 0.0}, Vec{0.0, 0.0}) == doctest::Approx(0.5));
    CHECK(gaussian_kl_closed_form(Vec{3.0, 4.0}, Vec{0.0, 0.0}) == doctest::Approx(12.5));
    CHECK_THROWS_AS(gaussian_kl_closed_form(Vec{1.0}, Vec{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("kl identity integral reproduces the closed form") {
    const Vec a0{1.0, 0.0}, a1{0.0, 0.0};
    OuProcessSpec spec;
    spec.horizon = 6.0;
    spec.quadrature_steps = 2000;
    spec.seed = 5;

    SUBCASE("identical distributions give zero") {
        CHECK(theorem1_rhs_numeric(a0, a0, spec, InnerExpectation::closed_form) == 0.0);
    }

    SUBCASE("closed-form inner expectation within 1%") {
        const double rhs = theorem1_rhs_numeric(a0, a1, spec, InnerExpectation::closed_form);
        CHECK(std::abs(rhs - 0.5) < 0.005);
    }

    SUBCASE("monte carlo inner expectation within 3%") {
        spec.mc_samples = 2000;
        const double rhs = theorem1_rhs_numeric(a0, a1, spec, InnerExpectation::monte_carlo);
        CHECK(std::abs(rhs - 0.5) < 0.015);
    }

    SUBCASE("result is nonnegative") {
        for (std::uint64_t s = 0; s < 5; ++s) {
            OuProcessSpec mc = spec;
            mc.mc_samples = 100;
            mc.quadrature_steps = 50;
            mc.seed = s;
            CHECK(theorem1_rhs_numeric(a0, a1, mc, InnerExpectation::monte_carlo) >= -1e-9);
        }
    }

    SUBCASE("tail residual is reported analytically") {
        CHECK(theorem1_tail_residual(a0, a1, 6.0) ==
              doctest::Approx(0.5 * std::exp(-12.0)).epsilon(1e-12));
    }
}

TEST_CASE("quadrature error shrinks with refinement and horizon") {
    const Vec a0{1.0, 0.0}, a1{0.0, 0.0};
    const double kl = 0.5;

    SUBCASE("doubling the steps reduces the error monotonically") {
        double prev = 1e9;
        for (int steps : {250, 500, 1000, 2000}) {
            OuProcessSpec spec;
            spec.horizon = 6.0;
            spec.quadrature_steps = steps;
            const double err =
                std::abs(theorem1_rhs_numeric(a0, a1, spec, InnerExpectation::closed_form) - kl);
            CHECK(err < prev);
            prev = err;
        }
    }

    SUBCASE("longer horizons shrink the truncation error") {
        double prev = 1e9;
        for (double horizon : {2.0, 4.0, 6.0}) {
            OuProcessSpec spec;
            spec.horizon = horizon;
            spec.quadrature_steps = 4000;
            const double err =
                std::abs(theorem1_rhs_numeric(a0, a1, spec, InnerExpectation::closed_form) - kl);
            CHECK(err < prev);
            prev = err;
        }
    }
}

TEST_CASE("ot path check") {
    SUBCASE("zero shift keeps the path constant") {
        OuProcessSpec spec;
        spec.horizon = 5.0;
        const OtPathReport report = ot_path_check(Vec{0.0, 0.0}, Vec{0.7, -0.2}, spec, 2000);
        CHECK(report.max_path_error < 1e-12);
        CHECK(report.endpoint_ot_deviation < 1e-12);
        CHECK(report.max_first_derivative_error < 1e-12);
    }

    SUBCASE("endpoint approaches the transport map") {
        OuProcessSpec spec;
        spec.horizon = 10.0;
        const OtPathReport report = ot_path_check(Vec{2.0, 0.0}, Vec{0.0, 0.0}, spec, 10000);
        CHECK(report.endpoint_ot_deviation < 1e-3); // vs (-2, 0)
    }

    SUBCASE("path and derivative profiles match the closed forms") {
        OuProcessSpec spec;
        spec.horizon = 6.0;
        const OtPathReport report = ot_path_check(Vec{2.0, 0.0}, Vec{0.0, 0.0}, spec, 10000);
        CHECK(report.max_path_error < 1e-3);
        CHECK(report.max_first_derivative_error < 1e-3);
        CHECK(report.max_second_derivative_error < 1e-3);
    }

    SUBCASE("endpoint residual decays like e^{-horizon}") {
        double residuals[3];
        const double horizons[3] = {4.0, 6.0, 8.0};
        for (int i = 0; i < 3; ++i) {
            OuProcessSpec spec;
            spec.horizon = horizons[i];
            residuals[i] = ot_path_check(Vec{2.0, 0.0}, Vec{0.0, 0.0}, spec, 1000000)
                               .endpoint_ot_deviation;
        }
        const double expected = std::exp(-2.0);
        for (int i = 0; i < 2; ++i) {
            const double factor = residuals[i + 1] / residuals[i];
            CHECK(std::abs(factor - expected) / expected < 0.2);
        }
    }
}

TEST_CASE("statistic proportionality in the separation scale") {
    OuProcessSpec spec;
    spec.horizon = 6.0;
    spec.quadrature_steps = 2000;
    const Vec direction{1.0, 0.0};

    SUBCASE("doubling the scale doubles the statistic exactly") {
        const ProportionalityReport report =
            statistic_proportionality_check(Vec{1.0, 2.0}, direction, spec);
        CHECK(report.statistics[1] == 2.0 * report.statistics[0]);
    }

    SUBCASE("linear fit through the origin is tight") {
        const ProportionalityReport report =
            statistic_proportionality_check(Vec{1.0, 2.0, 4.0, 8.0}, direction, spec);
        CHECK(report.max_relative_residual < 1e-6);
        CHECK(report.r_squared > 1.0 - 1e-9);
    }

    SUBCASE("zero scale gives a zero statistic") {
        const ProportionalityReport report =
            statistic_proportionality_check(Vec{0.0}, direction, spec);
        CHECK(report.statistics[0] == 0.0);
    }
}

TEST_CASE("standard verification battery passes") {
    const auto lines = run_standard_checks();
    REQUIRE(!lines.empty());
    for (const CheckLine& line : lines) {
        CAPTURE(line.name);
        CHECK(line.pass);
    }
}
