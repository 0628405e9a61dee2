#include <doctest.h>

#include <cmath>
#include <string>

#include "diffpath/common.hpp"
#include "diffpath/kernels.hpp"
#include "diffpath/rng.hpp"

using namespace diffpath;

namespace {

// Reassociation bound for comparing SIMD reductions against the scalar
// reference: absolute error scaled by the sum of term magnitudes.
void check_close(double got, double want, double magnitude) {
    const double tol = 1e-13 * (magnitude + 1.0);
    CHECK(std::abs(got - want) <= tol);
}

} // namespace

TEST_CASE("simd variants match the scalar reference on random inputs") {
    const auto& ref = kernels::scalar_ops();
    for (const kernels::Ops* ops : kernels::available()) {
        CAPTURE(ops->name);
        Rng rng(7);
        for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 17u, 64u, 1000u, 1001u}) {
            Vec a(n), b(n);
            rng.fill_normal(a);
            rng.fill_normal(b);
            double mag_a = 0.0, mag_ab = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mag_a += std::abs(a[i]);
                mag_ab += std::abs(a[i] * b[i]);
            }

            check_close(ops->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), mag_ab);
            check_close(ops->sum(a.data(), n), ref.sum(a.data(), n), mag_a);
            check_close(ops->sumsq(a.data(), n), ref.sumsq(a.data(), n),
                        ref.sumsq(a.data(), n));
            check_close(ops->sqdist(a.data(), b.data(), n), ref.sqdist(a.data(), b.data(), n),
                        ref.sqdist(a.data(), b.data(), n));
            if (n > 0) CHECK(ops->max(a.data(), n) == ref.max(a.data(), n));

            double got[3] = {0, 0, 0}, want[3] = {0, 0, 0};
            ops->power_sums123(a.data(), n, got);
            ref.power_sums123(a.data(), n, want);
            for (int p = 0; p < 3; ++p) check_close(got[p], want[p], mag_a * 8.0 + 8.0);

            Vec y1(b), y2(b);
            ops->axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            // fused multiply-add variants round once where the reference
            // rounds twice, so elementwise agreement is to one ulp
            for (std::size_t i = 0; i < n; ++i)
                CHECK(std::abs(y1[i] - y2[i]) <=
                      1e-15 * (std::abs(0.37 * a[i]) + std::abs(b[i]) + 1.0));

            Vec x1(a), x2(a);
            ops->scal(-1.25, x1.data(), n);
            ref.scal(-1.25, x2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(x1[i] == x2[i]);
        }
    }
}

TEST_CASE("kernel sign symmetry is exact per variant") {
    for (const kernels::Ops* ops : kernels::available()) {
        CAPTURE(ops->name);
        Rng rng(11);
        Vec a(129), neg(129);
        rng.fill_normal(a);
        for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];

        double pa[3] = {0, 0, 0}, pn[3] = {0, 0, 0};
        ops->power_sums123(a.data(), a.size(), pa);
        ops->power_sums123(neg.data(), neg.size(), pn);
        CHECK(pn[0] == -pa[0]);
        CHECK(pn[1] == pa[1]);
        CHECK(pn[2] == -pa[2]);
        CHECK(ops->sumsq(neg.data(), neg.size()) == ops->sumsq(a.data(), a.size()));
    }
}

TEST_CASE("power sums accumulate into the output") {
    const auto& ops = kernels::active();
    Vec v{1.0, -2.0};
    double out[3] = {10.0, 20.0, 30.0};
    ops.power_sums123(v.data(), v.size(), out);
    CHECK(out[0] == doctest::Approx(10.0 - 1.0));
    CHECK(out[1] == doctest::Approx(20.0 + 5.0));
    CHECK(out[2] == doctest::Approx(30.0 - 7.0));
}

TEST_CASE("dispatch reports at least the scalar backend") {
    const auto available = kernels::available();
    REQUIRE(!available.empty());
    CHECK(std::string(available.front()->name) == "scalar");
    CHECK(kernels::select_by_name(kernels::active().name));
    CHECK_FALSE(kernels::select_by_name("not-a-backend"));
}
