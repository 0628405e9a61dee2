#include <doctest.h>

#include <cmath>
#include <limits>

#include "diffpath/density_models.hpp"
#include "diffpath/rng.hpp"

using namespace diffpath;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Matrix gaussian_blob(const Vec& mean, double stddev, std::size_t n, std::uint64_t seed) {
    Matrix out(n, mean.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < mean.size(); ++j) out(i, j) = mean[j] + stddev * rng.normal();
    return out;
}

} // namespace

TEST_CASE("kde log-likelihood closed cases") {
    SUBCASE("single point at the origin, unit bandwidth") {
        Matrix points(1, 1, 0.0);
        const KdeModel model = kde_fit(points, 1.0);
        CHECK(kde_log_likelihood(model, Vec{0.0}) == doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-12));
    }

    SUBCASE("duplicated training points change nothing") {
        Matrix once(2, 1);
        once(0, 0) = -1.0;
        once(1, 0) = 2.0;
        Matrix twice(4, 1);
        twice(0, 0) = -1.0;
        twice(1, 0) = 2.0;
        twice(2, 0) = -1.0;
        twice(3, 0) = 2.0;
        const KdeModel a = kde_fit(once, 0.7);
        const KdeModel b = kde_fit(twice, 0.7);
        for (double q : {-2.0, -1.0, 0.0, 0.3, 1.9, 5.0})
            CHECK(kde_log_likelihood(a, Vec{q}) ==
                  doctest::Approx(kde_log_likelihood(b, Vec{q})).epsilon(1e-12));
    }

    SUBCASE("density integrates to one") {
        const Matrix points = gaussian_blob(Vec{1.0}, 2.0, 200, 3);
        const KdeModel model = kde_fit(points, scotts_bandwidth(points));
        double lo = points(0, 0), hi = points(0, 0);
        for (std::size_t i = 0; i < points.rows(); ++i) {
            lo = std::min(lo, points(i, 0));
            hi = std::max(hi, points(i, 0));
        }
        lo -= 10.0 * model.bandwidth;
        hi += 10.0 * model.bandwidth;
        const int nodes = 20000;
        const double dx = (hi - lo) / nodes;
        double integral = 0.0;
        for (int i = 0; i < nodes; ++i) {
            const double x = lo + (i + 0.5) * dx;
            integral += std::exp(kde_log_likelihood(model, Vec{x}));
        }
        integral *= dx;
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
    }

    SUBCASE("far query is very negative but finite") {
        Matrix points(1, 2, 0.0);
        const KdeModel model = kde_fit(points, 0.5);
        const double ll = kde_log_likelihood(model, Vec{50.0, 50.0});
        CHECK(std::isfinite(ll));
        CHECK(ll < -1000.0);
    }

    SUBCASE("mode sits at the single training point") {
        Matrix points(1, 1, 0.3);
        const KdeModel model = kde_fit(points, 0.5);
        const double at_point = kde_log_likelihood(model, Vec{0.3});
        for (double q = -2.0; q <= 2.5; q += 0.05)
            CHECK(kde_log_likelihood(model, Vec{q}) <= at_point + 1e-12);
    }

    SUBCASE("two-point model matches the direct formula") {
        Rng rng(7);
        Matrix points(2, 3);
        rng.fill_normal(std::span<double>(points.data()));
        const double h = 0.9;
        const KdeModel model = kde_fit(points, h);
        Vec q{0.2, -0.4, 1.1};
        double direct = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double diff = q[j] - points(i, j);
                d2 += diff * diff;
            }
            direct += std::exp(-d2 / (2.0 * h * h));
        }
        direct = std::log(direct / 2.0) - 3.0 * std::log(h) - 1.5 * kLog2Pi;
        CHECK(kde_log_likelihood(model, q) == doctest::Approx(direct).epsilon(1e-12));
    }

    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(kde_fit(Matrix(1, 1), 0.0), std::invalid_argument);
        CHECK_THROWS_AS(kde_fit(Matrix(0, 1), 1.0), std::invalid_argument);
        const KdeModel model = kde_fit(Matrix(1, 2), 1.0);
        CHECK_THROWS_AS(kde_log_likelihood(model, Vec{1.0}), std::invalid_argument);
    }
}

TEST_CASE("kde log-likelihood is invariant to training row order") {
    const Matrix points = gaussian_blob(Vec{0.0, 1.0}, 1.0, 50, 11);
    Matrix reversed(points.rows(), points.cols());
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t j = 0; j < points.cols(); ++j)
            reversed(points.rows() - 1 - i, j) = points(i, j);
    const KdeModel a = kde_fit(points, 0.8);
    const KdeModel b = kde_fit(reversed, 0.8);
    const Vec q{0.5, 0.5};
    CHECK(kde_log_likelihood(a, q) == doctest::Approx(kde_log_likelihood(b, q)).epsilon(1e-12));
}

TEST_CASE("gmm K=1 full covariance reproduces the closed-form mle") {
    const Matrix points = gaussian_blob(Vec{1.0, -2.0}, 1.5, 400, 13);
    const GmmModel model = gmm_fit_em(points, 1, CovarianceType::full, 17);

    Vec mean(2, 0.0);
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t j = 0; j < 2; ++j) mean[j] += points(i, j);
    for (double& m : mean) m /= static_cast<double>(points.rows());
    Matrix cov(2, 2, 0.0);
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 2; ++c)
                cov(r, c) += (points(i, r) - mean[r]) * (points(i, c) - mean[c]);
    for (double& v : cov.data()) v /= static_cast<double>(points.rows());

    CHECK(model.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(model.means(0, j) == doctest::Approx(mean[j]).epsilon(1e-8));
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(model.covariances(r, c) == doctest::Approx(cov(r, c)).epsilon(1e-8));
}

TEST_CASE("gmm recovers two well-separated components") {
    Matrix points(600, 2);
    Rng rng(19);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const bool left = i % 2 == 0;
        points(i, 0) = (left ? -4.0 : 4.0) + 0.5 * rng.normal();
        points(i, 1) = (left ? 1.0 : -1.0) + 0.5 * rng.normal();
    }
    for (CovarianceType type :
         {CovarianceType::diagonal, CovarianceType::full, CovarianceType::tied}) {
        const GmmModel model = gmm_fit_em(points, 2, type, 23);
        // match components to the truth by sign of the first coordinate
        int left_idx = model.means(0, 0) < 0 ? 0 : 1;
        const auto l = static_cast<std::size_t>(left_idx);
        const auto r = static_cast<std::size_t>(1 - left_idx);
        CHECK(std::abs(model.means(l, 0) - -4.0) < 0.1);
        CHECK(std::abs(model.means(l, 1) - 1.0) < 0.1);
        CHECK(std::abs(model.means(r, 0) - 4.0) < 0.1);
        CHECK(std::abs(model.means(r, 1) - -1.0) < 0.1);
        CHECK(model.weights[l] == doctest::Approx(0.5).epsilon(0.1));
    }
}

TEST_CASE("infinite tolerance returns the seeded initialization") {
    const Matrix points = gaussian_blob(Vec{0.0, 0.0}, 1.0, 100, 29);
    const double inf = std::numeric_limits<double>::infinity();
    const GmmModel a = gmm_fit_em(points, 3, CovarianceType::diagonal, 31, 200, inf);
    const GmmModel b = gmm_fit_em(points, 3, CovarianceType::diagonal, 31, 200, inf);
    CHECK(a.iterations == 0);
    CHECK(a.weights == b.weights);
    CHECK(a.means.data() == b.means.data());
    CHECK(a.covariances.data() == b.covariances.data());
}

TEST_CASE("em log-likelihood is monotone over iterations") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Matrix points(300, 2);
        Rng rng(seed + 100);
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const double shift = i % 3 == 0 ? -3.0 : (i % 3 == 1 ? 0.0 : 3.0);
            points(i, 0) = shift + rng.normal();
            points(i, 1) = 0.5 * shift + rng.normal();
        }
        for (CovarianceType type : {CovarianceType::diagonal, CovarianceType::full}) {
            const GmmModel model = gmm_fit_em(points, 3, type, seed, 100, 1e-8);
            REQUIRE(model.ll_history.size() >= 2);
            for (std::size_t i = 1; i < model.ll_history.size(); ++i)
                CHECK(model.ll_history[i] >= model.ll_history[i - 1] - 1e-9);
        }
    }
}

TEST_CASE("degenerate all-identical data is floored, not an error") {
    Matrix points(50, 2, 3.25);
    const GmmModel model = gmm_fit_em(points, 2, CovarianceType::diagonal, 37);
    for (double v : model.covariances.data()) CHECK(v > 0.0);
    CHECK(std::isfinite(gmm_log_likelihood(model, Vec{3.25, 3.25})));
}

TEST_CASE("covariance floor keeps variances away from zero") {
    // second dimension is constant: raw mle variance would be 0
    Matrix points = gaussian_blob(Vec{0.0}, 1.0, 200, 41);
    Matrix padded(points.rows(), 2);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        padded(i, 0) = points(i, 0);
        padded(i, 1) = 7.0;
    }
    const GmmModel model = gmm_fit_em(padded, 1, CovarianceType::diagonal, 43);
    double scale = 0.0; // mean data variance across dims
    double mean0 = 0.0;
    for (std::size_t i = 0; i < padded.rows(); ++i) mean0 += padded(i, 0);
    mean0 /= static_cast<double>(padded.rows());
    for (std::size_t i = 0; i < padded.rows(); ++i)
        scale += (padded(i, 0) - mean0) * (padded(i, 0) - mean0);
    scale /= static_cast<double>(padded.rows()) * 2.0;
    CHECK(model.covariances(0, 1) >= 1e-6 * scale);
}

TEST_CASE("fewer points than components is rejected") {
    CHECK_THROWS_AS(gmm_fit_em(Matrix(2, 2), 3, CovarianceType::diagonal, 1),
                    std::invalid_argument);
}

TEST_CASE("gmm log-likelihood closed cases") {
    SUBCASE("K=1 identity covariance at the mean") {
        GmmModel model;
        model.num_components = 1;
        model.cov_type = CovarianceType::diagonal;
        model.weights = {1.0};
        model.means = Matrix(1, 3, 0.5);
        model.covariances = Matrix(1, 3, 1.0);
        CHECK(gmm_log_likelihood(model, Vec{0.5, 0.5, 0.5}) ==
              doctest::Approx(-1.5 * kLog2Pi).epsilon(1e-12));
    }

    SUBCASE("zero-weight component is ignored") {
        GmmModel model;
        model.num_components = 2;
        model.cov_type = CovarianceType::diagonal;
        model.weights = {1.0, 0.0};
        model.means = Matrix(2, 2, 0.0);
        model.means(1, 0) = 100.0;
        model.covariances = Matrix(2, 2, 1.0);
        const double want = -0.5 * (0.25 + 2.0 * kLog2Pi);
        CHECK(gmm_log_likelihood(model, Vec{0.5, 0.0}) == doctest::Approx(want).epsilon(1e-12));
    }

    SUBCASE("random model matches direct summation") {
        Rng rng(47);
        GmmModel model;
        model.num_components = 3;
        model.cov_type = CovarianceType::diagonal;
        model.weights = {0.2, 0.5, 0.3};
        model.means = Matrix(3, 2);
        model.covariances = Matrix(3, 2);
        for (double& v : model.means.data()) v = rng.normal();
        for (double& v : model.covariances.data()) v = 0.5 + rng.uniform();
        const Vec q{0.3, -0.8};
        double direct = 0.0;
        for (int k = 0; k < 3; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            double quad = 0.0, logdet = 0.0;
            for (std::size_t j = 0; j < 2; ++j) {
                const double diff = q[j] - model.means(ks, j);
                quad += diff * diff / model.covariances(ks, j);
                logdet += std::log(model.covariances(ks, j));
            }
            direct += model.weights[ks] * std::exp(-0.5 * (quad + logdet + 2.0 * kLog2Pi));
        }
        CHECK(gmm_log_likelihood(model, q) == doctest::Approx(std::log(direct)).epsilon(1e-12));
    }
}

TEST_CASE("bic matches the hand formula") {
    const Matrix points = gaussian_blob(Vec{0.0, 0.0}, 1.0, 128, 53);
    const GmmModel model = gmm_fit_em(points, 2, CovarianceType::diagonal, 59);
    double total_ll = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        total_ll += gmm_log_likelihood(model, points.row(i));
    const int params = (2 - 1) + 2 * 2 + 2 * 2;
    CHECK(gmm_param_count(2, 2, CovarianceType::diagonal) == params);
    const double want = -2.0 * total_ll + params * std::log(128.0);
    CHECK(gmm_bic(model, points) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("model selection") {
    SUBCASE("grid of one returns that fit") {
        const Matrix points = gaussian_blob(Vec{0.0, 0.0}, 1.0, 100, 61);
        const int ks[] = {2};
        const CovarianceType types[] = {CovarianceType::diagonal};
        const GmmModel model = gmm_select(points, ks, types, 67);
        CHECK(model.num_components == 2);
        CHECK(model.cov_type == CovarianceType::diagonal);
    }

    SUBCASE("bic prefers one component on unimodal data") {
        const int ks[] = {1, 2};
        const CovarianceType types[] = {CovarianceType::diagonal};
        int chose_one = 0;
        const int trials = 20;
        for (int trial = 0; trial < trials; ++trial) {
            const Matrix points =
                gaussian_blob(Vec{0.0, 0.0}, 1.0, 200, 1000 + static_cast<std::uint64_t>(trial));
            const GmmModel model =
                gmm_select(points, ks, types, static_cast<std::uint64_t>(trial));
            if (model.num_components == 1) ++chose_one;
        }
        CHECK(chose_one >= 19); // >= 95% of seeded trials
    }

    SUBCASE("empty grids are rejected") {
        const Matrix points = gaussian_blob(Vec{0.0}, 1.0, 10, 71);
        CHECK_THROWS_AS(gmm_select(points, {}, {}, 1), std::invalid_argument);
    }
}

TEST_CASE("gmm total log-likelihood is invariant to training row order") {
    const Matrix points = gaussian_blob(Vec{1.0, 1.0}, 1.0, 60, 73);
    Matrix reversed(points.rows(), points.cols());
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t j = 0; j < points.cols(); ++j)
            reversed(points.rows() - 1 - i, j) = points(i, j);
    const GmmModel model = gmm_fit_em(points, 1, CovarianceType::full, 79);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        a += gmm_log_likelihood(model, points.row(i));
        b += gmm_log_likelihood(model, reversed.row(i));
    }
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}
