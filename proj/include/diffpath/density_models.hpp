#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "diffpath/common.hpp"

namespace diffpath {

// Gaussian-kernel density estimate with a scalar bandwidth shared across
// dimensions.
struct KdeModel {
    Matrix points; // N x k
    double bandwidth = 1.0;

    int dim() const noexcept { return static_cast<int>(points.cols()); }
};

KdeModel kde_fit(const Matrix& points, double bandwidth);

// Scott's rule: mean per-dimension standard deviation * N^(-1/(k+4)).
double scotts_bandwidth(const Matrix& points);

double kde_log_likelihood(const KdeModel& model, std::span<const double> x);

enum class CovarianceType { diagonal, full, tied };

std::string_view covariance_type_name(CovarianceType type);
CovarianceType covariance_type_from_name(std::string_view name);

struct GmmModel {
    int num_components = 0;
    CovarianceType cov_type = CovarianceType::diagonal;
    Vec weights;  // K
    Matrix means; // K x k
    // diagonal: K x k variances; full: K stacked k x k blocks (K*k x k);
    // tied: one k x k block shared by all components.
    Matrix covariances;

    // Fit metadata.
    double final_log_likelihood = 0.0; // mean per-sample log-likelihood
    Vec ll_history;                    // mean LL after init and after each EM iteration
    int iterations = 0;
    std::uint64_t seed = 0;

    int dim() const noexcept { return static_cast<int>(means.cols()); }
};

GmmModel gmm_fit_em(const Matrix& points, int num_components, CovarianceType cov_type,
                    std::uint64_t seed, int max_iters = 200, double tol = 1e-6);

// Fits every (K, covariance type) pair and returns the BIC minimizer; ties
// break toward smaller K, then diagonal < tied < full.
GmmModel gmm_select(const Matrix& points, std::span<const int> k_grid,
                    std::span<const CovarianceType> cov_types, std::uint64_t seed,
                    int max_iters = 200, double tol = 1e-6);

double gmm_log_likelihood(const GmmModel& model, std::span<const double> x);

// -2 * total log-likelihood + n_params * ln N
double gmm_bic(const GmmModel& model, const Matrix& points);

int gmm_param_count(int num_components, int dim, CovarianceType type);

} // namespace diffpath
