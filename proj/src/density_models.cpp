#include "diffpath/density_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diffpath/kernels.hpp"
#include "diffpath/rng.hpp"

namespace diffpath {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

// ---------------------------------------------------------------------------
// KDE

KdeModel kde_fit(const Matrix& points, double bandwidth) {
    require(points.rows() >= 1, "KDE needs at least one training point");
    require(points.cols() >= 1, "KDE needs at least one dimension");
    require(bandwidth > 0.0, "KDE bandwidth must be positive");
    return KdeModel{points, bandwidth};
}

double scotts_bandwidth(const Matrix& points) {
    const std::size_t n = points.rows();
    const std::size_t k = points.cols();
    require(n >= 1 && k >= 1, "empty training set");
    double mean_std = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += points(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = points(i, j) - mean;
            sq += d * d;
        }
        mean_std += std::sqrt(sq / static_cast<double>(n));
    }
    mean_std /= static_cast<double>(k);
    const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(k) + 4.0));
    const double h = mean_std * factor;
    return h > 0.0 ? h : 1.0; // degenerate all-identical data
}

double kde_log_likelihood(const KdeModel& model, std::span<const double> x) {
    require(static_cast<int>(x.size()) == model.dim(), "KDE query dimension mismatch");
    const std::size_t n = model.points.rows();
    const double inv2h2 = 1.0 / (2.0 * model.bandwidth * model.bandwidth);
    thread_local Vec log_terms;
    log_terms.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        log_terms[i] = -kernels::sqdist(model.points.row(i), x) * inv2h2;
    const double m = kernels::max(log_terms);
    double acc = 0.0;
    for (double lt : log_terms) acc += std::exp(lt - m);
    const double k = static_cast<double>(model.points.cols());
    return m + std::log(acc) - std::log(static_cast<double>(n)) - k * std::log(model.bandwidth) -
           0.5 * k * kLog2Pi;
}

// ---------------------------------------------------------------------------
// Small dense symmetric helpers (k is the statistic width, so tiny)

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. a is destroyed;
// eigenvectors are returned as columns of v.
void jacobi_eigen(Matrix a, Vec& eigvals, Matrix& v) {
    const std::size_t n = a.rows();
    v = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-28) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a(i, i);
}

// Clamps eigenvalues of a symmetric matrix to >= floor (in place, only when
// needed).
void floor_symmetric(Matrix& m, double floor) {
    const std::size_t n = m.rows();
    Vec eigvals;
    Matrix v;
    jacobi_eigen(m, eigvals, v);
    bool clamped = false;
    for (double& e : eigvals) {
        if (e < floor) {
            e = floor;
            clamped = true;
        }
    }
    if (!clamped) return;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < n; ++l) acc += v(i, l) * eigvals[l] * v(j, l);
            m(i, j) = acc;
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double sym = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = m(j, i) = sym;
        }
}

// Lower-triangular Cholesky factor; false if the matrix is not positive
// definite.
bool cholesky(const Matrix& m, Matrix& l) {
    const std::size_t n = m.rows();
    l = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = m(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            if (i == j) {
                if (acc <= 0.0) return false;
                l(i, i) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }
    return true;
}

// Gaussian log-density evaluator for one component with a prefactored
// covariance.
struct ComponentDensity {
    std::span<const double> mean;
    // diagonal
    std::span<const double> variances;
    // full/tied
    const Matrix* chol = nullptr;
    double logdet = 0.0;
    bool diagonal = true;

    double log_density(std::span<const double> x, Vec& work) const {
        const std::size_t k = mean.size();
        if (diagonal) {
            double quad = 0.0, ld = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double d = x[i] - mean[i];
                quad += d * d / variances[i];
                ld += std::log(variances[i]);
            }
            return -0.5 * (quad + ld + static_cast<double>(k) * kLog2Pi);
        }
        work.resize(k);
        // forward solve L y = x - mean
        for (std::size_t i = 0; i < k; ++i) {
            double acc = x[i] - mean[i];
            for (std::size_t j = 0; j < i; ++j) acc -= (*chol)(i, j) * work[j];
            work[i] = acc / (*chol)(i, i);
        }
        return -0.5 * (kernels::sumsq(work) + logdet + static_cast<double>(k) * kLog2Pi);
    }
};

// Prefactored view of a GmmModel used by both EM and scoring.
struct GmmEvaluator {
    const GmmModel* model;
    std::vector<Matrix> chols; // per component (or one for tied)
    Vec logdets;
    Vec log_weights;

    explicit GmmEvaluator(const GmmModel& m) : model(&m) {
        const int K = m.num_components;
        const std::size_t k = static_cast<std::size_t>(m.dim());
        log_weights.resize(static_cast<std::size_t>(K));
        for (int j = 0; j < K; ++j)
            log_weights[static_cast<std::size_t>(j)] =
                m.weights[static_cast<std::size_t>(j)] > 0.0
                    ? std::log(m.weights[static_cast<std::size_t>(j)])
                    : -kInf;
        if (m.cov_type == CovarianceType::diagonal) return;
        const int blocks = m.cov_type == CovarianceType::tied ? 1 : K;
        chols.resize(static_cast<std::size_t>(blocks));
        logdets.resize(static_cast<std::size_t>(blocks));
        for (int b = 0; b < blocks; ++b) {
            Matrix block(k, k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j2 = 0; j2 < k; ++j2)
                    block(i, j2) = m.covariances(static_cast<std::size_t>(b) * k + i, j2);
            if (!cholesky(block, chols[static_cast<std::size_t>(b)]))
                throw NumericError("GMM covariance is not positive definite");
            double ld = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                ld += 2.0 * std::log(chols[static_cast<std::size_t>(b)](i, i));
            logdets[static_cast<std::size_t>(b)] = ld;
        }
    }

    ComponentDensity component(int j) const {
        ComponentDensity c;
        c.mean = model->means.row(static_cast<std::size_t>(j));
        if (model->cov_type == CovarianceType::diagonal) {
            c.variances = model->covariances.row(static_cast<std::size_t>(j));
            c.diagonal = true;
        } else {
            const std::size_t b =
                model->cov_type == CovarianceType::tied ? 0 : static_cast<std::size_t>(j);
            c.chol = &chols[b];
            c.logdet = logdets[b];
            c.diagonal = false;
        }
        return c;
    }

    // Fills log(w_j N_j(x)) per component; returns log p(x).
    double component_log_terms(std::span<const double> x, Vec& log_terms, Vec& work) const {
        const int K = model->num_components;
        log_terms.resize(static_cast<std::size_t>(K));
        for (int j = 0; j < K; ++j)
            log_terms[static_cast<std::size_t>(j)] =
                log_weights[static_cast<std::size_t>(j)] + component(j).log_density(x, work);
        const double m = kernels::max(log_terms);
        if (m == -kInf) return -kInf;
        double acc = 0.0;
        for (double lt : log_terms) acc += std::exp(lt - m);
        return m + std::log(acc);
    }
};

double covariance_floor(const Matrix& points) {
    const std::size_t n = points.rows();
    const std::size_t k = points.cols();
    double scale = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += points(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = points(i, j) - mean;
            sq += d * d;
        }
        scale += sq / static_cast<double>(n);
    }
    scale /= static_cast<double>(k);
    const double floor = 1e-6 * scale;
    return floor > 0.0 ? floor : 1e-12;
}

void apply_covariance_floor(GmmModel& model, double floor) {
    const std::size_t k = static_cast<std::size_t>(model.dim());
    if (model.cov_type == CovarianceType::diagonal) {
        for (double& v : model.covariances.data())
            if (v < floor) v = floor;
        return;
    }
    const int blocks = model.cov_type == CovarianceType::tied ? 1 : model.num_components;
    for (int b = 0; b < blocks; ++b) {
        Matrix block(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                block(i, j) = model.covariances(static_cast<std::size_t>(b) * k + i, j);
        floor_symmetric(block, floor);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                model.covariances(static_cast<std::size_t>(b) * k + i, j) = block(i, j);
    }
}

std::vector<std::size_t> kmeanspp_centers(const Matrix& points, int K, Rng& rng) {
    const std::size_t n = points.rows();
    std::vector<std::size_t> centers;
    centers.reserve(static_cast<std::size_t>(K));
    centers.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1)));
    Vec dist2(n, kInf);
    for (int c = 1; c < K; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = kernels::sqdist(points.row(i), points.row(centers.back()));
            if (d < dist2[i]) dist2[i] = d;
            total += dist2[i];
        }
        std::size_t pick;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        }
        centers.push_back(pick);
    }
    return centers;
}

GmmModel initialize_gmm(const Matrix& points, int K, CovarianceType cov_type, std::uint64_t seed,
                        double floor) {
    const std::size_t n = points.rows();
    const std::size_t k = points.cols();
    Rng rng(seed);
    const auto centers = kmeanspp_centers(points, K, rng);

    std::vector<int> assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = kInf;
        for (int c = 0; c < K; ++c) {
            const double d = kernels::sqdist(points.row(i), points.row(centers[static_cast<std::size_t>(c)]));
            if (d < best) {
                best = d;
                assign[i] = c;
            }
        }
    }

    GmmModel model;
    model.num_components = K;
    model.cov_type = cov_type;
    model.seed = seed;
    model.weights.assign(static_cast<std::size_t>(K), 0.0);
    model.means = Matrix(static_cast<std::size_t>(K), k);
    const std::size_t cov_rows = cov_type == CovarianceType::diagonal ? static_cast<std::size_t>(K)
                                 : cov_type == CovarianceType::tied   ? k
                                                                      : static_cast<std::size_t>(K) * k;
    model.covariances = Matrix(cov_rows, cov_type == CovarianceType::diagonal ? k : k, 0.0);

    Vec counts(static_cast<std::size_t>(K), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(assign[i]);
        counts[c] += 1.0;
        for (std::size_t j = 0; j < k; ++j) model.means(c, j) += points(i, j);
    }
    for (int c = 0; c < K; ++c) {
        const auto cs = static_cast<std::size_t>(c);
        if (counts[cs] > 0.0) {
            for (std::size_t j = 0; j < k; ++j) model.means(cs, j) /= counts[cs];
        } else {
            for (std::size_t j = 0; j < k; ++j) model.means(cs, j) = points(centers[cs], j);
        }
        model.weights[cs] = std::max(counts[cs], 1.0) / static_cast<double>(n);
    }
    double wsum = 0.0;
    for (double w : model.weights) wsum += w;
    for (double& w : model.weights) w /= wsum;

    // within-cluster second moments
    if (cov_type == CovarianceType::diagonal) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            for (std::size_t j = 0; j < k; ++j) {
                const double d = points(i, j) - model.means(c, j);
                model.covariances(c, j) += d * d;
            }
        }
        for (int c = 0; c < K; ++c) {
            const auto cs = static_cast<std::size_t>(c);
            const double denom = std::max(counts[cs], 1.0);
            for (std::size_t j = 0; j < k; ++j) model.covariances(cs, j) /= denom;
        }
    } else {
        const bool tied = cov_type == CovarianceType::tied;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            const std::size_t base = tied ? 0 : c * k;
            for (std::size_t r = 0; r < k; ++r) {
                const double dr = points(i, r) - model.means(c, r);
                for (std::size_t s = 0; s < k; ++s)
                    model.covariances(base + r, s) += dr * (points(i, s) - model.means(c, s));
            }
        }
        if (tied) {
            for (double& v : model.covariances.data()) v /= static_cast<double>(n);
        } else {
            for (int c = 0; c < K; ++c) {
                const auto cs = static_cast<std::size_t>(c);
                const double denom = std::max(counts[cs], 1.0);
                for (std::size_t r = 0; r < k; ++r)
                    for (std::size_t s = 0; s < k; ++s) model.covariances(cs * k + r, s) /= denom;
            }
        }
    }
    apply_covariance_floor(model, floor);
    return model;
}

double mean_log_likelihood(const GmmModel& model, const Matrix& points) {
    GmmEvaluator eval(model);
    Vec log_terms, work;
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        total += eval.component_log_terms(points.row(i), log_terms, work);
    return total / static_cast<double>(points.rows());
}

} // namespace

std::string_view covariance_type_name(CovarianceType type) {
    switch (type) {
    case CovarianceType::diagonal: return "diagonal";
    case CovarianceType::full: return "full";
    case CovarianceType::tied: return "tied";
    }
    return "?";
}

CovarianceType covariance_type_from_name(std::string_view name) {
    if (name == "diagonal") return CovarianceType::diagonal;
    if (name == "full") return CovarianceType::full;
    if (name == "tied") return CovarianceType::tied;
    throw std::invalid_argument("unknown covariance type: " + std::string(name));
}

int gmm_param_count(int num_components, int dim, CovarianceType type) {
    const int K = num_components, k = dim;
    int cov_params = 0;
    switch (type) {
    case CovarianceType::diagonal: cov_params = K * k; break;
    case CovarianceType::full: cov_params = K * k * (k + 1) / 2; break;
    case CovarianceType::tied: cov_params = k * (k + 1) / 2; break;
    }
    return (K - 1) + K * k + cov_params;
}

GmmModel gmm_fit_em(const Matrix& points, int num_components, CovarianceType cov_type,
                    std::uint64_t seed, int max_iters, double tol) {
    const std::size_t n = points.rows();
    const std::size_t k = points.cols();
    require(num_components >= 1, "need at least one component");
    require(n >= static_cast<std::size_t>(num_components), "fewer points than components");
    require(k >= 1, "empty dimension");
    require(max_iters >= 0, "negative iteration cap");

    const double floor = covariance_floor(points);
    GmmModel model = initialize_gmm(points, num_components, cov_type, seed, floor);
    model.final_log_likelihood = mean_log_likelihood(model, points);
    model.ll_history.push_back(model.final_log_likelihood);
    model.iterations = 0;
    if (tol == kInf) return model; // no gain can reach the bar; keep the seeding

    const int K = num_components;
    Matrix resp(n, static_cast<std::size_t>(K));
    Vec log_terms, work;
    double ll_prev = model.final_log_likelihood;

    for (int iter = 1; iter <= max_iters; ++iter) {
        // E step
        GmmEvaluator eval(model);
        double total_ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double lp = eval.component_log_terms(points.row(i), log_terms, work);
            total_ll += lp;
            for (int j = 0; j < K; ++j)
                resp(i, static_cast<std::size_t>(j)) =
                    std::exp(log_terms[static_cast<std::size_t>(j)] - lp);
        }
        (void)total_ll; // LL of the pre-update model; tracked via ll_prev

        // M step
        Vec weights(static_cast<std::size_t>(K), 0.0);
        Matrix means(static_cast<std::size_t>(K), k, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < K; ++j) {
                const double r = resp(i, static_cast<std::size_t>(j));
                weights[static_cast<std::size_t>(j)] += r;
                kernels::axpy(r, points.row(i), means.row(static_cast<std::size_t>(j)));
            }
        for (int j = 0; j < K; ++j) {
            const auto js = static_cast<std::size_t>(j);
            if (weights[js] > 1e-12) {
                kernels::scal(1.0 / weights[js], means.row(js));
            } else {
                // vanished component: keep its previous location
                for (std::size_t c = 0; c < k; ++c) means(js, c) = model.means(js, c);
            }
        }

        Matrix covs(model.covariances.rows(), model.covariances.cols(), 0.0);
        if (cov_type == CovarianceType::diagonal) {
            for (std::size_t i = 0; i < n; ++i)
                for (int j = 0; j < K; ++j) {
                    const auto js = static_cast<std::size_t>(j);
                    const double r = resp(i, js);
                    for (std::size_t c = 0; c < k; ++c) {
                        const double d = points(i, c) - means(js, c);
                        covs(js, c) += r * d * d;
                    }
                }
            for (int j = 0; j < K; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (weights[js] > 1e-12)
                    for (std::size_t c = 0; c < k; ++c) covs(js, c) /= weights[js];
                else
                    for (std::size_t c = 0; c < k; ++c) covs(js, c) = model.covariances(js, c);
            }
        } else {
            const bool tied = cov_type == CovarianceType::tied;
            for (std::size_t i = 0; i < n; ++i)
                for (int j = 0; j < K; ++j) {
                    const auto js = static_cast<std::size_t>(j);
                    const double r = resp(i, js);
                    const std::size_t base = tied ? 0 : js * k;
                    for (std::size_t rrow = 0; rrow < k; ++rrow) {
                        const double dr = r * (points(i, rrow) - means(js, rrow));
                        for (std::size_t s = 0; s < k; ++s)
                            covs(base + rrow, s) += dr * (points(i, s) - means(js, s));
                    }
                }
            if (tied) {
                for (double& v : covs.data()) v /= static_cast<double>(n);
            } else {
                for (int j = 0; j < K; ++j) {
                    const auto js = static_cast<std::size_t>(j);
                    if (weights[js] > 1e-12) {
                        for (std::size_t rrow = 0; rrow < k; ++rrow)
                            for (std::size_t s = 0; s < k; ++s) covs(js * k + rrow, s) /= weights[js];
                    } else {
                        for (std::size_t rrow = 0; rrow < k; ++rrow)
                            for (std::size_t s = 0; s < k; ++s)
                                covs(js * k + rrow, s) = model.covariances(js * k + rrow, s);
                    }
                }
            }
        }

        for (double& w : weights) w /= static_cast<double>(n);
        model.weights = std::move(weights);
        model.means = std::move(means);
        model.covariances = std::move(covs);
        apply_covariance_floor(model, floor);
        model.iterations = iter;

        const double ll = mean_log_likelihood(model, points);
        model.final_log_likelihood = ll;
        model.ll_history.push_back(ll);
        if (!std::isfinite(ll)) throw NumericError("GMM log-likelihood diverged");
        if (ll - ll_prev < tol) break;
        ll_prev = ll;
    }
    return model;
}

GmmModel gmm_select(const Matrix& points, std::span<const int> k_grid,
                    std::span<const CovarianceType> cov_types, std::uint64_t seed, int max_iters,
                    double tol) {
    require(!k_grid.empty() && !cov_types.empty(), "empty selection grid");

    std::vector<int> ks(k_grid.begin(), k_grid.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    // canonical tie-break order: diagonal < tied < full
    std::vector<CovarianceType> types;
    for (CovarianceType t :
         {CovarianceType::diagonal, CovarianceType::tied, CovarianceType::full})
        if (std::find(cov_types.begin(), cov_types.end(), t) != cov_types.end())
            types.push_back(t);

    GmmModel best;
    double best_bic = kInf;
    std::uint64_t fit_index = 0;
    for (int K : ks) {
        for (CovarianceType type : types) {
            GmmModel candidate =
                gmm_fit_em(points, K, type, Rng::derive(seed, fit_index), max_iters, tol);
            ++fit_index;
            const double bic = gmm_bic(candidate, points);
            if (bic < best_bic) {
                best_bic = bic;
                best = std::move(candidate);
            }
        }
    }
    return best;
}

double gmm_log_likelihood(const GmmModel& model, std::span<const double> x) {
    require(static_cast<int>(x.size()) == model.dim(), "GMM query dimension mismatch");
    GmmEvaluator eval(model);
    Vec log_terms, work;
    return eval.component_log_terms(x, log_terms, work);
}

double gmm_bic(const GmmModel& model, const Matrix& points) {
    const double total_ll =
        mean_log_likelihood(model, points) * static_cast<double>(points.rows());
    const int params = gmm_param_count(model.num_components, model.dim(), model.cov_type);
    return -2.0 * total_ll + params * std::log(static_cast<double>(points.rows()));
}

} // namespace diffpath
