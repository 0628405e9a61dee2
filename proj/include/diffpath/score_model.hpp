#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "diffpath/common.hpp"
#include "diffpath/schedule.hpp"

namespace diffpath {

// Epsilon-parameterized score: eps(x, t) = -sigma_t * grad_x log p_t(x).
// Implementations are immutable once built and safe for concurrent
// evaluation. Evaluations are counted so tests can assert how many network
// calls a pipeline stage spends.
class ScoreFunction {
public:
    virtual ~ScoreFunction() = default;

    virtual int dim() const noexcept = 0;
    virtual std::string_view kind() const noexcept = 0;

    void eval(std::span<const double> x, int t, std::span<double> out) const {
        require(static_cast<int>(x.size()) == dim(), "score input dimension mismatch");
        require(x.size() == out.size(), "score output dimension mismatch");
        eval_count_.fetch_add(1, std::memory_order_relaxed);
        eval_impl(x, t, out);
    }

    Vec eval(std::span<const double> x, int t) const {
        Vec out(x.size());
        eval(x, t, std::span<double>(out));
        return out;
    }

    std::uint64_t eval_count() const noexcept { return eval_count_.load(std::memory_order_relaxed); }
    void reset_eval_count() const noexcept { eval_count_.store(0, std::memory_order_relaxed); }

protected:
    virtual void eval_impl(std::span<const double> x, int t, std::span<double> out) const = 0;

private:
    mutable std::atomic<std::uint64_t> eval_count_{0};
};

// Mixture of diagonal-covariance Gaussians; the base distribution whose
// diffused marginals have a closed form.
struct GaussianMixtureSpec {
    Vec weights;      // K, sums to 1
    Matrix means;     // K x d
    Matrix variances; // K x d, diagonal covariance entries

    int components() const noexcept { return static_cast<int>(weights.size()); }
    int dim() const noexcept { return static_cast<int>(means.cols()); }
    void validate() const;

    static GaussianMixtureSpec single(Vec mean, double variance = 1.0);
    static GaussianMixtureSpec symmetric_pair(Vec mean, double variance = 1.0);
};

// Log-density of the mixture diffused to timestep t (component k becomes
// N(sqrt(abar)*mu_k, abar*Sigma_k + sigma^2 I)); t = 0 gives the base
// mixture itself.
double gmm_marginal_log_density(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                                std::span<const double> x, int t);

// Exact eps(x, t) for the diffused mixture, responsibilities computed in log
// space.
class AnalyticGmmScore final : public ScoreFunction {
public:
    AnalyticGmmScore(GaussianMixtureSpec spec, std::shared_ptr<const NoiseSchedule> schedule);

    int dim() const noexcept override { return spec_.dim(); }
    std::string_view kind() const noexcept override { return "analytic_gmm"; }
    const GaussianMixtureSpec& spec() const noexcept { return spec_; }

protected:
    void eval_impl(std::span<const double> x, int t, std::span<double> out) const override;

private:
    GaussianMixtureSpec spec_;
    std::shared_ptr<const NoiseSchedule> schedule_;
};

enum class TimeEmbedding { scalar, sinusoidal };

// Small fully connected eps predictor: input [x, embed(t)], tanh hidden
// layers, linear output of width d.
class MlpScoreNet final : public ScoreFunction {
public:
    struct Layer {
        Matrix weight; // out x in
        Vec bias;      // out
    };

    MlpScoreNet(int data_dim, std::vector<int> hidden_widths, TimeEmbedding embedding,
                int embedding_width, std::shared_ptr<const NoiseSchedule> schedule,
                std::uint64_t init_seed);
    // Assembles a net from explicit layers (deserialization, tests).
    MlpScoreNet(int data_dim, std::vector<Layer> layers, TimeEmbedding embedding,
                int embedding_width, std::shared_ptr<const NoiseSchedule> schedule);

    int dim() const noexcept override { return data_dim_; }
    std::string_view kind() const noexcept override { return "mlp"; }

    int input_width() const noexcept { return data_dim_ + embedding_width_; }
    TimeEmbedding embedding() const noexcept { return embedding_; }
    int embedding_width() const noexcept { return embedding_width_; }
    const NoiseSchedule& schedule() const noexcept { return *schedule_; }
    std::shared_ptr<const NoiseSchedule> schedule_ptr() const noexcept { return schedule_; }

    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    void embed_time(int t, std::span<double> out) const; // size embedding_width()
    void assemble_input(std::span<const double> x, int t, std::span<double> out) const;

    // Forward pass keeping post-activation values per layer; activations[0]
    // is the assembled input, activations.back() the eps prediction.
    void forward_cached(std::span<const double> input, std::vector<Vec>& activations) const;

    void check_finite() const;

protected:
    void eval_impl(std::span<const double> x, int t, std::span<double> out) const override;

private:
    int data_dim_;
    TimeEmbedding embedding_;
    int embedding_width_;
    std::vector<Layer> layers_;
    std::shared_ptr<const NoiseSchedule> schedule_;
};

// x -> -score(-x, t); symmetry probe from the sign-flip analysis.
std::shared_ptr<ScoreFunction> negation_conjugate(std::shared_ptr<const ScoreFunction> inner);

} // namespace diffpath
