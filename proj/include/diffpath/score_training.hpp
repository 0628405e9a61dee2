#pragma once

#include <cstdint>
#include <vector>

#include "diffpath/common.hpp"
#include "diffpath/score_model.hpp"

namespace diffpath {

struct TrainConfig {
    int epochs = 20;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double beta1 = 0.9;  // first-moment smoothing
    double beta2 = 0.999; // second-moment smoothing
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    int report_interval = 100; // steps per loss-curve point

    void validate() const {
        require(epochs >= 0, "epochs must be >= 0");
        require(batch_size >= 1 && learning_rate > 0.0 && report_interval >= 1,
                "train config values must be positive");
        require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
                "moment constants must be in (0,1)");
    }
};

struct LossPoint {
    long step;   // 1-based index of the last step in the window
    double loss; // mean batch loss over the report window
};

struct TrainResult {
    std::vector<LossPoint> curve;
    double final_loss = 0.0; // last smoothed value
    long steps = 0;
};

// Denoising score-matching loss of one batch: t uniform over {1..T},
// eps ~ N(0, I), x_t from the forward marginal, mean over rows of
// ||score(x_t, t) - eps||^2. Reproducible given the seed.
double dsm_loss(const ScoreFunction& score, const NoiseSchedule& schedule, const Matrix& batch,
                std::uint64_t seed);

// Per-layer gradients of the mean batch DSM loss; layout mirrors the net's
// layers. Exposed for the finite-difference gradient check.
struct LayerGrad {
    Matrix weight;
    Vec bias;
};
double dsm_loss_and_grad(const MlpScoreNet& net, const NoiseSchedule& schedule,
                         const Matrix& batch, std::uint64_t seed, std::vector<LayerGrad>& grads);

// Adam over shuffled minibatches. Throws NumericError naming the epoch and
// step if the loss goes non-finite.
TrainResult train(MlpScoreNet& net, const NoiseSchedule& schedule, const Matrix& dataset,
                  const TrainConfig& cfg);

// Mean relative eps error sqrt(sum ||net - ref||^2 / sum ||ref||^2) over
// probe points drawn from the reference mixture's forward marginals at
// num_times timesteps.
double relative_eps_error(const MlpScoreNet& net, const AnalyticGmmScore& reference,
                          const NoiseSchedule& schedule, int num_points, int num_times,
                          std::uint64_t seed);

} // namespace diffpath
