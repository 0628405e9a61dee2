#include "diffpath/score_training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "diffpath/kernels.hpp"
#include "diffpath/parallel.hpp"
#include "diffpath/rng.hpp"

namespace diffpath {

namespace {

struct DsmDraw {
    Vec x_t;
    Vec target; // the eps that produced x_t
    int t;
};

// One (t, eps, x_t) draw per batch row; consuming the rng row by row keeps
// the loss bitwise reproducible for a given seed.
std::vector<DsmDraw> make_draws(const NoiseSchedule& schedule, const Matrix& batch,
                                std::uint64_t seed) {
    const std::size_t n = batch.rows();
    const std::size_t d = batch.cols();
    Rng rng(seed);
    std::vector<DsmDraw> draws(n);
    for (std::size_t i = 0; i < n; ++i) {
        DsmDraw& draw = draws[i];
        draw.t = static_cast<int>(rng.uniform_int(1, schedule.num_steps()));
        draw.target.resize(d);
        rng.fill_normal(draw.target);
        draw.x_t = forward_marginal_sample(schedule, batch.row(i), draw.t, draw.target);
    }
    return draws;
}

void zero_like(const MlpScoreNet& net, std::vector<LayerGrad>& grads) {
    grads.resize(net.layers().size());
    for (std::size_t l = 0; l < grads.size(); ++l) {
        const auto& layer = net.layers()[l];
        grads[l].weight = Matrix(layer.weight.rows(), layer.weight.cols(), 0.0);
        grads[l].bias.assign(layer.bias.size(), 0.0);
    }
}

// Accumulates the gradient of ||net(input) - target||^2 for one sample.
double backprop_sample(const MlpScoreNet& net, std::span<const double> input,
                       std::span<const double> target, std::vector<LayerGrad>& grads,
                       std::vector<Vec>& activations, std::vector<Vec>& deltas) {
    net.forward_cached(input, activations);
    const std::size_t L = net.layers().size();
    deltas.resize(L);

    const Vec& out = activations[L];
    double loss = 0.0;
    deltas[L - 1].resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double diff = out[i] - target[i];
        loss += diff * diff;
        deltas[L - 1][i] = 2.0 * diff; // output layer is linear
    }

    for (std::size_t l = L; l-- > 0;) {
        const auto& layer = net.layers()[l];
        const Vec& in = activations[l];
        Vec& delta = deltas[l];
        LayerGrad& grad = grads[l];
        for (std::size_t j = 0; j < layer.bias.size(); ++j) {
            const double dj = delta[j];
            grad.bias[j] += dj;
            kernels::axpy(dj, in, grad.weight.row(j));
        }
        if (l == 0) break;
        Vec& prev = deltas[l - 1];
        prev.assign(in.size(), 0.0);
        for (std::size_t j = 0; j < layer.bias.size(); ++j)
            kernels::axpy(delta[j], layer.weight.row(j), prev);
        // tanh'(z) = 1 - a^2 on the hidden activation
        for (std::size_t i = 0; i < prev.size(); ++i) prev[i] *= 1.0 - in[i] * in[i];
    }
    return loss;
}

} // namespace

double dsm_loss(const ScoreFunction& score, const NoiseSchedule& schedule, const Matrix& batch,
                std::uint64_t seed) {
    require(batch.rows() >= 1, "empty batch");
    require(static_cast<int>(batch.cols()) == score.dim(), "batch dimension mismatch");
    const auto draws = make_draws(schedule, batch, seed);

    Vec out(batch.cols());
    double total = 0.0;
    for (const DsmDraw& draw : draws) {
        score.eval(draw.x_t, draw.t, std::span<double>(out));
        double loss = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double diff = out[i] - draw.target[i];
            loss += diff * diff;
        }
        total += loss;
    }
    return total / static_cast<double>(batch.rows());
}

double dsm_loss_and_grad(const MlpScoreNet& net, const NoiseSchedule& schedule,
                         const Matrix& batch, std::uint64_t seed, std::vector<LayerGrad>& grads) {
    require(batch.rows() >= 1, "empty batch");
    require(static_cast<int>(batch.cols()) == net.dim(), "batch dimension mismatch");
    const auto draws = make_draws(schedule, batch, seed);
    const std::size_t n = draws.size();

    // fixed number of accumulation slots so the reduction order does not
    // depend on the worker count
    const std::size_t slots = std::min<std::size_t>(8, n);
    std::vector<std::vector<LayerGrad>> partial(slots);
    Vec partial_loss(slots, 0.0);
    for (auto& g : partial) zero_like(net, g);

    const std::size_t per_slot = (n + slots - 1) / slots;
    parallel_for(slots, [&](std::size_t sb, std::size_t se) {
        Vec input(static_cast<std::size_t>(net.input_width()));
        std::vector<Vec> activations, deltas;
        for (std::size_t s = sb; s < se; ++s) {
            const std::size_t lo = s * per_slot;
            const std::size_t hi = std::min(n, lo + per_slot);
            for (std::size_t i = lo; i < hi; ++i) {
                net.assemble_input(draws[i].x_t, draws[i].t, input);
                partial_loss[s] +=
                    backprop_sample(net, input, draws[i].target, partial[s], activations, deltas);
            }
        }
    });

    zero_like(net, grads);
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < slots; ++s) {
        total += partial_loss[s];
        for (std::size_t l = 0; l < grads.size(); ++l) {
            kernels::axpy(inv_n, partial[s][l].weight.data(),
                          std::span<double>(grads[l].weight.data()));
            kernels::axpy(inv_n, partial[s][l].bias, grads[l].bias);
        }
    }
    return total * inv_n;
}

TrainResult train(MlpScoreNet& net, const NoiseSchedule& schedule, const Matrix& dataset,
                  const TrainConfig& cfg) {
    cfg.validate();
    require(dataset.rows() >= 1, "empty dataset");
    require(static_cast<int>(dataset.cols()) == net.dim(), "dataset dimension mismatch");

    const std::size_t n = dataset.rows();
    const std::size_t d = dataset.cols();
    const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);

    std::vector<LayerGrad> grads, m_state, v_state;
    zero_like(net, m_state);
    zero_like(net, v_state);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(Rng::derive(cfg.seed, 0x5u));

    TrainResult result;
    Matrix batch(batch_size, d);
    double window_sum = 0.0;
    int window_count = 0;
    long step = 0;
    double beta1_pow = 1.0, beta2_pow = 1.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        for (std::size_t start = 0; start + batch_size <= n; start += batch_size) {
            for (std::size_t b = 0; b < batch_size; ++b) {
                const auto src = dataset.row(order[start + b]);
                std::copy(src.begin(), src.end(), batch.row(b).begin());
            }
            ++step;
            const double loss =
                dsm_loss_and_grad(net, schedule, batch, Rng::derive(cfg.seed, static_cast<std::uint64_t>(step)), grads);
            if (!std::isfinite(loss))
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   ", step " + std::to_string(step));

            beta1_pow *= cfg.beta1;
            beta2_pow *= cfg.beta2;
            const double m_corr = 1.0 / (1.0 - beta1_pow);
            const double v_corr = 1.0 / (1.0 - beta2_pow);
            for (std::size_t l = 0; l < net.layers().size(); ++l) {
                auto update = [&](double& param, double g, double& m, double& v) {
                    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
                    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
                    param -= cfg.learning_rate * (m * m_corr) /
                             (std::sqrt(v * v_corr) + cfg.adam_eps);
                };
                auto& layer = net.layers()[l];
                for (std::size_t i = 0; i < layer.weight.data().size(); ++i)
                    update(layer.weight.data()[i], grads[l].weight.data()[i],
                           m_state[l].weight.data()[i], v_state[l].weight.data()[i]);
                for (std::size_t i = 0; i < layer.bias.size(); ++i)
                    update(layer.bias[i], grads[l].bias[i], m_state[l].bias[i],
                           v_state[l].bias[i]);
            }

            window_sum += loss;
            ++window_count;
            if (window_count == cfg.report_interval) {
                result.curve.push_back({step, window_sum / window_count});
                window_sum = 0.0;
                window_count = 0;
            }
        }
    }
    if (window_count > 0) result.curve.push_back({step, window_sum / window_count});
    result.steps = step;
    result.final_loss = result.curve.empty() ? 0.0 : result.curve.back().loss;
    return result;
}

double relative_eps_error(const MlpScoreNet& net, const AnalyticGmmScore& reference,
                          const NoiseSchedule& schedule, int num_points, int num_times,
                          std::uint64_t seed) {
    require(num_points >= 1 && num_times >= 1, "need probes");
    const auto d = static_cast<std::size_t>(net.dim());
    const GaussianMixtureSpec& spec = reference.spec();
    Rng rng(seed);

    // probe x0s drawn from the reference mixture
    Matrix probes(static_cast<std::size_t>(num_points), d);
    for (std::size_t i = 0; i < probes.rows(); ++i) {
        double u = rng.uniform();
        std::size_t comp = 0;
        for (std::size_t k = 0; k < spec.weights.size(); ++k) {
            if (u < spec.weights[k]) {
                comp = k;
                break;
            }
            u -= spec.weights[k];
        }
        for (std::size_t j = 0; j < d; ++j)
            probes(i, j) = spec.means(comp, j) + std::sqrt(spec.variances(comp, j)) * rng.normal();
    }

    const int T = schedule.num_steps();
    double num = 0.0, den = 0.0;
    Vec noise(d), got(d), want(d);
    for (int ti = 0; ti < num_times; ++ti) {
        const int t = std::max(1, (ti + 1) * T / num_times);
        for (std::size_t i = 0; i < probes.rows(); ++i) {
            rng.fill_normal(noise);
            const Vec x_t = forward_marginal_sample(schedule, probes.row(i), t, noise);
            net.eval(x_t, t, std::span<double>(got));
            reference.eval(x_t, t, std::span<double>(want));
            num += kernels::sqdist(got, want);
            den += kernels::sumsq(want);
        }
    }
    return std::sqrt(num / den);
}

} // namespace diffpath
