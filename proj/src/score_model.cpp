#include "diffpath/score_model.hpp"

#include <cmath>

#include "diffpath/kernels.hpp"
#include "diffpath/rng.hpp"

namespace diffpath {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void GaussianMixtureSpec::validate() const {
    require(!weights.empty(), "mixture needs at least one component");
    require(means.rows() == weights.size() && variances.rows() == weights.size(),
            "mixture component count mismatch");
    require(means.cols() == variances.cols() && means.cols() >= 1, "mixture dimension mismatch");
    double total = 0.0;
    for (double w : weights) {
        require(w >= 0.0, "mixture weights must be nonnegative");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
    for (double v : variances.data()) require(v > 0.0, "mixture variances must be positive");
}

GaussianMixtureSpec GaussianMixtureSpec::single(Vec mean, double variance) {
    GaussianMixtureSpec spec;
    const std::size_t d = mean.size();
    spec.weights = {1.0};
    spec.means = Matrix(1, d);
    spec.variances = Matrix(1, d, variance);
    for (std::size_t i = 0; i < d; ++i) spec.means(0, i) = mean[i];
    spec.validate();
    return spec;
}

GaussianMixtureSpec GaussianMixtureSpec::symmetric_pair(Vec mean, double variance) {
    GaussianMixtureSpec spec;
    const std::size_t d = mean.size();
    spec.weights = {0.5, 0.5};
    spec.means = Matrix(2, d);
    spec.variances = Matrix(2, d, variance);
    for (std::size_t i = 0; i < d; ++i) {
        spec.means(0, i) = mean[i];
        spec.means(1, i) = -mean[i];
    }
    spec.validate();
    return spec;
}

namespace {

// Per-component log N(x; sqrt(abar)*mu_k, abar*var_k + sigma^2).
void diffused_component_logs(const GaussianMixtureSpec& spec, double abar, double sigma2,
                             std::span<const double> x, std::span<double> log_terms) {
    const double scale = std::sqrt(abar);
    const int K = spec.components();
    const int d = spec.dim();
    for (int k = 0; k < K; ++k) {
        const double* mu = spec.means.row(static_cast<std::size_t>(k)).data();
        const double* var = spec.variances.row(static_cast<std::size_t>(k)).data();
        double quad = 0.0, logdet = 0.0;
        for (int i = 0; i < d; ++i) {
            const double v = abar * var[i] + sigma2;
            const double diff = x[static_cast<std::size_t>(i)] - scale * mu[i];
            quad += diff * diff / v;
            logdet += std::log(v);
        }
        log_terms[static_cast<std::size_t>(k)] =
            std::log(spec.weights[static_cast<std::size_t>(k)]) - 0.5 * (quad + logdet + d * kLog2Pi);
    }
}

} // namespace

double gmm_marginal_log_density(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                                std::span<const double> x, int t) {
    require(static_cast<int>(x.size()) == spec.dim(), "dimension mismatch");
    const double abar = t == 0 ? 1.0 : schedule.alpha_bar(t);
    const double sigma2 = t == 0 ? 0.0 : 1.0 - abar;
    Vec log_terms(static_cast<std::size_t>(spec.components()));
    diffused_component_logs(spec, abar, sigma2, x, log_terms);
    const double m = kernels::max(log_terms);
    double acc = 0.0;
    for (double lt : log_terms) acc += std::exp(lt - m);
    return m + std::log(acc);
}

AnalyticGmmScore::AnalyticGmmScore(GaussianMixtureSpec spec,
                                   std::shared_ptr<const NoiseSchedule> schedule)
    : spec_(std::move(spec)), schedule_(std::move(schedule)) {
    spec_.validate();
    require(schedule_ != nullptr, "schedule required");
}

void AnalyticGmmScore::eval_impl(std::span<const double> x, int t, std::span<double> out) const {
    const double abar = schedule_->alpha_bar(t);
    const double sigma = schedule_->sigma(t);
    const double sigma2 = 1.0 - abar;
    const double scale = std::sqrt(abar);
    const int K = spec_.components();
    const int d = spec_.dim();

    Vec log_terms(static_cast<std::size_t>(K));
    diffused_component_logs(spec_, abar, sigma2, x, log_terms);
    const double m = kernels::max(log_terms);
    double norm = 0.0;
    for (double lt : log_terms) norm += std::exp(lt - m);

    // eps = -sigma * grad log p = sigma * sum_k r_k (x - m_k) / v_k
    for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = 0.0;
    for (int k = 0; k < K; ++k) {
        const double r = std::exp(log_terms[static_cast<std::size_t>(k)] - m) / norm;
        const double* mu = spec_.means.row(static_cast<std::size_t>(k)).data();
        const double* var = spec_.variances.row(static_cast<std::size_t>(k)).data();
        for (int i = 0; i < d; ++i) {
            const double v = abar * var[i] + sigma2;
            out[static_cast<std::size_t>(i)] +=
                r * (x[static_cast<std::size_t>(i)] - scale * mu[i]) / v;
        }
    }
    kernels::scal(sigma, out);
}

MlpScoreNet::MlpScoreNet(int data_dim, std::vector<int> hidden_widths, TimeEmbedding embedding,
                         int embedding_width, std::shared_ptr<const NoiseSchedule> schedule,
                         std::uint64_t init_seed)
    : data_dim_(data_dim), embedding_(embedding), embedding_width_(embedding_width),
      schedule_(std::move(schedule)) {
    require(data_dim_ >= 1, "data dimension must be positive");
    require(schedule_ != nullptr, "schedule required");
    if (embedding_ == TimeEmbedding::scalar) {
        require(embedding_width_ == 1, "scalar embedding has width 1");
    } else {
        require(embedding_width_ >= 2 && embedding_width_ % 2 == 0,
                "sinusoidal embedding needs an even width >= 2");
    }

    Rng rng(init_seed);
    int fan_in = input_width();
    for (std::size_t l = 0; l <= hidden_widths.size(); ++l) {
        const int fan_out =
            l < hidden_widths.size() ? hidden_widths[l] : data_dim_;
        require(fan_out >= 1, "layer width must be positive");
        Layer layer;
        layer.weight = Matrix(static_cast<std::size_t>(fan_out), static_cast<std::size_t>(fan_in));
        layer.bias = Vec(static_cast<std::size_t>(fan_out), 0.0);
        const double std_dev = std::sqrt(1.0 / fan_in);
        for (double& w : layer.weight.data()) w = std_dev * rng.normal();
        layers_.push_back(std::move(layer));
        fan_in = fan_out;
    }
}

MlpScoreNet::MlpScoreNet(int data_dim, std::vector<Layer> layers, TimeEmbedding embedding,
                         int embedding_width, std::shared_ptr<const NoiseSchedule> schedule)
    : data_dim_(data_dim), embedding_(embedding), embedding_width_(embedding_width),
      layers_(std::move(layers)), schedule_(std::move(schedule)) {
    require(!layers_.empty(), "net needs at least one layer");
    require(schedule_ != nullptr, "schedule required");
    require(static_cast<int>(layers_.front().weight.cols()) == input_width(),
            "first layer width must match input width");
    require(static_cast<int>(layers_.back().weight.rows()) == data_dim_,
            "output width must match data dimension");
    check_finite();
}

void MlpScoreNet::check_finite() const {
    for (const Layer& layer : layers_) {
        if (!layer.weight.all_finite()) throw NumericError("non-finite network weight");
        for (double b : layer.bias)
            if (!std::isfinite(b)) throw NumericError("non-finite network bias");
    }
}

void MlpScoreNet::embed_time(int t, std::span<double> out) const {
    const double u = static_cast<double>(t) / schedule_->num_steps();
    if (embedding_ == TimeEmbedding::scalar) {
        out[0] = u;
        return;
    }
    const int pairs = embedding_width_ / 2;
    double freq = 6.283185307179586476925286766559;
    for (int j = 0; j < pairs; ++j) {
        out[static_cast<std::size_t>(2 * j)] = std::sin(freq * u);
        out[static_cast<std::size_t>(2 * j + 1)] = std::cos(freq * u);
        freq *= 2.0;
    }
}

void MlpScoreNet::assemble_input(std::span<const double> x, int t, std::span<double> out) const {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    embed_time(t, out.subspan(x.size()));
}

void MlpScoreNet::forward_cached(std::span<const double> input, std::vector<Vec>& activations) const {
    const std::size_t L = layers_.size();
    activations.resize(L + 1);
    activations[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < L; ++l) {
        const Layer& layer = layers_[l];
        const Vec& in = activations[l];
        Vec& out = activations[l + 1];
        out.resize(layer.bias.size());
        for (std::size_t j = 0; j < layer.bias.size(); ++j) {
            const double z = kernels::dot(layer.weight.row(j), in) + layer.bias[j];
            out[j] = (l + 1 < L) ? std::tanh(z) : z;
        }
    }
}

void MlpScoreNet::eval_impl(std::span<const double> x, int t, std::span<double> out) const {
    thread_local std::vector<Vec> activations;
    thread_local Vec input;
    input.resize(static_cast<std::size_t>(input_width()));
    assemble_input(x, t, input);
    forward_cached(input, activations);
    const Vec& y = activations.back();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i];
}

namespace {

class NegationConjugateScore final : public ScoreFunction {
public:
    explicit NegationConjugateScore(std::shared_ptr<const ScoreFunction> inner)
        : inner_(std::move(inner)) {
        require(inner_ != nullptr, "inner score required");
    }

    int dim() const noexcept override { return inner_->dim(); }
    std::string_view kind() const noexcept override { return "negation_conjugate"; }

protected:
    void eval_impl(std::span<const double> x, int t, std::span<double> out) const override {
        thread_local Vec flipped;
        flipped.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) flipped[i] = -x[i];
        inner_->eval(flipped, t, out);
        for (double& v : out) v = -v;
    }

private:
    std::shared_ptr<const ScoreFunction> inner_;
};

} // namespace

std::shared_ptr<ScoreFunction> negation_conjugate(std::shared_ptr<const ScoreFunction> inner) {
    return std::make_shared<NegationConjugateScore>(std::move(inner));
}

} // namespace diffpath
