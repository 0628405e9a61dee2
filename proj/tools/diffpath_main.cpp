// diffpath command-line front end: toy data generation, score training,
// statistic extraction, density fitting, scoring, evaluation, the full
// detection pipeline, and the numerical verification battery.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "diffpath/config.hpp"
#include "diffpath/dataset.hpp"
#include "diffpath/evaluation.hpp"
#include "diffpath/kernels.hpp"
#include "diffpath/parallel.hpp"
#include "diffpath/pipeline.hpp"
#include "diffpath/rng.hpp"
#include "diffpath/score_training.hpp"
#include "diffpath/theory_checks.hpp"

namespace {

using namespace diffpath;

struct CommonOverrides {
    std::string config_path;
    std::int64_t seed = -1;
    int nfe = 0;
    std::string dump_trajectories;

    PipelineConfig load() const {
        if (config_path.empty()) throw ConfigError("--config is required");
        PipelineConfig cfg = PipelineConfig::load(config_path);
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (nfe > 0) cfg.nfe = nfe;
        if (!dump_trajectories.empty()) cfg.dump_trajectories = dump_trajectories;
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOverrides& common) {
    cmd->add_option("--config", common.config_path, "pipeline config file")->required();
    cmd->add_option("--seed", common.seed, "override the config seed");
    cmd->add_option("--nfe", common.nfe, "override grid.nfe");
    cmd->add_option("--dump-trajectories", common.dump_trajectories,
                    "dump integrated trajectories to this tensor file");
}

GaussianMixtureSpec mixture_from_flags(const std::vector<double>& weights,
                                       const std::vector<double>& means,
                                       const std::vector<double>& covs, int dim) {
    GaussianMixtureSpec spec;
    spec.weights = weights;
    const std::size_t k = weights.size();
    const auto d = static_cast<std::size_t>(dim);
    if (means.size() != k * d || covs.size() != k * d)
        throw ConfigError("--gmm-means/--gmm-covs must hold K*dim values");
    spec.means = Matrix(k, d);
    spec.variances = Matrix(k, d);
    for (std::size_t i = 0; i < k * d; ++i) {
        spec.means.data()[i] = means[i];
        spec.variances.data()[i] = covs[i];
    }
    spec.validate();
    return spec;
}

int cmd_gen_data(const std::string& kind, const std::string& out, int n, std::uint64_t seed,
                 int dim, const std::vector<double>& mean, double stddev, double radius,
                 double ring_sigma, double moons_noise, const std::vector<double>& gmm_weights,
                 const std::vector<double>& gmm_means, const std::vector<double>& gmm_covs,
                 const std::string& of) {
    Dataset dataset;
    if (kind == "negated") {
        if (of.empty()) throw ConfigError("--kind negated requires --of BASE_DATASET");
        dataset = negate_dataset(load_dataset(of));
    } else {
        ToyParams params;
        params.dim = dim;
        params.mean = mean;
        params.stddev = stddev;
        params.radius = radius;
        params.ring_sigma = ring_sigma;
        params.moons_noise = moons_noise;
        if (kind == "gmm") params.mixture = mixture_from_flags(gmm_weights, gmm_means, gmm_covs, dim);
        dataset = generate_toy_dataset(toy_kind_from_name(kind), params, n, seed);
    }
    save_dataset(dataset, out);
    std::cout << "wrote " << dataset.size() << " samples of dim " << dataset.dim() << " to " << out
              << "\n";
    return 0;
}

int cmd_train_score(const CommonOverrides& common) {
    const PipelineConfig cfg = common.load();
    if (cfg.score.kind != "mlp" || cfg.score.mlp_path.empty())
        throw ConfigError("train-score needs score.kind = mlp and score.mlp.path");
    if (cfg.workers > 0) set_max_workers(static_cast<unsigned>(cfg.workers));

    const auto schedule = build_schedule(cfg.schedule);
    const Dataset training_set = load_dataset(cfg.train_data);

    const TimeEmbedding emb = cfg.train.time_embedding == "scalar" ? TimeEmbedding::scalar
                                                                   : TimeEmbedding::sinusoidal;
    MlpScoreNet net(training_set.dim(), cfg.train.hidden, emb, cfg.train.embedding_width, schedule,
                    Rng::derive(cfg.seed, 0x11u));

    TrainConfig tc;
    tc.epochs = cfg.train.epochs;
    tc.batch_size = cfg.train.batch_size;
    tc.learning_rate = cfg.train.learning_rate;
    tc.beta1 = cfg.train.beta1;
    tc.beta2 = cfg.train.beta2;
    tc.seed = cfg.seed;
    tc.report_interval = cfg.train.report_interval;

    const TrainResult result = train(net, *schedule, training_set.samples, tc);
    save_mlp(net, cfg.score.mlp_path);

    std::filesystem::create_directories(cfg.out_dir);
    std::vector<std::pair<long, double>> curve;
    for (const LossPoint& p : result.curve) curve.emplace_back(p.step, p.loss);
    write_loss_curve_csv(cfg.out_dir / "loss_curve.csv", curve);

    std::cout << "trained " << result.steps << " steps, final smoothed loss "
              << format_double(result.final_loss) << ", model written to "
              << cfg.score.mlp_path.string() << "\n";
    return 0;
}

int cmd_extract(const CommonOverrides& common, const std::string& data_path,
                const std::string& out_csv) {
    const PipelineConfig cfg = common.load();
    if (cfg.workers > 0) set_max_workers(static_cast<unsigned>(cfg.workers));
    const auto schedule = build_schedule(cfg.schedule);
    const auto score = build_score(cfg, schedule);
    const TimestepGrid grid = make_timestep_grid(*schedule, cfg.nfe);
    const Dataset data =
        load_dataset(data_path.empty() ? cfg.train_data : std::filesystem::path(data_path));
    require(data.dim() == score->dim(), "data dimension does not match the score model");

    const auto stats = extract_statistics(data.samples, *score, *schedule, grid, cfg.statistics,
                                          cfg.dump_trajectories);
    if (out_csv.empty()) {
        for (StatKind kind : cfg.statistics) {
            const std::string tag(stat_kind_name(kind));
            write_stats_csv("stats_" + tag + ".csv", stats.at(kind));
        }
    } else {
        require(cfg.statistics.size() == 1, "--out with a single statistic kind only");
        write_stats_csv(out_csv, stats.at(cfg.statistics.front()));
    }
    std::cout << "extracted statistics for " << data.size() << " samples\n";
    return 0;
}

int cmd_fit_density(const CommonOverrides& common, const std::string& stats_csv,
                    const std::string& out_model) {
    const PipelineConfig cfg = common.load();
    const Matrix stats = read_stats_csv(stats_csv);
    require(!cfg.statistics.empty(), "statistic.kind required");
    const DensityModel density =
        fit_density(cfg.density, cfg.statistics.front(), stats, Rng::derive(cfg.seed, 0x0dedu));
    density.save(out_model);
    std::cout << "fitted " << density.type_name() << " density on " << stats.rows()
              << " rows, written to " << out_model << "\n";
    return 0;
}

int cmd_score(const std::string& model_path, const std::string& stats_csv,
              const std::string& out_csv) {
    const DensityModel density = DensityModel::load(model_path);
    const Matrix stats = read_stats_csv(stats_csv);
    Vec scores(stats.rows());
    for (std::size_t i = 0; i < stats.rows(); ++i)
        scores[i] = density.log_likelihood(stats.row(i));
    write_scores_csv(out_csv, scores);
    std::cout << "scored " << scores.size() << " rows to " << out_csv << "\n";
    return 0;
}

int cmd_evaluate(const std::string& inlier_csv, const std::string& outlier_csv,
                 const std::string& out_report, const std::string& task, int bins) {
    ScoredSets sets;
    sets.inlier_scores = read_scores_csv(inlier_csv);
    sets.outlier_scores = read_scores_csv(outlier_csv);
    DetectionReport report;
    report.rows.push_back(
        {task, sets.inlier_scores.size(), sets.outlier_scores.size(), auroc(sets)});
    write_report_csv(out_report, report);

    double lo = sets.inlier_scores[0], hi = sets.inlier_scores[0];
    for (const Vec* v : {&sets.inlier_scores, &sets.outlier_scores})
        for (double s : *v) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    if (lo == hi) hi = lo + 1.0;
    const std::filesystem::path report_path(out_report);
    const auto dir = report_path.parent_path();
    write_histogram_csv(dir / ("hist_inlier_" + task + ".csv"),
                        histogram(sets.inlier_scores, bins, lo, hi));
    write_histogram_csv(dir / ("hist_outlier_" + task + ".csv"),
                        histogram(sets.outlier_scores, bins, lo, hi));
    std::cout << "auroc " << format_double(report.rows[0].auroc_value) << " -> " << out_report
              << "\n";
    return 0;
}

int cmd_run(const CommonOverrides& common) {
    const PipelineConfig cfg = common.load();
    const DetectionReport report = run_detection(cfg);
    for (const DetectionRow& row : report.rows)
        std::cout << row.task << ": auroc " << format_double(row.auroc_value) << " (n_in "
                  << row.n_in << ", n_out " << row.n_out << ")\n";
    return 0;
}

int cmd_verify() {
    const auto lines = run_standard_checks();
    bool all_pass = true;
    for (const CheckLine& line : lines) {
        std::printf("%-44s measured=%-13.6g tol=%-10.3g %s\n", line.name.c_str(), line.measured,
                    line.tolerance, line.pass ? "PASS" : "FAIL");
        all_pass = all_pass && line.pass;
    }
    if (!all_pass) throw NumericError("verification failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"OOD detection from diffusion path statistics"};
    app.require_subcommand(1);

    std::string kernels_override;
    app.add_option("--kernels", kernels_override, "force a kernel backend (scalar, avx2, neon)");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a toy dataset");
    std::string gd_kind = "gaussian", gd_out = "data.dptn", gd_of;
    int gd_n = 1000, gd_dim = 2;
    std::uint64_t gd_seed = 0;
    std::vector<double> gd_mean, gd_gmm_weights, gd_gmm_means, gd_gmm_covs;
    double gd_std = 1.0, gd_radius = 3.0, gd_ring_sigma = 0.1, gd_moons_noise = 0.1;
    gen->add_option("--kind", gd_kind, "gaussian | gmm | ring | moons | negated")->required();
    gen->add_option("--out", gd_out, "output path (.dptn or .csv)")->required();
    gen->add_option("--n", gd_n, "sample count");
    gen->add_option("--seed", gd_seed, "generator seed");
    gen->add_option("--dim", gd_dim, "dimension (gaussian/gmm)");
    gen->add_option("--mean", gd_mean, "gaussian mean components");
    gen->add_option("--std", gd_std, "gaussian stddev");
    gen->add_option("--radius", gd_radius, "ring radius");
    gen->add_option("--ring-sigma", gd_ring_sigma, "ring radial noise");
    gen->add_option("--moons-noise", gd_moons_noise, "moons noise");
    gen->add_option("--gmm-weights", gd_gmm_weights, "mixture weights");
    gen->add_option("--gmm-means", gd_gmm_means, "flat K*dim mixture means");
    gen->add_option("--gmm-covs", gd_gmm_covs, "flat K*dim diagonal covariances");
    gen->add_option("--of", gd_of, "base dataset for --kind negated");

    // config-driven subcommands
    CommonOverrides train_common, extract_common, fit_common, run_common;
    auto* train_cmd = app.add_subcommand("train-score", "train the MLP score by DSM");
    add_common(train_cmd, train_common);

    auto* extract_cmd = app.add_subcommand("extract", "integrate samples and write statistics");
    add_common(extract_cmd, extract_common);
    std::string ex_data, ex_out;
    extract_cmd->add_option("--data", ex_data, "dataset path (default data.train)");
    extract_cmd->add_option("--out", ex_out, "statistics CSV output");

    auto* fit_cmd = app.add_subcommand("fit-density", "fit a density to a statistics CSV");
    add_common(fit_cmd, fit_common);
    std::string fd_stats, fd_out = "density.dptn";
    fit_cmd->add_option("--stats", fd_stats, "statistics CSV")->required();
    fit_cmd->add_option("--out", fd_out, "model output path");

    auto* score_cmd = app.add_subcommand("score", "score statistics under a fitted density");
    std::string sc_model, sc_stats, sc_out = "scores.csv";
    score_cmd->add_option("--model", sc_model, "fitted density model")->required();
    score_cmd->add_option("--stats", sc_stats, "statistics CSV")->required();
    score_cmd->add_option("--out", sc_out, "scores CSV output");

    auto* eval_cmd = app.add_subcommand("evaluate", "AUROC and histograms from score CSVs");
    std::string ev_in, ev_out, ev_report = "report.csv", ev_task = "task";
    int ev_bins = 50;
    eval_cmd->add_option("--inlier", ev_in, "inlier scores CSV")->required();
    eval_cmd->add_option("--outlier", ev_out, "outlier scores CSV")->required();
    eval_cmd->add_option("--report", ev_report, "report CSV output");
    eval_cmd->add_option("--task", ev_task, "task label");
    eval_cmd->add_option("--bins", ev_bins, "histogram bins");

    auto* run_cmd = app.add_subcommand("run", "full detection pipeline");
    add_common(run_cmd, run_common);

    app.add_subcommand("verify", "numerical verification against closed forms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (!kernels_override.empty() && !diffpath::kernels::select_by_name(kernels_override.c_str()))
            throw ConfigError("kernel backend not available: " + kernels_override);

        if (gen->parsed())
            return cmd_gen_data(gd_kind, gd_out, gd_n, gd_seed, gd_dim, gd_mean, gd_std, gd_radius,
                                gd_ring_sigma, gd_moons_noise, gd_gmm_weights, gd_gmm_means,
                                gd_gmm_covs, gd_of);
        if (train_cmd->parsed()) return cmd_train_score(train_common);
        if (extract_cmd->parsed()) return cmd_extract(extract_common, ex_data, ex_out);
        if (fit_cmd->parsed()) return cmd_fit_density(fit_common, fd_stats, fd_out);
        if (score_cmd->parsed()) return cmd_score(sc_model, sc_stats, sc_out);
        if (eval_cmd->parsed()) return cmd_evaluate(ev_in, ev_out, ev_report, ev_task, ev_bins);
        if (run_cmd->parsed()) return cmd_run(run_common);
        if (app.get_subcommand("verify")->parsed()) return cmd_verify();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
