#include "diffpath/pipeline.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "diffpath/ddim_path.hpp"
#include "diffpath/parallel.hpp"
#include "diffpath/rng.hpp"
#include "diffpath/tensor_file.hpp"

namespace diffpath {

namespace {

// meta/type codes in persisted models
constexpr float kTypeKde = 1.0f;
constexpr float kTypeGmm = 2.0f;
constexpr float kTypeMlp = 3.0f;

float cov_type_code(CovarianceType t) {
    switch (t) {
    case CovarianceType::diagonal: return 0.0f;
    case CovarianceType::full: return 1.0f;
    case CovarianceType::tied: return 2.0f;
    }
    return 0.0f;
}

CovarianceType cov_type_from_code(float code) {
    if (code == 0.0f) return CovarianceType::diagonal;
    if (code == 1.0f) return CovarianceType::full;
    if (code == 2.0f) return CovarianceType::tied;
    throw DataError("unknown covariance type code in model file");
}

} // namespace

double DensityModel::log_likelihood(std::span<const double> x) const {
    if (const auto* kde = std::get_if<KdeModel>(&model)) return kde_log_likelihood(*kde, x);
    return gmm_log_likelihood(std::get<GmmModel>(model), x);
}

std::string_view DensityModel::type_name() const noexcept {
    return std::holds_alternative<KdeModel>(model) ? "kde" : "gmm";
}

void DensityModel::save(const std::filesystem::path& path) const {
    TensorFile file;
    if (const auto* kde = std::get_if<KdeModel>(&model)) {
        file.add("meta/type", {1}).data[0] = kTypeKde;
        section_from_matrix(file.add("kde/points", {}), kde->points);
        file.add("kde/bandwidth", {1}).data[0] = static_cast<float>(kde->bandwidth);
    } else {
        const GmmModel& gmm = std::get<GmmModel>(model);
        file.add("meta/type", {1}).data[0] = kTypeGmm;
        TensorSection& meta = file.add("gmm/meta", {3});
        meta.data[0] = static_cast<float>(gmm.num_components);
        meta.data[1] = cov_type_code(gmm.cov_type);
        meta.data[2] = static_cast<float>(gmm.dim());
        section_from_vec(file.add("gmm/weights", {}), gmm.weights);
        section_from_matrix(file.add("gmm/means", {}), gmm.means);
        section_from_matrix(file.add("gmm/covariances", {}), gmm.covariances);
    }
    file.write(path);
}

DensityModel DensityModel::load(const std::filesystem::path& path) {
    const TensorFile file = TensorFile::read(path);
    const float type = file.get("meta/type").data.at(0);
    if (type == kTypeKde) {
        KdeModel kde;
        kde.points = matrix_from_section(file.get("kde/points"));
        kde.bandwidth = file.get("kde/bandwidth").data.at(0);
        if (kde.bandwidth <= 0.0) throw DataError("persisted KDE has nonpositive bandwidth");
        return DensityModel{std::move(kde)};
    }
    if (type == kTypeGmm) {
        GmmModel gmm;
        const TensorSection& meta = file.get("gmm/meta");
        gmm.num_components = static_cast<int>(meta.data.at(0));
        gmm.cov_type = cov_type_from_code(meta.data.at(1));
        gmm.weights = vec_from_section(file.get("gmm/weights"));
        gmm.means = matrix_from_section(file.get("gmm/means"));
        gmm.covariances = matrix_from_section(file.get("gmm/covariances"));
        // f32 round-off can leave the simplex slightly off; renormalize
        double wsum = 0.0;
        for (double w : gmm.weights) wsum += w;
        if (wsum <= 0.0) throw DataError("persisted GMM has no weight mass");
        for (double& w : gmm.weights) w /= wsum;
        return DensityModel{std::move(gmm)};
    }
    throw DataError("unknown model type tag in " + path.string());
}

void save_mlp(const MlpScoreNet& net, const std::filesystem::path& path) {
    TensorFile file;
    file.add("meta/type", {1}).data[0] = kTypeMlp;
    TensorSection& meta = file.add("mlp/meta", {4});
    meta.data[0] = static_cast<float>(net.dim());
    meta.data[1] = net.embedding() == TimeEmbedding::scalar ? 0.0f : 1.0f;
    meta.data[2] = static_cast<float>(net.embedding_width());
    meta.data[3] = static_cast<float>(net.layers().size());
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& layer = net.layers()[l];
        const std::string prefix = "mlp/layer" + std::to_string(l);
        section_from_matrix(file.add(prefix + "/weight", {}), layer.weight);
        section_from_vec(file.add(prefix + "/bias", {}), layer.bias);
    }
    file.write(path);
}

std::unique_ptr<MlpScoreNet> load_mlp(const std::filesystem::path& path,
                                      std::shared_ptr<const NoiseSchedule> schedule) {
    const TensorFile file = TensorFile::read(path);
    if (file.get("meta/type").data.at(0) != kTypeMlp)
        throw DataError("not an MLP model file: " + path.string());
    const TensorSection& meta = file.get("mlp/meta");
    const int dim = static_cast<int>(meta.data.at(0));
    const TimeEmbedding emb =
        meta.data.at(1) == 0.0f ? TimeEmbedding::scalar : TimeEmbedding::sinusoidal;
    const int emb_width = static_cast<int>(meta.data.at(2));
    const auto num_layers = static_cast<std::size_t>(meta.data.at(3));
    std::vector<MlpScoreNet::Layer> layers(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        const std::string prefix = "mlp/layer" + std::to_string(l);
        layers[l].weight = matrix_from_section(file.get(prefix + "/weight"));
        layers[l].bias = vec_from_section(file.get(prefix + "/bias"));
    }
    return std::make_unique<MlpScoreNet>(dim, std::move(layers), emb, emb_width,
                                         std::move(schedule));
}

std::shared_ptr<const NoiseSchedule> build_schedule(const ScheduleConfig& cfg) {
    if (cfg.kind == "cosine")
        return std::make_shared<NoiseSchedule>(build_cosine_schedule(cfg.num_steps, cfg.t_max));
    return std::make_shared<NoiseSchedule>(
        build_linear_schedule(cfg.num_steps, cfg.beta_start, cfg.beta_end, cfg.t_max));
}

std::shared_ptr<const ScoreFunction> build_score(const PipelineConfig& cfg,
                                                 std::shared_ptr<const NoiseSchedule> schedule) {
    if (cfg.score.kind == "gmm")
        return std::make_shared<AnalyticGmmScore>(cfg.score.gmm, std::move(schedule));
    if (!std::filesystem::exists(cfg.score.mlp_path))
        throw DataError("score model file does not exist: " + cfg.score.mlp_path.string());
    return load_mlp(cfg.score.mlp_path, std::move(schedule));
}

std::map<StatKind, Matrix> extract_statistics(const Matrix& samples, const ScoreFunction& score,
                                              const NoiseSchedule& schedule,
                                              const TimestepGrid& grid,
                                              const std::vector<StatKind>& kinds,
                                              const std::filesystem::path& dump_path) {
    require(!kinds.empty(), "no statistic kinds requested");
    const std::size_t n = samples.rows();

    std::map<StatKind, Matrix> out;
    for (StatKind kind : kinds)
        out[kind] = Matrix(n, static_cast<std::size_t>(stat_kind_width(kind)));

    const bool dump = !dump_path.empty();
    const auto nfe = static_cast<std::size_t>(grid.nfe());
    const std::size_t d = samples.cols();
    Matrix dump_states, dump_epsilons, dump_derivs;
    if (dump) {
        dump_states = Matrix(n * nfe, d);
        dump_epsilons = Matrix(n * nfe, d);
        dump_derivs = Matrix(n * (nfe - 1), d);
    }

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Trajectory traj = integrate_forward(samples.row(i), score, schedule, grid);
            for (StatKind kind : kinds) {
                const PathStatistic stat = compute_statistic(traj, kind);
                auto row = out.at(kind).row(i);
                std::copy(stat.values.begin(), stat.values.end(), row.begin());
            }
            if (dump) {
                std::copy(traj.states.data().begin(), traj.states.data().end(),
                          dump_states.data().begin() + static_cast<std::ptrdiff_t>(i * nfe * d));
                std::copy(traj.epsilons.data().begin(), traj.epsilons.data().end(),
                          dump_epsilons.data().begin() + static_cast<std::ptrdiff_t>(i * nfe * d));
                std::copy(traj.eps_time_derivs.data().begin(), traj.eps_time_derivs.data().end(),
                          dump_derivs.data().begin() +
                              static_cast<std::ptrdiff_t>(i * (nfe - 1) * d));
            }
        }
    });

    if (dump) {
        TensorFile file;
        auto add3 = [&](const char* name, const Matrix& m, std::size_t steps) {
            TensorSection& s = file.add(name, {n, steps, d});
            for (std::size_t i = 0; i < m.data().size(); ++i)
                s.data[i] = static_cast<float>(m.data()[i]);
        };
        add3("states", dump_states, nfe);
        add3("epsilons", dump_epsilons, nfe);
        add3("derivs", dump_derivs, nfe - 1);
        file.write(dump_path);
    }
    return out;
}

DensityModel fit_density(const DensityConfig& cfg, StatKind kind, const Matrix& stats,
                         std::uint64_t seed) {
    std::string choice = cfg.kind;
    if (choice == "auto") choice = kind == StatKind::six_d ? "gmm" : "kde";
    if (choice == "kde") {
        const double bw = cfg.kde_bandwidth > 0.0 ? cfg.kde_bandwidth : scotts_bandwidth(stats);
        return DensityModel{kde_fit(stats, bw)};
    }
    return DensityModel{gmm_select(stats, cfg.gmm_k_grid, cfg.gmm_cov_types, seed,
                                   cfg.gmm_max_iters, cfg.gmm_tol)};
}

// ---------------------------------------------------------------------------
// CSV plumbing

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_stats_csv(const std::filesystem::path& path, const Matrix& stats) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "id";
    for (std::size_t j = 0; j < stats.cols(); ++j) out << ",stat_" << (j + 1);
    out << "\n";
    for (std::size_t i = 0; i < stats.rows(); ++i) {
        out << i;
        for (std::size_t j = 0; j < stats.cols(); ++j) out << ',' << format_double(stats(i, j));
        out << "\n";
    }
}

Matrix read_stats_csv(const std::filesystem::path& path) {
    Dataset raw = load_dataset(path); // headerless numeric reader skips the header
    // first column is the sample id
    require(raw.samples.cols() >= 2, "statistics CSV needs id plus at least one column");
    Matrix stats(raw.samples.rows(), raw.samples.cols() - 1);
    for (std::size_t i = 0; i < stats.rows(); ++i)
        for (std::size_t j = 0; j < stats.cols(); ++j) stats(i, j) = raw.samples(i, j + 1);
    return stats;
}

void write_scores_csv(const std::filesystem::path& path, const Vec& scores) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "id,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i)
        out << i << ',' << format_double(scores[i]) << "\n";
}

Vec read_scores_csv(const std::filesystem::path& path) {
    Dataset raw = load_dataset(path);
    require(raw.samples.cols() == 2, "scores CSV must have id,score columns");
    Vec scores(raw.samples.rows());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = raw.samples(i, 1);
    return scores;
}

void write_report_csv(const std::filesystem::path& path, const DetectionReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "task,n_in,n_out,auroc\n";
    for (const DetectionRow& row : report.rows)
        out << row.task << ',' << row.n_in << ',' << row.n_out << ','
            << format_double(row.auroc_value) << "\n";
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "edge_lo,edge_hi,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
        out << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1]) << ','
            << hist.counts[b] << "\n";
    out << "out_of_range,," << hist.out_of_range << "\n";
}

void write_loss_curve_csv(const std::filesystem::path& path,
                          const std::vector<std::pair<long, double>>& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "step,loss\n";
    for (const auto& [step, loss] : curve) out << step << ',' << format_double(loss) << "\n";
}

// ---------------------------------------------------------------------------

namespace {

Dataset load_required(const std::filesystem::path& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string("missing data path for ") + what);
    if (!std::filesystem::exists(path))
        throw DataError(std::string(what) + " file does not exist: " + path.string());
    return load_dataset(path);
}

Vec score_rows(const DensityModel& density, const Matrix& stats) {
    Vec scores(stats.rows());
    parallel_for(stats.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            scores[i] = density.log_likelihood(stats.row(i));
    });
    return scores;
}

} // namespace

DetectionReport run_detection(const PipelineConfig& cfg) {
    if (cfg.workers > 0) set_max_workers(static_cast<unsigned>(cfg.workers));
    const auto schedule = build_schedule(cfg.schedule);
    const auto score = build_score(cfg, schedule);
    const TimestepGrid grid = make_timestep_grid(*schedule, cfg.nfe);

    Dataset train = load_required(cfg.train_data, "data.train");
    Dataset test_in = load_required(cfg.test_inlier, "data.test_inlier");
    Dataset test_out = load_required(cfg.test_outlier, "data.test_outlier");

    if (cfg.resize_model_res > 0) {
        require(train.shape.has_value() && test_in.shape.has_value() &&
                    test_out.shape.has_value(),
                "resize.model_res needs image-shaped datasets");
        if ((*train.shape)[0] != (*test_in.shape)[0])
            throw DataError("train and test_inlier must share a native resolution");
        auto [in_eq, out_eq] = resize_equalized(test_in, test_out, cfg.resize_model_res);
        auto [train_eq, unused] = resize_equalized(train, test_out, cfg.resize_model_res);
        train = std::move(train_eq);
        test_in = std::move(in_eq);
        test_out = std::move(out_eq);
    }

    require(train.dim() == score->dim(), "train data dimension does not match the score model");
    require(test_in.dim() == score->dim() && test_out.dim() == score->dim(),
            "test data dimension does not match the score model");

    // optional density-fit split: the tail fraction is held out entirely
    Matrix fit_samples = train.samples;
    if (cfg.split_fraction > 0.0) {
        const auto keep = static_cast<std::size_t>(
            static_cast<double>(train.samples.rows()) * (1.0 - cfg.split_fraction));
        require(keep >= 1, "split.fraction leaves no training samples");
        Matrix head(keep, train.samples.cols());
        for (std::size_t i = 0; i < keep; ++i)
            std::copy(train.samples.row(i).begin(), train.samples.row(i).end(),
                      head.row(i).begin());
        fit_samples = std::move(head);
    }

    std::filesystem::create_directories(cfg.out_dir);
    auto out_path = [&](const std::string& name) { return cfg.out_dir / name; };

    const auto train_stats =
        extract_statistics(fit_samples, *score, *schedule, grid, cfg.statistics,
                           cfg.dump_trajectories.empty()
                               ? std::filesystem::path{}
                               : cfg.out_dir / cfg.dump_trajectories);
    const auto in_stats = extract_statistics(test_in.samples, *score, *schedule, grid, cfg.statistics);
    const auto out_stats =
        extract_statistics(test_out.samples, *score, *schedule, grid, cfg.statistics);

    DetectionReport report;
    for (StatKind kind : cfg.statistics) {
        const std::string tag(stat_kind_name(kind));
        write_stats_csv(out_path("stats_train_" + tag + ".csv"), train_stats.at(kind));
        write_stats_csv(out_path("stats_test_inlier_" + tag + ".csv"), in_stats.at(kind));
        write_stats_csv(out_path("stats_test_outlier_" + tag + ".csv"), out_stats.at(kind));

        const DensityModel density =
            fit_density(cfg.density, kind, train_stats.at(kind), Rng::derive(cfg.seed, 0x0dedu));
        density.save(out_path("density_" + tag + ".dptn"));

        ScoredSets sets;
        sets.inlier_scores = score_rows(density, in_stats.at(kind));
        sets.outlier_scores = score_rows(density, out_stats.at(kind));
        write_scores_csv(out_path("scores_inlier_" + tag + ".csv"), sets.inlier_scores);
        write_scores_csv(out_path("scores_outlier_" + tag + ".csv"), sets.outlier_scores);

        double lo = sets.inlier_scores[0], hi = sets.inlier_scores[0];
        for (const Vec* v : {&sets.inlier_scores, &sets.outlier_scores})
            for (double s : *v) {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        if (lo == hi) hi = lo + 1.0;
        write_histogram_csv(out_path("hist_inlier_" + tag + ".csv"),
                            histogram(sets.inlier_scores, 50, lo, hi));
        write_histogram_csv(out_path("hist_outlier_" + tag + ".csv"),
                            histogram(sets.outlier_scores, 50, lo, hi));

        report.rows.push_back({cfg.task_name + ":" + tag, sets.inlier_scores.size(),
                               sets.outlier_scores.size(), auroc(sets)});
    }
    write_report_csv(out_path("report.csv"), report);
    return report;
}

} // namespace diffpath
