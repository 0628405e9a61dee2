#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "diffpath/config.hpp"
#include "diffpath/dataset.hpp"
#include "diffpath/density_models.hpp"
#include "diffpath/evaluation.hpp"
#include "diffpath/path_statistics.hpp"
#include "diffpath/schedule.hpp"
#include "diffpath/score_model.hpp"

namespace diffpath {

// Fitted density of either family behind one scoring surface.
struct DensityModel {
    std::variant<KdeModel, GmmModel> model;

    double log_likelihood(std::span<const double> x) const;
    std::string_view type_name() const noexcept;

    void save(const std::filesystem::path& path) const;
    static DensityModel load(const std::filesystem::path& path);
};

void save_mlp(const MlpScoreNet& net, const std::filesystem::path& path);
std::unique_ptr<MlpScoreNet> load_mlp(const std::filesystem::path& path,
                                      std::shared_ptr<const NoiseSchedule> schedule);

std::shared_ptr<const NoiseSchedule> build_schedule(const ScheduleConfig& cfg);
std::shared_ptr<const ScoreFunction> build_score(const PipelineConfig& cfg,
                                                 std::shared_ptr<const NoiseSchedule> schedule);

// One forward integration per sample (parallel over samples), then every
// requested statistic from the shared trajectory. Optionally dumps the
// trajectories to a tensor container.
std::map<StatKind, Matrix> extract_statistics(const Matrix& samples, const ScoreFunction& score,
                                              const NoiseSchedule& schedule,
                                              const TimestepGrid& grid,
                                              const std::vector<StatKind>& kinds,
                                              const std::filesystem::path& dump_path = {});

DensityModel fit_density(const DensityConfig& cfg, StatKind kind, const Matrix& stats,
                         std::uint64_t seed);

struct DetectionRow {
    std::string task;
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    double auroc_value = 0.0;
};

struct DetectionReport {
    std::vector<DetectionRow> rows;
};

// Full pipeline: statistics for the train set, density fit, statistics and
// scores for both test sets, AUROC per statistic kind. Writes stats CSVs,
// persisted densities, score CSVs, histograms, and report.csv under
// cfg.out_dir.
DetectionReport run_detection(const PipelineConfig& cfg);

// Formatting used for every CSV so reports are byte-stable.
std::string format_double(double v);
void write_stats_csv(const std::filesystem::path& path, const Matrix& stats);
Matrix read_stats_csv(const std::filesystem::path& path);
void write_scores_csv(const std::filesystem::path& path, const Vec& scores);
Vec read_scores_csv(const std::filesystem::path& path);
void write_report_csv(const std::filesystem::path& path, const DetectionReport& report);
void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist);
void write_loss_curve_csv(const std::filesystem::path& path,
                          const std::vector<std::pair<long, double>>& curve);

} // namespace diffpath
