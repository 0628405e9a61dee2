#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffpath/common.hpp"
#include "diffpath/density_models.hpp"
#include "diffpath/path_statistics.hpp"
#include "diffpath/score_model.hpp"

namespace diffpath {

// Plain-text `dotted.key = value` file. '#' starts a comment. Unknown keys
// are hard errors so a typo in a sweep config cannot silently fall back to a
// default.
class ConfigMap {
public:
    static ConfigMap parse_file(const std::filesystem::path& path);
    static ConfigMap parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key) const; // comma separated
    std::vector<int> get_ints(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    // Throws ConfigError listing every key not in `known`.
    void check_known_keys(const std::vector<std::string>& known) const;

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
};

struct ScheduleConfig {
    std::string kind = "linear"; // linear | cosine
    int num_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double t_max = 1.0;
};

struct ScoreConfig {
    std::string kind = "gmm"; // gmm | mlp
    GaussianMixtureSpec gmm;
    std::filesystem::path mlp_path;
};

struct DensityConfig {
    std::string kind = "auto"; // auto | kde | gmm
    double kde_bandwidth = 0.0; // 0 = Scott's rule
    std::vector<int> gmm_k_grid = {1, 2, 4, 8};
    std::vector<CovarianceType> gmm_cov_types = {CovarianceType::diagonal, CovarianceType::full};
    int gmm_max_iters = 200;
    double gmm_tol = 1e-6;
};

struct TrainSectionConfig {
    int epochs = 40;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int report_interval = 100;
    std::vector<int> hidden = {64, 64};
    std::string time_embedding = "scalar"; // scalar | sinusoidal
    int embedding_width = 1;
};

struct PipelineConfig {
    ScheduleConfig schedule;
    ScoreConfig score;
    int nfe = 10;
    std::vector<StatKind> statistics = {StatKind::six_d};
    DensityConfig density;
    TrainSectionConfig train;
    std::uint64_t seed = 0;
    double split_fraction = 0.0; // optional train/val split, 0 = none
    std::filesystem::path train_data;
    std::filesystem::path test_inlier;
    std::filesystem::path test_outlier;
    std::filesystem::path out_dir = ".";
    std::filesystem::path dump_trajectories; // empty = off
    std::string task_name = "task";
    int resize_model_res = 0; // 0 = no resolution equalization
    int workers = 0;          // 0 = hardware concurrency

    static PipelineConfig load(const std::filesystem::path& path);
    static PipelineConfig from_map(const ConfigMap& map);
};

} // namespace diffpath
