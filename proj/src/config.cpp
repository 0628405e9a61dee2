#include "diffpath/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace diffpath {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        const std::string part = trim(s.substr(pos, comma - pos));
        if (!part.empty()) out.push_back(part);
        pos = comma + 1;
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': '" + value + "' is not a number");
    return v;
}

long to_long(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
    return v;
}

} // namespace

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

ConfigMap ConfigMap::parse_string(const std::string& text, const std::string& origin) {
    ConfigMap map;
    map.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (map.values_.count(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        map.values_[key] = value;
    }
    return map;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string ConfigMap::require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(key, it->second);
}

long ConfigMap::get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : to_long(key, it->second);
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return static_cast<std::uint64_t>(to_long(key, it->second));
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
    std::vector<double> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& part : split_commas(it->second)) out.push_back(to_double(key, part));
    return out;
}

std::vector<int> ConfigMap::get_ints(const std::string& key) const {
    std::vector<int> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& part : split_commas(it->second))
        out.push_back(static_cast<int>(to_long(key, part)));
    return out;
}

std::vector<std::string> ConfigMap::get_strings(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return {};
    return split_commas(it->second);
}

void ConfigMap::check_known_keys(const std::vector<std::string>& known) const {
    std::string unknown;
    for (const auto& [key, value] : values_) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            if (!unknown.empty()) unknown += ", ";
            unknown += key;
        }
    }
    if (!unknown.empty())
        throw ConfigError(origin_ + ": unknown config keys: " + unknown);
}

namespace {

const std::vector<std::string>& known_pipeline_keys() {
    static const std::vector<std::string> keys = {
        "schedule.kind", "schedule.T", "schedule.beta_start", "schedule.beta_end",
        "schedule.t_max",
        "score.kind", "score.gmm.weights", "score.gmm.means", "score.gmm.covariances",
        "score.gmm.dim", "score.mlp.path",
        "grid.nfe",
        "statistic.kind",
        "density.kind", "density.kde.bandwidth", "density.gmm.k_grid", "density.gmm.cov_types",
        "density.gmm.max_iters", "density.gmm.tol",
        "train.epochs", "train.batch_size", "train.lr", "train.beta1", "train.beta2",
        "train.report_interval", "train.hidden", "train.time_embedding",
        "train.embedding_width",
        "seed", "split.fraction",
        "data.train", "data.test_inlier", "data.test_outlier",
        "out.dir", "dump.trajectories", "task.name", "resize.model_res", "workers",
    };
    return keys;
}

GaussianMixtureSpec parse_gmm_spec(const ConfigMap& map) {
    const auto weights = map.get_doubles("score.gmm.weights");
    const auto means = map.get_doubles("score.gmm.means");
    const auto covs = map.get_doubles("score.gmm.covariances");
    const long dim = map.get_long("score.gmm.dim", 0);
    if (weights.empty() || dim <= 0)
        throw ConfigError("score.kind = gmm needs score.gmm.weights and score.gmm.dim");
    const std::size_t k = weights.size();
    const auto d = static_cast<std::size_t>(dim);
    if (means.size() != k * d)
        throw ConfigError("score.gmm.means must hold K*dim values");
    if (covs.size() != k * d)
        throw ConfigError("score.gmm.covariances must hold K*dim values");
    GaussianMixtureSpec spec;
    spec.weights = weights;
    spec.means = Matrix(k, d);
    spec.variances = Matrix(k, d);
    for (std::size_t i = 0; i < k * d; ++i) {
        spec.means.data()[i] = means[i];
        spec.variances.data()[i] = covs[i];
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid score.gmm spec: ") + e.what());
    }
    return spec;
}

} // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    return from_map(ConfigMap::parse_file(path));
}

PipelineConfig PipelineConfig::from_map(const ConfigMap& map) {
    map.check_known_keys(known_pipeline_keys());
    PipelineConfig cfg;

    cfg.schedule.kind = map.get_string("schedule.kind", cfg.schedule.kind);
    if (cfg.schedule.kind != "linear" && cfg.schedule.kind != "cosine")
        throw ConfigError("schedule.kind must be linear or cosine");
    cfg.schedule.num_steps = static_cast<int>(map.get_long("schedule.T", cfg.schedule.num_steps));
    cfg.schedule.beta_start = map.get_double("schedule.beta_start", cfg.schedule.beta_start);
    cfg.schedule.beta_end = map.get_double("schedule.beta_end", cfg.schedule.beta_end);
    cfg.schedule.t_max = map.get_double("schedule.t_max", cfg.schedule.t_max);

    cfg.score.kind = map.get_string("score.kind", cfg.score.kind);
    if (cfg.score.kind == "gmm") {
        cfg.score.gmm = parse_gmm_spec(map);
    } else if (cfg.score.kind == "mlp") {
        cfg.score.mlp_path = map.get_string("score.mlp.path", "");
        if (cfg.score.mlp_path.empty()) throw ConfigError("score.kind = mlp needs score.mlp.path");
    } else {
        throw ConfigError("score.kind must be gmm or mlp");
    }

    cfg.nfe = static_cast<int>(map.get_long("grid.nfe", cfg.nfe));
    if (cfg.nfe < 2) throw ConfigError("grid.nfe must be >= 2");

    if (map.has("statistic.kind")) {
        cfg.statistics.clear();
        for (const std::string& token : map.get_strings("statistic.kind")) {
            try {
                cfg.statistics.push_back(stat_kind_from_name(token));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        if (cfg.statistics.empty()) throw ConfigError("statistic.kind is empty");
    }

    cfg.density.kind = map.get_string("density.kind", cfg.density.kind);
    if (cfg.density.kind != "auto" && cfg.density.kind != "kde" && cfg.density.kind != "gmm")
        throw ConfigError("density.kind must be auto, kde, or gmm");
    const std::string bw = map.get_string("density.kde.bandwidth", "auto");
    cfg.density.kde_bandwidth = bw == "auto" ? 0.0 : to_double("density.kde.bandwidth", bw);
    if (map.has("density.gmm.k_grid")) cfg.density.gmm_k_grid = map.get_ints("density.gmm.k_grid");
    if (cfg.density.gmm_k_grid.empty()) throw ConfigError("density.gmm.k_grid is empty");
    if (map.has("density.gmm.cov_types")) {
        cfg.density.gmm_cov_types.clear();
        for (const std::string& token : map.get_strings("density.gmm.cov_types")) {
            try {
                cfg.density.gmm_cov_types.push_back(covariance_type_from_name(token));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
    }
    cfg.density.gmm_max_iters =
        static_cast<int>(map.get_long("density.gmm.max_iters", cfg.density.gmm_max_iters));
    cfg.density.gmm_tol = map.get_double("density.gmm.tol", cfg.density.gmm_tol);

    cfg.train.epochs = static_cast<int>(map.get_long("train.epochs", cfg.train.epochs));
    cfg.train.batch_size = static_cast<int>(map.get_long("train.batch_size", cfg.train.batch_size));
    cfg.train.learning_rate = map.get_double("train.lr", cfg.train.learning_rate);
    cfg.train.beta1 = map.get_double("train.beta1", cfg.train.beta1);
    cfg.train.beta2 = map.get_double("train.beta2", cfg.train.beta2);
    cfg.train.report_interval =
        static_cast<int>(map.get_long("train.report_interval", cfg.train.report_interval));
    if (map.has("train.hidden")) cfg.train.hidden = map.get_ints("train.hidden");
    cfg.train.time_embedding = map.get_string("train.time_embedding", cfg.train.time_embedding);
    if (cfg.train.time_embedding != "scalar" && cfg.train.time_embedding != "sinusoidal")
        throw ConfigError("train.time_embedding must be scalar or sinusoidal");
    cfg.train.embedding_width = static_cast<int>(
        map.get_long("train.embedding_width", cfg.train.time_embedding == "scalar" ? 1 : 8));
    if (cfg.train.time_embedding == "scalar") cfg.train.embedding_width = 1;

    cfg.seed = map.get_u64("seed", cfg.seed);
    cfg.split_fraction = map.get_double("split.fraction", cfg.split_fraction);
    if (cfg.split_fraction < 0.0 || cfg.split_fraction >= 1.0)
        throw ConfigError("split.fraction must be in [0, 1)");

    cfg.train_data = map.get_string("data.train", "");
    cfg.test_inlier = map.get_string("data.test_inlier", "");
    cfg.test_outlier = map.get_string("data.test_outlier", "");
    cfg.out_dir = map.get_string("out.dir", ".");
    cfg.dump_trajectories = map.get_string("dump.trajectories", "");
    cfg.task_name = map.get_string("task.name", cfg.task_name);
    cfg.resize_model_res = static_cast<int>(map.get_long("resize.model_res", 0));
    cfg.workers = static_cast<int>(map.get_long("workers", 0));
    return cfg;
}

} // namespace diffpath
