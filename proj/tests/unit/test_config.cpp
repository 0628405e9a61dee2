#include <doctest.h>

#include "diffpath/config.hpp"

using namespace diffpath;

TEST_CASE("config map parsing") {
    const ConfigMap map = ConfigMap::parse_string("a.b = 1.5\n"
                                                  "# a comment\n"
                                                  "name = hello  # trailing comment\n"
                                                  "list = 1, 2, 3\n");
    CHECK(map.get_double("a.b", 0.0) == 1.5);
    CHECK(map.get_string("name", "") == "hello");
    CHECK(map.get_ints("list") == std::vector<int>{1, 2, 3});
    CHECK(map.get_long("missing", 42) == 42);
    CHECK_THROWS_AS(map.require_string("missing"), ConfigError);
}

TEST_CASE("malformed config lines") {
    CHECK_THROWS_AS(ConfigMap::parse_string("just words\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse_string("= value\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse_string("a = 1\na = 2\n"), ConfigError);
    const ConfigMap map = ConfigMap::parse_string("a = x\n");
    CHECK_THROWS_AS(map.get_double("a", 0.0), ConfigError);
}

TEST_CASE("unknown keys are hard errors") {
    const ConfigMap map = ConfigMap::parse_string("schedule.T = 100\nschedle.kind = linear\n");
    CHECK_THROWS_WITH_AS(PipelineConfig::from_map(map), doctest::Contains("schedle.kind"),
                         ConfigError);
}

TEST_CASE("pipeline config defaults and parsing") {
    const ConfigMap map = ConfigMap::parse_string("score.kind = gmm\n"
                                                  "score.gmm.dim = 2\n"
                                                  "score.gmm.weights = 0.5, 0.5\n"
                                                  "score.gmm.means = 2, 0, -2, 0\n"
                                                  "score.gmm.covariances = 1, 1, 1, 1\n"
                                                  "statistic.kind = 1d, 6d\n"
                                                  "grid.nfe = 10\n"
                                                  "seed = 7\n");
    const PipelineConfig cfg = PipelineConfig::from_map(map);
    CHECK(cfg.schedule.kind == "linear");
    CHECK(cfg.schedule.num_steps == 1000);
    CHECK(cfg.nfe == 10);
    CHECK(cfg.seed == 7);
    REQUIRE(cfg.statistics.size() == 2);
    CHECK(cfg.statistics[0] == StatKind::curvature_1d);
    CHECK(cfg.statistics[1] == StatKind::six_d);
    CHECK(cfg.score.gmm.components() == 2);
    CHECK(cfg.score.gmm.means(1, 0) == -2.0);
    CHECK(cfg.density.kind == "auto");
}

TEST_CASE("pipeline config rejects bad values") {
    auto parse = [](const std::string& text) {
        return PipelineConfig::from_map(ConfigMap::parse_string(text));
    };
    CHECK_THROWS_AS(parse("schedule.kind = quadratic\n"), ConfigError);
    CHECK_THROWS_AS(parse("score.kind = mlp\n"), ConfigError); // missing path
    CHECK_THROWS_AS(parse("score.kind = gmm\n"), ConfigError); // missing spec
    CHECK_THROWS_AS(parse("score.kind = mlp\nscore.mlp.path = m.dptn\ngrid.nfe = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse("score.kind = mlp\nscore.mlp.path = m.dptn\nstatistic.kind = 9d\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse("score.kind = mlp\nscore.mlp.path = m.dptn\nsplit.fraction = 1.5\n"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse("score.kind = mlp\nscore.mlp.path = m.dptn\ndensity.gmm.cov_types = banded\n"),
        ConfigError);
}

TEST_CASE("mlp score config") {
    const ConfigMap map = ConfigMap::parse_string("score.kind = mlp\n"
                                                  "score.mlp.path = model.dptn\n"
                                                  "train.hidden = 32, 16\n"
                                                  "train.time_embedding = sinusoidal\n"
                                                  "density.kind = kde\n"
                                                  "density.kde.bandwidth = 2.5\n");
    const PipelineConfig cfg = PipelineConfig::from_map(map);
    CHECK(cfg.score.kind == "mlp");
    CHECK(cfg.score.mlp_path == "model.dptn");
    CHECK(cfg.train.hidden == std::vector<int>{32, 16});
    CHECK(cfg.train.time_embedding == "sinusoidal");
    CHECK(cfg.train.embedding_width == 8);
    CHECK(cfg.density.kde_bandwidth == 2.5);
}
