#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rfs/config.hpp"
#include "rfs/errors.hpp"

using namespace rfs;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "state_grid": {"lower": 0.0, "upper": 2.0, "cells": 4},
    "measurement_grid": {"lower": 0.0, "upper": 3.0, "cells": 3},
    "steps": 5,
    "seed": 11,
    "motion": {"markov": {"type": "gaussian", "sigma": 0.5}, "survival": 0.9, "birth": [0.1, 0.0, 0.0, 0.1]},
    "sensor": {"likelihood": {"type": "uniform"}, "detection": 0.8, "clutter": [0.1, 0.2, 0.1]},
    "initial": {"type": "poisson", "intensity": 0.5},
    "regions": [{"name": "a", "cells": [0, 3]}, {"name": "b", "range": [1, 3]}, {"name": "c", "all": true}]
  })");
}

ScenarioConfig parse(const json& j) { return config_from_json(j); }

const std::filesystem::path config_dir = RFS_CONFIG_DIR;

}  // namespace

TEST_CASE("a complete config parses") {
  const ScenarioConfig cfg = parse(base_config());
  CHECK(cfg.state_space->cell_count() == 4);
  CHECK(cfg.state_space->cell_volume() == doctest::Approx(0.5));
  CHECK(cfg.measurement_space->cell_count() == 3);
  CHECK(cfg.steps == 5);
  CHECK(cfg.seed == 11);
  CHECK_FALSE(cfg.oracle);
  CHECK(cfg.oracle_nmax == kDefaultOracleOrder);
  CHECK(cfg.motion.survival[2] == 0.9);
  CHECK(cfg.motion.birth.intensity[3] == 0.1);
  CHECK(cfg.sensor.clutter[1] == 0.2);
  CHECK(cfg.motion.markov.normalization_error() < 1e-12);
  CHECK(cfg.sensor.likelihood.normalization_error() < 1e-12);
  REQUIRE(cfg.regions.size() == 3);
  CHECK(cfg.regions[0].region.members() == std::vector<CellIndex>{0, 3});
  CHECK(cfg.regions[1].region.members() == std::vector<CellIndex>{1, 2});
  CHECK(cfg.regions[2].region.count() == 4);
}

TEST_CASE("defaults for optional fields") {
  json j = base_config();
  j.erase("seed");
  j.erase("regions");
  j["motion"].erase("birth");
  j["sensor"].erase("clutter");
  const ScenarioConfig cfg = parse(j);
  CHECK(cfg.seed == 0);
  CHECK(cfg.regions.empty());
  CHECK(integrate(cfg.motion.birth.intensity) == 0.0);
  CHECK(integrate(cfg.sensor.clutter) == 0.0);
}

TEST_CASE("every process model type parses and round trips") {
  const Space g = GridSpace::uniform(0.0, 3.0, 3);
  const char* models[] = {
      R"({"type": "poisson", "intensity": [0.1, 0.2, 0.3]})",
      R"({"type": "bernoulli", "existence": 0.4})",
      R"({"type": "bernoulli", "existence": 0.4, "spatial": [0.5, 0.25, 0.25]})",
      R"({"type": "iid_cluster", "cardinality": [0.2, 0.5, 0.3]})",
      R"({"type": "gauss_poisson", "singles": 0.1, "pairs": {"entries": [[0, 1, 0.05], [2, 2, 0.02]]}})",
      R"({"type": "gauss_poisson", "pairs": {"constant": 0.01}})",
      R"({"type": "khinchin", "compounds": [{"order": 1, "constant": 0.1}, {"order": 3, "entries": [[0, 1, 2, 0.01]]}]})",
      R"({"type": "superposition", "parts": [{"type": "poisson", "intensity": 0.2}, {"type": "bernoulli", "existence": 0.3}]})",
  };
  for (const char* text : models) {
    CAPTURE(text);
    const ProcessModel m = model_from_json(json::parse(text), g);
    const json out = model_to_json(m);
    CHECK(model_to_json(model_from_json(out, g)) == out);
  }
  const ProcessModel gp = model_from_json(json::parse(models[4]), g);
  const auto& pairs = std::get<GaussPoisson>(gp.variant()).pairs;
  const std::vector<CellIndex> ab{0, 1}, ba{1, 0}, cc{2, 2}, ac{0, 2};
  CHECK(pairs.at(ab) == 0.05);
  CHECK(pairs.at(ba) == 0.05);
  CHECK(pairs.at(cc) == 0.02);
  CHECK(pairs.at(ac) == 0.0);
  const ProcessModel kh = model_from_json(json::parse(models[6]), g);
  const auto& comps = std::get<Khinchin>(kh.variant()).compounds;
  REQUIRE(comps.size() == 3);
  CHECK(comps[1].order() == 2);
  const std::vector<CellIndex> t{2, 0, 1};
  CHECK(comps[2].at(t) == 0.01);
}

TEST_CASE("config round trips through JSON") {
  for (const json& j : {base_config(), json::parse(std::ifstream(config_dir / "oracle_small.json")),
                        json::parse(std::ifstream(config_dir / "tracking_50.json"))}) {
    const json once = config_to_json(parse(j));
    CHECK(config_to_json(parse(once)) == once);
  }
}

TEST_CASE("bundled configs load") {
  const ScenarioConfig small = load_config(config_dir / "oracle_small.json");
  CHECK(small.oracle);
  CHECK(small.state_space->cell_count() == 4);
  CHECK(small.steps == 3);
  const ScenarioConfig big = load_config(config_dir / "tracking_50.json");
  CHECK_FALSE(big.oracle);
  CHECK(big.steps == 50);
}

TEST_CASE("multidimensional grids") {
  json j = base_config();
  j["state_grid"] = json::parse(R"({"lower": [0, 0], "upper": [2, 1], "cells": [2, 2]})");
  j["regions"] = json::array();
  const ScenarioConfig cfg = parse(j);
  CHECK(cfg.state_space->dimension() == 2);
  CHECK(cfg.state_space->cell_volume() == doctest::Approx(0.5));
  const json once = config_to_json(cfg);
  CHECK(config_to_json(parse(once)) == once);
}

TEST_CASE("invalid configs raise config errors") {
  const auto broken = [](auto&& edit) {
    json j = base_config();
    edit(j);
    return j;
  };
  const json cases[] = {
      json::parse(R"({"steps": 1})"),
      json::array(),
      broken([](json& j) { j.erase("state_grid"); }),
      broken([](json& j) { j.erase("initial"); }),
      broken([](json& j) { j["steps"] = -1; }),
      broken([](json& j) { j["steps"] = 2.5; }),
      broken([](json& j) { j["seed"] = -3; }),
      broken([](json& j) { j["seed"] = "x"; }),
      broken([](json& j) { j["state_grid"]["cells"] = 0; }),
      broken([](json& j) { j["state_grid"]["upper"] = -1.0; }),
      broken([](json& j) { j["motion"]["survival"] = 1.5; }),
      broken([](json& j) { j["motion"]["survival"] = json::array({0.5, 0.5}); }),
      broken([](json& j) { j["motion"]["markov"] = json{{"type", "spline"}}; }),
      broken([](json& j) { j["motion"]["markov"] = json{{"type", "gaussian"}}; }),
      broken([](json& j) { j["sensor"]["likelihood"] = json{{"type", "identity"}}; }),
      broken([](json& j) { j["sensor"]["detection"] = -0.1; }),
      broken([](json& j) { j["sensor"]["clutter"] = "lots"; }),
      broken([](json& j) { j["initial"] = json{{"type", "cox"}}; }),
      broken([](json& j) { j["initial"] = json{{"type", "bernoulli"}, {"existence", 2.0}}; }),
      broken([](json& j) { j["initial"] = json{{"type", "iid_cluster"}, {"cardinality", {0.5, 0.6}}}; }),
      broken([](json& j) { j["initial"] = json{{"type", "khinchin"}, {"compounds", {{{"order", 0}}}}}; }),
      broken([](json& j) { j["regions"] = json::parse(R"([{"name": "a", "cells": [7]}])"); }),
      broken([](json& j) { j["regions"] = json::parse(R"([{"name": "a", "range": [3, 1]}])"); }),
      broken([](json& j) { j["regions"] = json::parse(R"([{"name": "a", "all": true}, {"name": "a", "all": true}])"); }),
      broken([](json& j) { j["regions"] = json::parse(R"([{"cells": [0]}])"); }),
      broken([](json& j) { j["oracle"] = true, j["oracle_nmax"] = 40; }),
      broken([](json& j) {
        j["oracle"] = true;
        j["state_grid"]["cells"] = 20;
        j["regions"] = json::array();
        j["motion"]["birth"] = 0.1;
      }),
  };
  for (const json& j : cases) {
    CAPTURE(j.dump());
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
}

TEST_CASE("unreadable or malformed files") {
  CHECK_THROWS_AS(load_config(config_dir / "does_not_exist.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "rfs_malformed_config.json";
  {
    std::ofstream out(path);
    out << "{ \"steps\": ";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::filesystem::remove(path);
}
