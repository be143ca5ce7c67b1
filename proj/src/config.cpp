#include "rfs/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rfs/errors.hpp"

namespace rfs {

using nlohmann::json;

namespace {

const json& require_key(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  return j.at(key);
}

double finite_number(const json& j, const char* what) {
  if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
  return v;
}

std::size_t count_value(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ConfigError(std::string(what) + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

CellIndex cell_value(const json& j, const Space& space, const char* what) {
  const std::size_t c = count_value(j, what);
  if (c >= space->cell_count()) throw ConfigError(std::string(what) + ": cell " + std::to_string(c) + " outside grid");
  return c;
}

std::vector<double> dense_values(const Compound& c) { return {c.values().begin(), c.values().end()}; }

/// Accepts {"constant": v}, {"values": [...]} (dense row-major) or
/// {"entries": [[c_1, ..., c_n, v], ...]} (symmetrized over orderings).
Compound compound_from_json(const json& j, const Space& space, std::size_t order) {
  if (j.is_number()) return Compound::constant(space, order, finite_number(j, "compound"));
  if (j.contains("constant")) return Compound::constant(space, order, finite_number(j.at("constant"), "compound"));
  if (j.contains("values")) {
    std::vector<double> v;
    for (const auto& x : j.at("values")) v.push_back(finite_number(x, "compound value"));
    return Compound(space, order, std::move(v));
  }
  Compound out = Compound::zeros(space, order);
  for (const auto& e : require_key(j, "entries", "compound")) {
    if (!e.is_array() || e.size() != order + 1)
      throw ConfigError("compound entry must list " + std::to_string(order) + " cells and a value");
    std::vector<CellIndex> cells;
    for (std::size_t i = 0; i < order; ++i) cells.push_back(cell_value(e[i], space, "compound entry"));
    const double v = finite_number(e[order], "compound entry value");
    std::sort(cells.begin(), cells.end());
    do {
      out.at(cells) = v;
    } while (std::next_permutation(cells.begin(), cells.end()));
  }
  return out;
}

json compound_to_json(const Compound& c) { return json{{"order", c.order()}, {"values", dense_values(c)}}; }

Field spatial_from_json(const json& j, const Space& space) {
  if (j.is_string()) {
    if (j.get<std::string>() != "uniform") throw ConfigError("unknown spatial law '" + j.get<std::string>() + "'");
    return uniform_spatial(space);
  }
  return field_from_json(j, space);
}

Kernel kernel_from_json(const json& j, const Space& to, const Space& from) {
  const std::string type = require_key(j, "type", "kernel").get<std::string>();
  if (type == "identity") {
    if (!to->same_layout(*from)) throw ConfigError("identity kernel needs matching grids");
    return Kernel::identity(to);
  }
  if (type == "gaussian") return Kernel::gaussian(to, from, finite_number(require_key(j, "sigma", "kernel"), "sigma"));
  if (type == "uniform") return Kernel::uniform(to, from);
  if (type == "matrix") {
    // Rows indexed by the destination cell.
    const json& rows = require_key(j, "values", "kernel");
    if (!rows.is_array() || rows.size() != to->cell_count()) throw ConfigError("kernel matrix needs one row per cell");
    std::vector<double> v;
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != from->cell_count()) throw ConfigError("kernel matrix row has wrong length");
      for (const auto& x : row) v.push_back(finite_number(x, "kernel value"));
    }
    return Kernel(to, from, std::move(v));
  }
  throw ConfigError("unknown kernel type '" + type + "'");
}

json kernel_to_json(const Kernel& k) {
  const std::size_t rows = k.to()->cell_count();
  const std::size_t cols = k.from()->cell_count();
  json m = json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < cols; ++c) row.push_back(k(r, c));
    m.push_back(row);
  }
  return json{{"type", "matrix"}, {"values", m}};
}

json field_to_json(const Field& f) { return json(std::vector<double>(f.values().begin(), f.values().end())); }

Region region_from_json(const json& j, const Space& space) {
  if (j.contains("all") && j.at("all").get<bool>()) return Region::all(space);
  if (j.contains("range")) {
    const json& r = j.at("range");
    if (!r.is_array() || r.size() != 2) throw ConfigError("region range must be [first, last)");
    const std::size_t a = count_value(r[0], "region range");
    const std::size_t b = count_value(r[1], "region range");
    if (a > b || b > space->cell_count()) throw ConfigError("region range outside grid");
    return Region::range(space, a, b);
  }
  std::vector<CellIndex> cells;
  for (const auto& c : require_key(j, "cells", "region")) cells.push_back(cell_value(c, space, "region"));
  return Region::cells(space, cells);
}

json region_to_json(const NamedRegion& r) {
  json cells = json::array();
  for (CellIndex c : r.region.members()) cells.push_back(c);
  return json{{"name", r.name}, {"cells", cells}};
}

template <typename Fn>
auto as_config_error(const char* where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const NumericalError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  as_config_error("scenario", [&] {
    if (!state_space || !measurement_space) throw ConfigError("scenario needs both grids");
    motion.validate();
    sensor.validate();
    require_same_space(motion.markov.from(), state_space, "motion kernel");
    require_same_space(sensor.likelihood.from(), state_space, "likelihood kernel");
    require_same_space(sensor.likelihood.to(), measurement_space, "likelihood kernel");
    require_same_space(initial.space(), state_space, "initial process");
    for (const auto& r : regions) require_same_space(r.region.space(), state_space, "region");
    for (std::size_t a = 0; a < regions.size(); ++a)
      for (std::size_t b = a + 1; b < regions.size(); ++b)
        if (regions[a].name == regions[b].name) throw ConfigError("duplicate region name '" + regions[a].name + "'");
    if (oracle) {
      if (state_space->cell_count() > kOracleMaxCells)
        throw ConfigError("oracle runs need at most " + std::to_string(kOracleMaxCells) + " state cells");
      if (oracle_nmax == 0 || oracle_nmax > kOracleMaxOrder)
        throw ConfigError("oracle_nmax must be between 1 and " + std::to_string(kOracleMaxOrder));
    }
  });
}

Space grid_from_json(const json& j) {
  return as_config_error("grid", [&]() -> Space {
    const json& lo = require_key(j, "lower", "grid");
    const json& hi = require_key(j, "upper", "grid");
    const json& n = require_key(j, "cells", "grid");
    if (lo.is_array()) {
      std::vector<double> lower, upper;
      std::vector<std::size_t> counts;
      for (const auto& x : lo) lower.push_back(finite_number(x, "grid lower"));
      for (const auto& x : hi) upper.push_back(finite_number(x, "grid upper"));
      for (const auto& x : n) counts.push_back(count_value(x, "grid cells"));
      return GridSpace::uniform(lower, upper, counts);
    }
    return GridSpace::uniform(finite_number(lo, "grid lower"), finite_number(hi, "grid upper"),
                              count_value(n, "grid cells"));
  });
}

json grid_to_json(const GridSpace& g) {
  if (g.dimension() == 1) return json{{"lower", g.lower()[0]}, {"upper", g.upper()[0]}, {"cells", g.cell_count()}};
  return json{{"lower", std::vector<double>(g.lower().begin(), g.lower().end())},
              {"upper", std::vector<double>(g.upper().begin(), g.upper().end())},
              {"cells", std::vector<std::size_t>(g.axis_counts().begin(), g.axis_counts().end())}};
}

Field field_from_json(const json& j, const Space& space) {
  if (j.is_number()) return Field::constant(space, finite_number(j, "field"));
  if (!j.is_array() || j.size() != space->cell_count())
    throw ConfigError("field needs a scalar or " + std::to_string(space->cell_count()) + " values");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(finite_number(x, "field value"));
  return Field(space, std::move(v));
}

ProcessModel model_from_json(const json& j, const Space& space) {
  return as_config_error("process model", [&]() -> ProcessModel {
    const std::string type = require_key(j, "type", "process model").get<std::string>();
    if (type == "poisson") return Poisson{field_from_json(require_key(j, "intensity", "poisson"), space)};
    if (type == "bernoulli")
      return Bernoulli{finite_number(require_key(j, "existence", "bernoulli"), "existence"),
                       spatial_from_json(j.value("spatial", json("uniform")), space)};
    if (type == "iid_cluster") {
      std::vector<double> card;
      for (const auto& x : require_key(j, "cardinality", "iid_cluster")) card.push_back(finite_number(x, "cardinality"));
      return IidCluster{std::move(card), spatial_from_json(j.value("spatial", json("uniform")), space)};
    }
    if (type == "gauss_poisson")
      return GaussPoisson{field_from_json(j.value("singles", json(0.0)), space),
                          compound_from_json(require_key(j, "pairs", "gauss_poisson"), space, 2)};
    if (type == "khinchin") {
      const json& list = require_key(j, "compounds", "khinchin");
      std::vector<Compound> compounds;
      for (const auto& c : list) {
        const std::size_t order = count_value(require_key(c, "order", "khinchin compound"), "compound order");
        if (order == 0 || order > kMaxKhinchinOrder)
          throw ConfigError("khinchin compound order must be between 1 and " + std::to_string(kMaxKhinchinOrder));
        if (compounds.size() < order) compounds.resize(order);
        if (compounds[order - 1].order() != 0) throw ConfigError("khinchin compound order given twice");
        compounds[order - 1] = compound_from_json(c, space, order);
      }
      for (std::size_t k = 0; k < compounds.size(); ++k)
        if (compounds[k].order() == 0) compounds[k] = Compound::zeros(space, k + 1);
      return Khinchin{std::move(compounds)};
    }
    if (type == "superposition") {
      std::vector<ProcessModel> parts;
      for (const auto& p : require_key(j, "parts", "superposition")) parts.push_back(model_from_json(p, space));
      return Superposition{std::move(parts)};
    }
    throw ConfigError("unknown process type '" + type + "'");
  });
}

json model_to_json(const ProcessModel& m) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          return json{{"type", "poisson"}, {"intensity", field_to_json(v.intensity)}};
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          return json{{"type", "bernoulli"}, {"existence", v.existence}, {"spatial", field_to_json(v.spatial)}};
        } else if constexpr (std::is_same_v<T, IidCluster>) {
          return json{{"type", "iid_cluster"}, {"cardinality", v.cardinality}, {"spatial", field_to_json(v.spatial)}};
        } else if constexpr (std::is_same_v<T, GaussPoisson>) {
          return json{{"type", "gauss_poisson"}, {"singles", field_to_json(v.singles)}, {"pairs", compound_to_json(v.pairs)}};
        } else if constexpr (std::is_same_v<T, Khinchin>) {
          json list = json::array();
          for (const auto& c : v.compounds) list.push_back(compound_to_json(c));
          return json{{"type", "khinchin"}, {"compounds", list}};
        } else {
          json parts = json::array();
          for (const auto& p : v.parts) parts.push_back(model_to_json(p));
          return json{{"type", "superposition"}, {"parts", parts}};
        }
      },
      m.variant());
}

ScenarioConfig config_from_json(const json& j) {
  return as_config_error("config", [&]() -> ScenarioConfig {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const Space state = grid_from_json(require_key(j, "state_grid", "config"));
    const Space meas = grid_from_json(require_key(j, "measurement_grid", "config"));
    const json& motion = require_key(j, "motion", "config");
    const json& sensor = require_key(j, "sensor", "config");

    MotionModel mm{kernel_from_json(require_key(motion, "markov", "motion"), state, state),
                   field_from_json(require_key(motion, "survival", "motion"), state),
                   Poisson{field_from_json(motion.value("birth", json(0.0)), state)}};
    SensorModel sm{kernel_from_json(require_key(sensor, "likelihood", "sensor"), meas, state),
                   field_from_json(require_key(sensor, "detection", "sensor"), state),
                   field_from_json(sensor.value("clutter", json(0.0)), meas)};

    ScenarioConfig cfg{state, meas, count_value(require_key(j, "steps", "config"), "steps"), std::move(mm),
                       std::move(sm), model_from_json(require_key(j, "initial", "config"), state), 0, false, kDefaultOracleOrder, {}};
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
        throw ConfigError("seed must be an unsigned integer");
      if (j.at("seed").is_number_integer() && j.at("seed").get<long long>() < 0)
        throw ConfigError("seed must be an unsigned integer");
      cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    cfg.oracle = j.value("oracle", false);
    if (j.contains("oracle_nmax")) cfg.oracle_nmax = count_value(j.at("oracle_nmax"), "oracle_nmax");
    for (const auto& r : j.value("regions", json::array())) {
      const std::string name = require_key(r, "name", "region").get<std::string>();
      if (name.empty()) throw ConfigError("region names must be nonempty");
      cfg.regions.push_back({name, region_from_json(r, state)});
    }
    cfg.validate();
    return cfg;
  });
}

json config_to_json(const ScenarioConfig& cfg) {
  json regions = json::array();
  for (const auto& r : cfg.regions) regions.push_back(region_to_json(r));
  return json{{"state_grid", grid_to_json(*cfg.state_space)},
              {"measurement_grid", grid_to_json(*cfg.measurement_space)},
              {"steps", cfg.steps},
              {"seed", cfg.seed},
              {"oracle", cfg.oracle},
              {"oracle_nmax", cfg.oracle_nmax},
              {"motion",
               {{"markov", kernel_to_json(cfg.motion.markov)},
                {"survival", field_to_json(cfg.motion.survival)},
                {"birth", field_to_json(cfg.motion.birth.intensity)}}},
              {"sensor",
               {{"likelihood", kernel_to_json(cfg.sensor.likelihood)},
                {"detection", field_to_json(cfg.sensor.detection)},
                {"clutter", field_to_json(cfg.sensor.clutter)}}},
              {"initial", model_to_json(cfg.initial)},
              {"regions", regions}};
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace rfs
