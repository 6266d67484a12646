#pragma once

// Experiment config: one JSON document per run, validated before any work starts.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "boundarylab/measure.hpp"
#include "boundarylab/rational.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name;
  std::size_t dimension = 0;
  std::shared_ptr<const StepMeasure> measure;
  std::vector<std::uint64_t> seeds;
  std::size_t steps = 2000;
  std::vector<Place> places;  // "auto" already resolved
  Json options = Json::object();
  Json acceptance = Json::object();
  std::string output_dir;

  /// options[command][key], then options[key], then `fallback`.
  template <class T>
  T option(const std::string& command, const std::string& key, const T& fallback) const {
    try {
      if (options.contains(command) && options[command].is_object() && options[command].contains(key))
        return options[command][key].get<T>();
      if (options.contains(key) && !options[key].is_object()) return options[key].get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError("option " + command + "." + key + ": " + e.what());
    }
    return fallback;
  }

  template <class T>
  T threshold(const std::string& key, const T& fallback) const {
    try {
      return acceptance.contains(key) ? acceptance[key].get<T>() : fallback;
    } catch (const Json::exception& e) {
      throw ConfigError("acceptance." + key + ": " + e.what());
    }
  }
};

namespace detail {

/// Non-negative integer, whether parsed from text or built in code.
inline bool is_count(const Json& x) {
  return x.is_number_unsigned() || (x.is_number_integer() && x.get<long long>() >= 0);
}

inline Rational parse_entry(const Json& x, const std::string& where) {
  try {
    if (x.is_number_integer()) return Rational(x.get<long>());
    if (x.is_string()) return Rational::parse(x.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": expected an integer or a rational string such as \"3/4\"");
}

inline std::vector<std::uint64_t> parse_seeds(const Json& j) {
  std::vector<std::uint64_t> out;
  if (j.is_array()) {
    for (const auto& s : j) {
      if (!is_count(s)) throw ConfigError("seeds: every seed must be a non-negative integer");
      out.push_back(s.get<std::uint64_t>());
    }
  } else if (j.is_object()) {
    if (!j.contains("from") || !j.contains("count") || !is_count(j["from"]) || !is_count(j["count"]))
      throw ConfigError("seeds: range form needs non-negative integers \"from\" and \"count\"");
    auto from = j["from"].get<std::uint64_t>(), count = j["count"].get<std::uint64_t>();
    for (std::uint64_t k = 0; k < count; ++k) out.push_back(from + k);
  } else {
    throw ConfigError("seeds: expected a list or {\"from\", \"count\"}");
  }
  if (out.empty()) throw ConfigError("seeds: empty");
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"name",  "dimension", "atoms",  "seed",       "seeds",
                                              "steps", "places",    "options", "acceptance", "output_dir"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key \"" + k + "\"");
  ExperimentConfig c;
  c.name = j.value("name", std::string("experiment"));
  if (!j.contains("dimension") || !detail::is_count(j["dimension"])) throw ConfigError("dimension: required positive integer");
  c.dimension = j["dimension"].get<std::size_t>();
  if (c.dimension == 0 || c.dimension > kMaxDimension)
    throw ConfigError("dimension: must lie in 1.." + std::to_string(kMaxDimension));
  if (!j.contains("atoms") || !j["atoms"].is_array() || j["atoms"].empty()) throw ConfigError("atoms: required non-empty list");
  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < j["atoms"].size(); ++k) {
    const auto& a = j["atoms"][k];
    const std::string where = "atom " + std::to_string(k);
    if (!a.is_object() || !a.contains("matrix") || !a.contains("weight"))
      throw ConfigError(where + ": needs \"matrix\" and \"weight\"");
    if (!a["matrix"].is_array()) throw ConfigError(where + ": matrix must be a list of rows");
    std::vector<std::vector<Rational>> rows;
    for (std::size_t r = 0; r < a["matrix"].size(); ++r) {
      const auto& row = a["matrix"][r];
      if (!row.is_array()) throw ConfigError(where + ": row " + std::to_string(r + 1) + " is not a list");
      std::vector<Rational> entries;
      for (std::size_t s = 0; s < row.size(); ++s)
        entries.push_back(detail::parse_entry(row[s], where + " entry (" + std::to_string(r + 1) + "," + std::to_string(s + 1) + ")"));
      rows.push_back(std::move(entries));
    }
    TriMatrix m;
    try {
      m = tri_from_rows(rows);
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    atoms.push_back({std::move(m), detail::parse_entry(a["weight"], where + " weight")});
  }
  try {
    c.measure = std::make_shared<const StepMeasure>(c.dimension, std::move(atoms));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("seeds")) c.seeds = detail::parse_seeds(j["seeds"]);
  else if (j.contains("seed")) c.seeds = detail::parse_seeds(Json::array({j["seed"]}));
  else c.seeds = {1};
  if (j.contains("steps")) {
    if (!detail::is_count(j["steps"]) || j["steps"].get<std::size_t>() == 0) throw ConfigError("steps: positive integer");
    c.steps = j["steps"].get<std::size_t>();
  }
  const Json places = j.value("places", Json("auto"));
  if (places.is_string() && places.get<std::string>() == "auto") {
    c.places = relevant_places(*c.measure);
  } else if (places.is_array()) {
    for (const auto& p : places) {
      try {
        c.places.push_back(Place::parse(p.is_string() ? p.get<std::string>() : p.dump()));
      } catch (const std::exception& e) {
        throw ConfigError("places: " + std::string(e.what()));
      }
    }
    std::sort(c.places.begin(), c.places.end());
    c.places.erase(std::unique(c.places.begin(), c.places.end()), c.places.end());
  } else {
    throw ConfigError("places: \"auto\" or a list such as [\"2\", \"inf\"]");
  }
  if (j.contains("options")) {
    if (!j["options"].is_object()) throw ConfigError("options: must be an object");
    c.options = j["options"];
  }
  if (j.contains("acceptance")) {
    if (!j["acceptance"].is_object()) throw ConfigError("acceptance: must be an object");
    c.acceptance = j["acceptance"];
  }
  c.output_dir = j.value("output_dir", std::string());
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace boundarylab
