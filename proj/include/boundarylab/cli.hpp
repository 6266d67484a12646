#pragma once

// Subcommands of the boundarylab tool. Each one turns a validated config into a
// JSON summary plus one CSV table; run() writes both and maps the outcome to an
// exit code.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "boundarylab/adelic.hpp"
#include "boundarylab/boundary.hpp"
#include "boundarylab/bruhat.hpp"
#include "boundarylab/config.hpp"
#include "boundarylab/entropy.hpp"
#include "boundarylab/exterior.hpp"
#include "boundarylab/gauge.hpp"
#include "boundarylab/trajectory.hpp"

namespace boundarylab {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitPass = 0, kExitConfig = 1, kExitAcceptance = 2, kExitBudget = 3, kExitUsage = 4 };

struct RunOptions {
  std::string out_dir;     // empty: BOUNDARYLAB_OUT, then config output_dir, then "out"
  bool timestamp = true;
  std::size_t workers = 0;  // 0: hardware concurrency
};

struct CommandResult {
  Json summary = Json::object();
  std::string csv;
  bool pass = true;
};

struct RunOutcome {
  int exit_code = kExitPass;
  Json summary;
  std::vector<std::string> files;
  std::string message;
};

namespace cli_detail {

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(fmt(x)); }

inline Json matrix_json(const TriMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j).to_string());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json cell_json(const CellDescriptor& cell) {
  Json weyl = Json::array(), free = Json::array();
  for (auto v : cell.weyl.values()) weyl.push_back(v + 1);
  for (const auto& [i, j] : cell.free_positions) free.push_back({i + 1, j + 1});
  const std::size_t dim = cell.free_positions.size();
  return {{"place", cell.place.to_string()}, {"weyl", weyl}, {"free", free}, {"dimension", dim},
          {"kind", dim == 0 ? "point" : dim == 1 ? "line" : "cell"}};
}

inline std::vector<std::uint64_t> seeds_for(const ExperimentConfig& c, const std::string& command) {
  if (c.options.contains(command) && c.options[command].is_object() && c.options[command].contains("seeds"))
    return detail::parse_seeds(c.options[command]["seeds"]);
  return c.seeds;
}

inline std::size_t steps_for(const ExperimentConfig& c, const std::string& command) {
  auto n = c.option<std::size_t>(command, "steps", c.steps);
  if (n == 0) throw ConfigError(command + ".steps: positive integer");
  return n;
}

inline Place place_option(const Json& j, const std::string& where) {
  try {
    return Place::parse(j.is_string() ? j.get<std::string>() : j.dump());
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// Acceptance block {"place", "index"?, "tolerance", "min_seeds"}.
struct SeedCriterion {
  Place place = Place::infinity();
  std::size_t index = 0;
  double tolerance = 0;
  std::size_t min_seeds = 0;
};

inline std::optional<SeedCriterion> seed_criterion(const ExperimentConfig& c, const std::string& key, std::size_t d) {
  if (!c.acceptance.contains(key)) return std::nullopt;
  const Json& j = c.acceptance[key];
  if (!j.is_object() || !j.contains("place") || !j.contains("tolerance") || !j.contains("min_seeds"))
    throw ConfigError("acceptance." + key + ": needs \"place\", \"tolerance\" and \"min_seeds\"");
  SeedCriterion out;
  out.place = place_option(j["place"], "acceptance." + key + ".place");
  try {
    out.tolerance = j["tolerance"].get<double>();
    out.min_seeds = j["min_seeds"].get<std::size_t>();
    auto idx = j.value("index", std::size_t{1});
    if (idx == 0 || idx > d) throw ConfigError("acceptance." + key + ".index out of range");
    out.index = idx - 1;
  } catch (const Json::exception& e) {
    throw ConfigError("acceptance." + key + ": " + e.what());
  }
  return out;
}

inline Rational random_rational(std::mt19937_64& rng, long bound, bool allow_zero) {
  std::uniform_int_distribution<long> mag(1, bound);
  if (allow_zero && rng() % 5 == 0) return Rational(0);
  long n = mag(rng);
  if (rng() & 1) n = -n;
  return Rational(n, mag(rng));
}

inline TriMatrix random_tri(std::mt19937_64& rng, std::size_t d, long bound, bool unipotent = false) {
  std::vector<Rational> e(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    e[i * d + i] = unipotent ? Rational(1) : random_rational(rng, bound, false);
    for (std::size_t j = i + 1; j < d; ++j) e[i * d + j] = random_rational(rng, bound, true);
  }
  return TriMatrix(d, std::move(e));
}

// ---------------------------------------------------------------- drift

inline CommandResult cmd_drift(const ExperimentConfig& c, std::size_t) {
  CommandResult r;
  auto profile = drift_profile(*c.measure);
  auto moments = moment_value(*c.measure);
  std::ostringstream csv;
  csv << "place,index,drift,value\n";
  Json places = Json::object();
  for (const auto& place : c.places) {
    Json entry = Json::object();
    std::vector<LogLinear> phi = profile.covers(place) ? profile.drifts(place) : std::vector<LogLinear>(c.dimension);
    Json exact = Json::array(), values = Json::array();
    for (std::size_t i = 0; i < phi.size(); ++i) {
      exact.push_back(phi[i].to_string());
      values.push_back(num(phi[i].to_double()));
      csv << place.to_string() << ',' << i + 1 << ',' << phi[i].to_string() << ',' << fmt(phi[i].to_double()) << '\n';
    }
    entry["drift"] = exact;
    entry["value"] = values;
    if (place.is_prime()) {
      Json coeff = Json::array();
      for (std::size_t i = 0; i < c.dimension; ++i)
        coeff.push_back(profile.covers(place) ? profile.prime_coefficients(place.p())[i].to_string() : "0");
      entry["coefficients"] = coeff;  // phi = r ln p
    }
    entry["moment"] = num(moments.k(place));
    places[place.to_string()] = entry;
  }
  r.summary["places"] = places;
  r.summary["moment_total"] = num(moments.total);
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- cell

inline CommandResult cmd_cell(const ExperimentConfig& c, std::size_t) {
  CommandResult r;
  auto profile = drift_profile(*c.measure);
  std::ostringstream csv;
  csv << "place,weyl,dimension,kind,free\n";
  Json cells = Json::array();
  Json expected = c.acceptance.value("cells", Json::object());
  Json checks = Json::array();
  for (const auto& place : c.places) {
    CellDescriptor cell = profile.covers(place) ? cell_of(profile, place) : point_cell(place, c.dimension);
    Json j = cell_json(cell);
    std::string weyl, free;
    for (const auto& v : j["weyl"]) weyl += (weyl.empty() ? "" : " ") + std::to_string(v.get<std::size_t>());
    for (const auto& p : j["free"])
      free += (free.empty() ? "" : " ") + std::to_string(p[0].get<std::size_t>()) + ":" + std::to_string(p[1].get<std::size_t>());
    csv << place.to_string() << ',' << weyl << ',' << j["dimension"].get<std::size_t>() << ','
        << j["kind"].get<std::string>() << ',' << free << '\n';
    if (expected.contains(place.to_string())) {
      bool ok = expected[place.to_string()] == j["kind"];
      checks.push_back({{"place", place.to_string()}, {"expected", expected[place.to_string()]}, {"pass", ok}});
      r.pass = r.pass && ok;
    }
    cells.push_back(std::move(j));
  }
  r.summary["cells"] = cells;
  if (!checks.empty()) r.summary["checks"] = checks;
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- walk

inline CommandResult cmd_walk(const ExperimentConfig& c, std::size_t workers) {
  CommandResult r;
  const auto& mu = *c.measure;
  const std::size_t d = c.dimension, steps = steps_for(c, "walk");
  auto seeds = seeds_for(c, "walk");
  auto profile = drift_profile(mu);
  std::vector<std::size_t> checkpoints;
  for (std::size_t n = 10; n < steps; n *= 10) checkpoints.push_back(n);
  checkpoints.push_back(steps);
  const auto& places = c.places;
  // ln|a_ii|_place per atom: integers (valuations) at primes, doubles at infinity.
  std::vector<std::vector<std::vector<long>>> val(mu.size());
  std::vector<std::vector<double>> arch(mu.size());
  for (std::size_t a = 0; a < mu.size(); ++a) {
    for (const auto& place : places) {
      std::vector<long> v(d);
      if (place.is_prime())
        for (std::size_t i = 0; i < d; ++i) v[i] = valuation(mu.atom(a).matrix(i, i), place);
      val[a].push_back(v);
    }
    for (std::size_t i = 0; i < d; ++i) arch[a].push_back(mu.atom(a).matrix(i, i).log_abs());
  }
  // per seed: [checkpoint][place][i]
  using Table = std::vector<std::vector<std::vector<double>>>;
  auto per_seed = parallel_map(seeds, [&](std::uint64_t seed) {
    Trajectory traj(c.measure, seed);
    std::vector<std::vector<long>> vsum(places.size(), std::vector<long>(d));
    std::vector<double> asum(d);
    Table out;
    std::size_t next = 0;
    for (std::size_t n = 1; n <= steps; ++n) {
      std::size_t a = traj.atom_index(n);
      for (std::size_t k = 0; k < places.size(); ++k)
        for (std::size_t i = 0; i < d; ++i) vsum[k][i] += val[a][k][i];
      for (std::size_t i = 0; i < d; ++i) asum[i] += arch[a][i];
      if (n != checkpoints[next]) continue;
      std::vector<std::vector<double>> row;
      for (std::size_t k = 0; k < places.size(); ++k) {
        std::vector<double> e(d);
        for (std::size_t i = 0; i < d; ++i) {
          e[i] = places[k].is_infinite() ? asum[i] : -static_cast<double>(vsum[k][i]) * std::log(static_cast<double>(places[k].p()));
          e[i] /= static_cast<double>(n);
        }
        row.push_back(std::move(e));
      }
      out.push_back(std::move(row));
      ++next;
    }
    return out;
  }, workers);

  std::ostringstream csv;
  csv << "seed,place,index,n,empirical,drift\n";
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t k = 0; k < places.size(); ++k)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t t = 0; t < checkpoints.size(); ++t) {
          double drift = profile.covers(places[k]) ? profile.values(places[k])[i] : 0.0;
          csv << seeds[s] << ',' << places[k].to_string() << ',' << i + 1 << ',' << checkpoints[t] << ','
              << fmt(per_seed[s][t][k][i]) << ',' << fmt(drift) << '\n';
        }
  auto lln = seed_criterion(c, "lln", d);
  const double tol = lln ? lln->tolerance : 0.05;
  Json stats = Json::object();
  for (std::size_t k = 0; k < places.size(); ++k) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < d; ++i) {
      double drift = profile.covers(places[k]) ? profile.values(places[k])[i] : 0.0;
      double sum = 0;
      std::size_t within = 0;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        double e = per_seed[s].back()[k][i];
        sum += e;
        within += std::abs(e - drift) <= tol;
      }
      rows.push_back({{"index", i + 1}, {"drift", num(drift)}, {"mean", num(sum / static_cast<double>(seeds.size()))},
                      {"within_tolerance", within}});
      if (lln && lln->place == places[k] && lln->index == i) {
        bool ok = within >= lln->min_seeds;
        r.summary["lln"] = {{"place", places[k].to_string()}, {"index", i + 1}, {"tolerance", tol},
                            {"within", within}, {"min_seeds", lln->min_seeds}, {"pass", ok}};
        r.pass = ok;
      }
    }
    stats[places[k].to_string()] = rows;
  }
  if (lln && !r.summary.contains("lln")) throw ConfigError("acceptance.lln: place is not among the configured places");
  r.summary["steps"] = steps;
  r.summary["seeds"] = seeds.size();
  r.summary["tolerance"] = tol;
  r.summary["checkpoints"] = checkpoints;
  r.summary["places"] = stats;
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- boundary

struct BoundaryRun {
  Json json;
  std::string csv;
  bool certified = false;
  bool cross_ok = true;
  bool rates_ok = false;  // every non-exact entry's slope within tolerance of the prediction
};

inline BoundaryRun boundary_run(const ExperimentConfig& c, const DriftProfile& profile, std::uint64_t seed,
                                const Place& place, std::size_t steps, double rate_tol) {
  BoundaryRun out;
  Trajectory traj(c.measure, seed);
  ProjectiveOptions opt;
  opt.max_steps = steps;
  auto assembly = assemble_boundary_point(traj, profile, place, opt);
  const auto& point = assembly.point;
  out.certified = point.certified();
  out.rates_ok = true;
  Json entries = Json::array();
  std::ostringstream csv;
  for (const auto& rep : assembly.report.entries) {
    const auto& a = point.entries.at(rep.position);
    Json e = {{"i", rep.position.first + 1}, {"j", rep.position.second + 1}, {"value", a.value.to_string()},
              {"approx", num(a.value.to_double())}, {"certified", a.certified}, {"exact", a.exact},
              {"error", a.error_string()}, {"predicted_rate", num(rep.predicted_rate)},
              {"certified_at", rep.certified_at}, {"violations", rep.violations}};
    if (place.is_prime()) e["error_exponent"] = a.certified && !a.exact ? Json(a.error_exponent) : Json(nullptr);
    else e["error_bound"] = a.certified && !a.exact ? Json(a.error_bound.to_string()) : Json(nullptr);
    e["observed_slope"] = rep.observed_slope ? num(*rep.observed_slope) : Json(nullptr);
    if (!rep.exact) {
      bool ok = rep.certified && rep.observed_slope &&
                std::abs(*rep.observed_slope - rep.predicted_rate) <= rate_tol * std::abs(rep.predicted_rate);
      out.rates_ok = out.rates_ok && ok;
    }
    // Independent path: the determinant series from the full products.
    if (a.certified) {
      auto series = snl_series(traj, profile, place, rep.position.first, steps, rep.position.second);
      PadicApproximant s = a;
      s.value = series.back();
      bool ok = series.back() == a.value && agree(s, a);
      e["series_agrees"] = ok;
      out.cross_ok = out.cross_ok && ok;
    }
    entries.push_back(std::move(e));
    const auto& mon = assembly.sublimits.at(rep.position.second).monitors[rep.coordinate];
    auto hist = mon.history();
    for (std::size_t t = 0; t < hist.size(); ++t) {
      csv << seed << ',' << place.to_string() << ',' << rep.position.first + 1 << ',' << rep.position.second + 1 << ','
          << hist[t].first << ',';
      if (place.is_prime()) csv << mon.valuations()[t];
      csv << ',' << fmt(hist[t].second) << '\n';
    }
  }
  std::size_t wedge_total = 0, wedge_agree = 0;
  if (out.certified) {
    for (const auto& w : wedge_consistency(assembly)) {
      ++wedge_total;
      wedge_agree += w.agrees;
    }
    out.cross_ok = out.cross_ok && wedge_total == wedge_agree;
  }
  out.json = {{"seed", seed}, {"place", place.to_string()}, {"cell", cell_json(point.cell)},
              {"steps_used", assembly.report.steps_used}, {"certified", out.certified}, {"entries", entries},
              {"matrix", matrix_json(point.matrix())},
              {"wedge_checks", {{"total", wedge_total}, {"agree", wedge_agree}}},
              {"cross_check", out.cross_ok}, {"rates_within_tolerance", out.rates_ok}};
  out.csv = csv.str();
  return out;
}

inline CommandResult cmd_boundary(const ExperimentConfig& c, std::size_t workers) {
  CommandResult r;
  auto profile = drift_profile(*c.measure);
  const std::size_t steps = steps_for(c, "boundary");
  auto seeds = seeds_for(c, "boundary");
  auto rate = seed_criterion(c, "boundary_rate", c.dimension);
  const double tol = rate ? rate->tolerance : 0.15;
  auto runs = parallel_map(seeds, [&](std::uint64_t seed) {
    std::vector<BoundaryRun> out;
    for (const auto& place : c.places) out.push_back(boundary_run(c, profile, seed, place, steps, tol));
    return out;
  }, workers);
  Json all = Json::array();
  std::ostringstream csv;
  csv << "seed,place,i,j,n,valuation,log_norm\n";
  std::size_t certified = 0, cross_failures = 0, qualifying = 0;
  for (const auto& per_seed : runs) {
    for (const auto& run : per_seed) {
      all.push_back(run.json);
      csv << run.csv;
      certified += run.certified;
      cross_failures += run.certified && !run.cross_ok;
      if (rate && run.json["place"] == rate->place.to_string()) qualifying += run.certified && run.rates_ok;
    }
  }
  r.summary["steps"] = steps;
  r.summary["runs"] = all;
  r.summary["certified_runs"] = certified;
  r.summary["cross_check_failures"] = cross_failures;
  r.pass = cross_failures == 0;
  if (rate) {
    bool ok = qualifying >= rate->min_seeds;
    r.summary["rate"] = {{"place", rate->place.to_string()}, {"tolerance", tol}, {"qualifying_seeds", qualifying},
                         {"min_seeds", rate->min_seeds}, {"pass", ok}};
    r.pass = r.pass && ok;
  }
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- gauge-growth

inline CommandResult cmd_gauge(const ExperimentConfig& c, std::size_t) {
  CommandResult r;
  auto ks = c.option<std::vector<double>>("gauge-growth", "k", {1.0, 2.0, 3.0});
  TriMatrix h = TriMatrix::identity(c.dimension);
  if (c.options.contains("gauge-growth") && c.options["gauge-growth"].contains("h")) {
    std::vector<std::vector<Rational>> rows;
    for (const auto& row : c.options["gauge-growth"]["h"]) {
      rows.emplace_back();
      for (const auto& x : row) rows.back().push_back(detail::parse_entry(x, "gauge-growth.h"));
    }
    try {
      h = tri_from_rows(rows);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("gauge-growth.h: ") + e.what());
    }
  }
  const auto budget = c.option<std::uint64_t>("gauge-growth", "budget", kGaugeBudget);
  std::ostringstream csv;
  csv << "k,cardinality,bound,pass\n";
  Json reports = Json::array();
  for (double k : ks) {
    GaugeRadius radius = [&] {
      try {
        return GaugeRadius::real(k);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("gauge-growth.k: ") + e.what());
      }
    }();
    auto rep = gauge_report(radius, h, budget);
    detail::MpfrValue b(128);
    mpfr_set_d(b.get(), rep.log_bound, MPFR_RNDN);
    mpfr_exp(b.get(), b.get(), MPFR_RNDN);
    char text[64];
    mpfr_snprintf(text, sizeof text, "%.6Re", b.get());
    csv << rep.k << ',' << rep.cardinality << ',' << text << ',' << (rep.pass ? "true" : "false") << '\n';
    reports.push_back({{"k", rep.k}, {"d", rep.d}, {"h", rep.h}, {"N", radius.bound().get_str()},
                       {"cardinality", rep.cardinality}, {"log_cardinality", num(rep.log_cardinality)},
                       {"log_bound", num(rep.log_bound)}, {"bound", text}, {"pass", rep.pass}});
    r.pass = r.pass && rep.pass;
  }
  const auto n = c.option<std::uint64_t>("gauge-growth", "scalar_n", 6);
  if (n == 0) throw ConfigError("gauge-growth.scalar_n: positive integer");
  const std::uint64_t count = scalar_count(n);
  const bool scalar_ok = static_cast<double>(count) <= 2.0 * static_cast<double>(n) * static_cast<double>(n);
  Json scalar = {{"k", GaugeRadius::log_of(n).label()}, {"count", count}, {"bound", 2 * n * n}, {"pass", scalar_ok}};
  r.pass = r.pass && scalar_ok;
  if (c.acceptance.contains("scalar_count")) {
    bool ok = c.threshold<std::uint64_t>("scalar_count", 0) == count;
    scalar["expected"] = c.acceptance["scalar_count"];
    scalar["matches_expected"] = ok;
    r.pass = r.pass && ok;
  }
  r.summary["reports"] = reports;
  r.summary["scalar"] = scalar;
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- qni

inline CommandResult cmd_qni(const ExperimentConfig& c, std::size_t workers) {
  CommandResult r;
  auto ns = c.option<std::vector<std::size_t>>("qni", "n_list", {10, 100, 1000});
  auto index = c.option<std::size_t>("qni", "index", 1);
  if (ns.empty() || std::find(ns.begin(), ns.end(), 0) != ns.end()) throw ConfigError("qni.n_list: positive integers");
  if (index == 0 || index > c.dimension) throw ConfigError("qni.index: must lie in 1..dimension");
  auto seeds = seeds_for(c, "qni");
  auto rows = qni_statistic(c.measure, seeds, ns, index - 1, workers);
  std::ostringstream csv;
  csv << "seed,n,statistic\n";
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (const auto& row : rows) csv << seeds[s] << ',' << row.n << ',' << fmt(row.values[s]) << '\n';
  Json means = Json::array();
  bool all_zero = true;
  for (const auto& row : rows) {
    means.push_back({{"n", row.n}, {"mean", num(row.mean)}});
    for (double v : row.values) all_zero = all_zero && v == 0.0;
  }
  const bool decreasing = strictly_decreasing(rows);
  r.summary["index"] = index;
  r.summary["seeds"] = seeds.size();
  r.summary["means"] = means;
  r.summary["strictly_decreasing"] = decreasing;
  r.summary["identically_zero"] = all_zero;
  if (c.threshold<bool>("qni_decreasing", false)) r.pass = r.pass && decreasing;
  if (c.threshold<bool>("qni_zero", false)) r.pass = r.pass && all_zero;
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- estimgauge

inline CommandResult cmd_estimgauge(const ExperimentConfig& c, std::size_t workers) {
  CommandResult r;
  auto ns = c.option<std::vector<std::size_t>>("estimgauge", "n_list", {c.option<std::size_t>("estimgauge", "n", 200)});
  if (ns.empty() || std::find(ns.begin(), ns.end(), 0) != ns.end()) throw ConfigError("estimgauge.n_list: positive integers");
  std::sort(ns.begin(), ns.end());
  if (std::find(c.places.begin(), c.places.end(), Place::infinity()) == c.places.end())
    throw ConfigError("places: estimgauge needs the archimedean place in P");
  auto seeds = seeds_for(c, "estimgauge");
  EstimgaugeOptions opt;
  opt.boundary_steps = c.option<std::size_t>("estimgauge", "boundary_steps", 0);
  const double level = c.option<double>("estimgauge", "quantile", 0.9);
  std::ostringstream csv;
  csv << "seed,n,statistic\n";
  Json rows = Json::array();
  std::vector<double> means, quantiles;
  std::vector<std::string> warnings;
  for (std::size_t n : ns) {
    auto samples = estimgauge_statistic(c.measure, seeds, n, c.places, opt, workers);
    std::vector<double> values;
    std::size_t certified = 0;
    for (const auto& s : samples) {
      values.push_back(s.value);
      certified += s.certified;
      csv << s.seed << ',' << n << ',' << fmt(s.value) << '\n';
      for (const auto& w : s.warnings) warnings.push_back("seed " + std::to_string(s.seed) + ": " + w);
    }
    double sum = 0;
    for (double v : values) sum += v;
    means.push_back(sum / static_cast<double>(values.size()));
    quantiles.push_back(quantile(values, level));
    rows.push_back({{"n", n}, {"mean", num(means.back())}, {"quantile", num(quantiles.back())},
                    {"certified_seeds", certified}});
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < means.size(); ++k) decreasing = decreasing && means[k] < means[k - 1];
  r.summary["places"] = Json::array();
  for (const auto& p : c.places) r.summary["places"].push_back(p.to_string());
  r.summary["seeds"] = seeds.size();
  r.summary["quantile_level"] = level;
  r.summary["rows"] = rows;
  r.summary["strictly_decreasing"] = decreasing;
  r.summary["warnings"] = warnings;
  if (c.acceptance.contains("estimgauge_q90")) {
    double limit = c.threshold<double>("estimgauge_q90", 0.1);
    bool ok = quantiles.back() <= limit;
    r.summary["quantile_check"] = {{"n", ns.back()}, {"limit", limit}, {"value", num(quantiles.back())}, {"pass", ok}};
    r.pass = r.pass && ok;
  }
  if (c.threshold<bool>("estimgauge_decreasing", false)) r.pass = r.pass && decreasing;
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- entropy

inline CommandResult cmd_entropy(const ExperimentConfig& c, std::size_t workers) {
  CommandResult r;
  const auto n_max = c.option<std::size_t>("entropy", "n_max", 15);
  const auto guard = c.option<std::size_t>("entropy", "guard", kSupportGuard);
  auto radii_k = c.option<std::vector<double>>("entropy", "radii", {1.0});
  auto seq = entropy_sequence(*c.measure, n_max, guard, workers);
  std::vector<GaugeRadius> radii;
  for (double k : radii_k) {
    try {
      radii.push_back(GaugeRadius::real(k));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("entropy.radii: ") + e.what());
    }
  }
  auto der = derriennic_check(*c.measure, radii);
  std::ostringstream csv;
  csv << "n,H,increment,supportSize\n";
  Json rows = Json::array();
  for (const auto& row : seq.rows) {
    csv << row.n << ',' << fmt(row.entropy) << ',' << (row.increment ? fmt(*row.increment) : "") << ',' << row.support
        << '\n';
    rows.push_back({{"n", row.n}, {"H", num(row.entropy)},
                    {"increment", row.increment ? num(*row.increment) : Json(nullptr)}, {"support", row.support}});
  }
  const bool inc = seq.increments_non_increasing(), sub = seq.subadditive();
  Json growth = Json::array();
  for (const auto& g : der.growth)
    growth.push_back({{"k", g.k}, {"cardinality", g.cardinality}, {"log_bound", num(g.log_bound)}, {"pass", g.pass}});
  Json indices = Json::array();
  for (auto x : der.indices) indices.push_back(x);
  r.summary["rows"] = rows;
  r.summary["truncated"] = seq.truncated;
  if (seq.truncated) r.summary["note"] = seq.note;
  r.summary["increments_non_increasing"] = inc;
  r.summary["subadditive"] = sub;
  r.summary["derriennic"] = {{"first_moment", der.first_moment.to_string()}, {"indices", indices},
                             {"entropy", num(der.entropy)}, {"growth", growth},
                             {"finite_entropy_certified", der.finite_entropy_certified}};
  r.pass = inc && sub && der.finite_entropy_certified;
  if (c.acceptance.contains("entropy_rate")) {
    const double rate = c.threshold<double>("entropy_rate", 0);
    bool ok = true;
    for (const auto& row : seq.rows)
      ok = ok && std::abs(row.entropy - static_cast<double>(row.n) * rate) <= 1e-12 * static_cast<double>(row.n);
    r.summary["linear_rate"] = {{"rate", rate}, {"pass", ok}};
    r.pass = r.pass && ok;
  }
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- check-identities

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
};

inline SuiteResult appendix_suite(std::mt19937_64& rng, std::size_t count, std::size_t dmin, std::size_t dmax) {
  SuiteResult s{"appendix"};
  while (s.instances < count) {
    std::size_t d = dmin + rng() % (dmax - dmin + 1);
    TriMatrix a = random_tri(rng, d, 9);
    IndexTuple top;
    for (std::size_t i = 0; i + 1 < d; ++i) if (rng() & 1) top.push_back(i);
    top.push_back(d - 1);
    for (std::size_t l = 0; l < d && s.instances < count; ++l) {
      if (std::find(top.begin(), top.end(), l) != top.end()) continue;
      ++s.instances;
      s.failures += !appendix_identity_check(a, top, l);
    }
  }
  return s;
}

inline SuiteResult product_formula_suite(std::mt19937_64& rng, std::size_t count) {
  SuiteResult s{"product_formula"};
  for (; s.instances < count; ++s.instances) {
    // Mix small and large numerators so that both trial division and the sieve see work.
    long bound = (s.instances % 2) ? 1'000'000'007L : 999;
    s.failures += !product_formula_check(random_rational(rng, bound, false));
  }
  return s;
}

inline SuiteResult factorization_suite(std::mt19937_64& rng, std::size_t count, std::size_t dmin, std::size_t dmax) {
  SuiteResult s{"factorization"};
  for (; s.instances < count; ++s.instances) {
    std::size_t d = dmin + rng() % (dmax - dmin + 1);
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    WeylPerm w(perm);
    TriMatrix u = random_tri(rng, d, 9, true);
    auto f = factorize_u(u, w);
    bool ok = f.free_part * f.fixed_part == u;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        if (w.is_free(i, j)) ok = ok && f.fixed_part(i, j).is_zero();
        else ok = ok && f.free_part(i, j).is_zero();
      }
    TriMatrix a = random_tri(rng, d, 9);
    ok = ok && recompose(split_ud(a)) == a;
    s.failures += !ok;
  }
  return s;
}

/// weyl_from_drifts against the defining inequalities, on drifts with frequent ties.
inline SuiteResult weyl_suite(std::mt19937_64& rng, std::size_t count, std::size_t dmin, std::size_t dmax) {
  SuiteResult s{"weyl"};
  const std::uint64_t primes[] = {2, 3, 5};
  for (; s.instances < count; ++s.instances) {
    std::size_t d = dmin + rng() % (dmax - dmin + 1);
    std::vector<LogLinear> phi(d);
    for (auto& x : phi)
      for (auto p : primes)
        if (rng() % 2) x += LogLinear::term(p, Rational(static_cast<long>(rng() % 5) - 2, 1 + static_cast<long>(rng() % 2)));
    auto w = weyl_from_drifts(phi).values();
    bool ok = true;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        ok = ok && (compare(phi[i], phi[j]) >= 0 ? w[i] > w[j] : w[i] < w[j]);
    s.failures += !ok;
  }
  return s;
}

inline CommandResult cmd_check_identities(const ExperimentConfig& c, std::size_t) {
  CommandResult r;
  const std::string cmd = "check-identities";
  const auto dmin = c.option<std::size_t>(cmd, "min_dimension", 2), dmax = c.option<std::size_t>(cmd, "max_dimension", 5);
  if (dmin < 2 || dmax < dmin || dmax > kMaxDimension)
    throw ConfigError("check-identities: dimensions must satisfy 2 <= min_dimension <= max_dimension <= " +
                      std::to_string(kMaxDimension));
  std::mt19937_64 rng(c.seeds.front());
  std::vector<SuiteResult> suites;
  suites.push_back(appendix_suite(rng, c.option<std::size_t>(cmd, "appendix", 500), dmin, dmax));
  suites.push_back(product_formula_suite(rng, c.option<std::size_t>(cmd, "product_formula", 1000)));
  suites.push_back(factorization_suite(rng, c.option<std::size_t>(cmd, "factorization", 200), dmin, dmax));
  suites.push_back(weyl_suite(rng, c.option<std::size_t>(cmd, "weyl", 1000), dmin, dmax));
  std::ostringstream csv;
  csv << "suite,instances,failures\n";
  Json js = Json::object();
  for (const auto& s : suites) {
    csv << s.name << ',' << s.instances << ',' << s.failures << '\n';
    js[s.name] = {{"instances", s.instances}, {"failures", s.failures}};
    r.pass = r.pass && s.failures == 0;
  }
  r.summary["suites"] = js;
  r.summary["seed"] = c.seeds.front();
  r.csv = csv.str();
  return r;
}

using Command = std::function<CommandResult(const ExperimentConfig&, std::size_t)>;

inline const std::map<std::string, Command>& registry() {
  static const std::map<std::string, Command> table = {
      {"drift", cmd_drift},           {"cell", cmd_cell},
      {"walk", cmd_walk},             {"boundary", cmd_boundary},
      {"gauge-growth", cmd_gauge},    {"qni", cmd_qni},
      {"estimgauge", cmd_estimgauge}, {"entropy", cmd_entropy},
      {"check-identities", cmd_check_identities},
  };
  return table;
}

inline std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace cli_detail

inline std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : cli_detail::registry()) out.push_back(k);
  return out;
}

/// --out, then BOUNDARYLAB_OUT, then the config's output_dir, then "out".
inline std::string resolve_out_dir(const std::string& flag, const ExperimentConfig& c) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BOUNDARYLAB_OUT"); env && *env) return env;
  if (!c.output_dir.empty()) return c.output_dir;
  return "out";
}

/// Runs one command without touching the filesystem. Throws ConfigError / BudgetExceeded.
inline CommandResult run_command(const std::string& command, const ExperimentConfig& c, std::size_t workers = 0) {
  auto it = cli_detail::registry().find(command);
  if (it == cli_detail::registry().end()) throw std::invalid_argument("unknown command \"" + command + "\"");
  return it->second(c, workers);
}

inline RunOutcome run(const std::string& command, const ExperimentConfig& c, const RunOptions& options = {}) {
  RunOutcome out;
  if (!cli_detail::registry().count(command)) {
    out.exit_code = kExitUsage;
    out.message = "unknown command \"" + command + "\"";
    return out;
  }
  CommandResult res;
  Json summary = {{"command", command}, {"config", c.name}, {"dimension", c.dimension}, {"version", kVersion}};
  try {
    res = run_command(command, c, options.workers);
    out.exit_code = res.pass ? kExitPass : kExitAcceptance;
    out.message = res.pass ? "pass" : "acceptance failure";
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = std::string("config error: ") + e.what();
  } catch (const BudgetExceeded& e) {
    out.exit_code = kExitBudget;
    out.message = std::string("budget refusal: ") + e.what();
  }
  if (out.exit_code == kExitConfig) {
    out.summary = summary;
    return out;
  }
  for (auto& [k, v] : res.summary.items()) summary[k] = v;
  summary["pass"] = out.exit_code == kExitPass;
  summary["status"] = out.exit_code == kExitBudget ? "refused" : out.message;
  if (out.exit_code == kExitBudget) summary["error"] = out.message;
  if (options.timestamp) summary["generated_at"] = cli_detail::utc_now();
  namespace fs = std::filesystem;
  const fs::path dir = resolve_out_dir(options.out_dir, c);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    out.exit_code = kExitConfig;
    out.message = "cannot create output directory " + dir.string() + ": " + ec.message();
    return out;
  }
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + p.string());
    out.files.push_back(p.string());
  };
  write(dir / (command + ".json"), summary.dump(2) + "\n");
  if (!res.csv.empty()) write(dir / (command + ".csv"), res.csv);
  out.summary = std::move(summary);
  return out;
}

}  // namespace boundarylab
