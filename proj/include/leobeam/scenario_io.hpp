#pragma once

// Scenario files (YAML), canonical re-emission, and the result files a run
// leaves behind: metrics.csv, run_log.jsonl and the scenario it ran.

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "leobeam/orchestrator.hpp"
#include "leobeam/scenario.hpp"

#ifndef LEOBEAM_BUILD_ID
#define LEOBEAM_BUILD_ID "unknown"
#endif

namespace leobeam {

inline constexpr const char* kBuildId = LEOBEAM_BUILD_ID;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ numbers

/// Shortest text that parses back to exactly `v`.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) throw std::domain_error("format_number: non-finite value");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace detail {

using Conv = double (*)(double);

inline double ident(double v) { return v; }
inline double km_in(double v) { return v * 1e3; }
inline double km_out(double v) { return v / 1e3; }
inline double mhz_in(double v) { return v * 1e6; }
inline double mhz_out(double v) { return v / 1e6; }
inline double ghz_in(double v) { return v * 1e9; }
inline double ghz_out(double v) { return v / 1e9; }
inline double deg_in(double v) { return deg_to_rad(v); }
inline double deg_out(double v) { return rad_to_deg(v); }
inline double dbi_in(double v) { return std::pow(10.0, v / 10.0); }
inline double dbi_out(double v) { return 10.0 * std::log10(v); }

// File value whose conversion lands exactly on `si`, so emit then load
// reproduces the scenario bit for bit.
inline double file_value(double si, Conv in, Conv out) {
  const double v = out(si);
  if (in(v) == si) return v;
  double up = v, down = v;
  for (int i = 0; i < 64; ++i) {
    up = std::nextafter(up, INFINITY);
    if (in(up) == si) return up;
    down = std::nextafter(down, -INFINITY);
    if (in(down) == si) return down;
  }
  return v;
}

enum class Kind { real, integer, boolean, text, int_list, text_list, algo_list };

struct Key {
  const char* section;
  const char* name;
  Kind kind;
  std::function<void*(Scenario&)> ref;
  Conv in = ident, out = ident;
};

template <class T>
std::function<void*(Scenario&)> field(T Scenario::*m) {
  return [m](Scenario& s) -> void* { return &(s.*m); };
}

inline const std::vector<Key>& keys() {
  using K = Kind;
  static const std::vector<Key> k = {
      {"constellation", "altitude_km", K::real, [](Scenario& s) -> void* { return &s.walker.altitude; }, km_in, km_out},
      {"constellation", "inclination_deg", K::real, [](Scenario& s) -> void* { return &s.walker.inclination; }, deg_in, deg_out},
      {"constellation", "planes", K::integer, [](Scenario& s) -> void* { return &s.walker.plane_count; }},
      {"constellation", "sats_per_plane", K::integer, [](Scenario& s) -> void* { return &s.walker.sats_per_plane; }},
      {"constellation", "phasing", K::integer, [](Scenario& s) -> void* { return &s.walker.phasing_factor; }},
      {"constellation", "epoch_s", K::real, [](Scenario& s) -> void* { return &s.walker.epoch; }},
      {"constellation", "serving_satellites", K::integer, field(&Scenario::serving_satellites)},
      {"constellation", "beams_per_satellite", K::integer, field(&Scenario::beams_per_satellite)},
      {"constellation", "slots", K::integer, field(&Scenario::slot_count)},
      {"constellation", "slot_length_s", K::real, field(&Scenario::slot_length)},
      {"area", "latitude_deg", K::real, field(&Scenario::area_latitude_deg)},
      {"area", "longitude_deg", K::real, field(&Scenario::area_longitude_deg)},
      {"area", "radius_km", K::real, field(&Scenario::area_radius), km_in, km_out},
      {"area", "candidates", K::integer, field(&Scenario::candidate_count)},
      {"area", "service_radius_km", K::real, field(&Scenario::service_radius), km_in, km_out},
      {"users", "count", K::integer, field(&Scenario::user_count)},
      {"users", "distribution", K::text, [](Scenario& s) -> void* { return &s.layout.distribution; }},
      {"users", "hotspot_radius_km", K::real, [](Scenario& s) -> void* { return &s.layout.hotspot_radius; }, km_in, km_out},
      {"users", "clusters", K::integer, [](Scenario& s) -> void* { return &s.layout.cluster_count; }},
      {"radio", "bandwidth_mhz", K::real, [](Scenario& s) -> void* { return &s.radio.beam_bandwidth; }, mhz_in, mhz_out},
      {"radio", "subchannels", K::integer, [](Scenario& s) -> void* { return &s.radio.subchannel_count; }},
      {"radio", "per_user_cap", K::integer, [](Scenario& s) -> void* { return &s.radio.per_user_cap; }},
      {"radio", "beam_power_w", K::real, [](Scenario& s) -> void* { return &s.radio.beam_power_cap; }},
      {"radio", "satellite_power_w", K::real, [](Scenario& s) -> void* { return &s.radio.satellite_power_cap; }},
      {"radio", "min_elevation_deg", K::real, [](Scenario& s) -> void* { return &s.radio.min_elevation; }, deg_in, deg_out},
      {"radio", "min_sinr", K::real, [](Scenario& s) -> void* { return &s.radio.min_sinr; }},
      {"radio", "reference_power_w", K::real, [](Scenario& s) -> void* { return &s.radio.reference_power; }},
      {"radio", "alpha", K::real, [](Scenario& s) -> void* { return &s.radio.fairness_alpha; }},
      {"radio", "utility_floor_bps", K::real, [](Scenario& s) -> void* { return &s.radio.utility_floor; }},
      {"radio", "noise_temperature_k", K::real, field(&Scenario::noise_temperature)},
      {"radio", "antenna_efficiency", K::real, [](Scenario& s) -> void* { return &s.antenna.aperture_efficiency; }},
      {"radio", "antenna_diameter_m", K::real, [](Scenario& s) -> void* { return &s.antenna.aperture_diameter; }},
      {"radio", "frequency_ghz", K::real, [](Scenario& s) -> void* { return &s.antenna.carrier_frequency; }, ghz_in, ghz_out},
      {"radio", "half_power_angle_deg", K::real, [](Scenario& s) -> void* { return &s.antenna.half_power_angle; }, deg_in, deg_out},
      {"radio", "rx_gain_dbi", K::real, [](Scenario& s) -> void* { return &s.antenna.rx_gain; }, dbi_in, dbi_out},
      {"radio", "rician_factor", K::real, [](Scenario& s) -> void* { return &s.atmosphere.rician_factor; }},
      {"radio", "cloud_attenuation", K::real, [](Scenario& s) -> void* { return &s.atmosphere.cloud_attenuation; }},
      {"radio", "rain_attenuation", K::real, [](Scenario& s) -> void* { return &s.atmosphere.rain_attenuation; }},
      {"algorithm", "max_outer_iterations", K::integer, [](Scenario& s) -> void* { return &s.algorithm.max_outer_iterations; }},
      {"algorithm", "outer_tolerance", K::real, [](Scenario& s) -> void* { return &s.algorithm.outer_tolerance; }},
      {"algorithm", "swap_cap", K::integer, [](Scenario& s) -> void* { return &s.algorithm.swap_cap; }},
      {"algorithm", "negotiation_cap", K::integer, [](Scenario& s) -> void* { return &s.algorithm.negotiation_cap; }},
      {"algorithm", "interference_threshold_w", K::real, [](Scenario& s) -> void* { return &s.algorithm.interference_threshold; }},
      {"algorithm", "sca_threshold", K::real, [](Scenario& s) -> void* { return &s.algorithm.sca_threshold; }},
      {"algorithm", "sca_max_iterations", K::integer, [](Scenario& s) -> void* { return &s.algorithm.sca_max_iterations; }},
      {"algorithm", "vacancy_swaps", K::boolean, [](Scenario& s) -> void* { return &s.algorithm.vacancy_swaps; }},
      {"sweep", "beams_per_satellite", K::int_list, [](Scenario& s) -> void* { return &s.sweep.beams_per_satellite; }},
      {"sweep", "subchannels", K::int_list, [](Scenario& s) -> void* { return &s.sweep.subchannels; }},
      {"sweep", "per_user_caps", K::int_list, [](Scenario& s) -> void* { return &s.sweep.per_user_caps; }},
      {"sweep", "distributions", K::text_list, [](Scenario& s) -> void* { return &s.sweep.distributions; }},
      {"sweep", "algorithms", K::algo_list, [](Scenario& s) -> void* { return &s.sweep.algorithms; }},
  };
  return k;
}

inline const char* const kSections[] = {"constellation", "area", "users", "radio", "algorithm", "sweep"};

inline std::string where(const YAML::Mark& m) {
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

// Reads one value into the scenario; returns an error message or "".
inline std::string read_value(const Key& k, const YAML::Node& v, Scenario& s) {
  const std::string name = std::string(k.section) + "." + k.name;
  const std::string at = where(v.Mark());
  auto scalar = [&](auto& out) {
    if (!v.IsScalar()) return false;
    return YAML::convert<std::decay_t<decltype(out)>>::decode(v, out);
  };
  void* p = k.ref(s);
  switch (k.kind) {
    case Kind::real: {
      double x;
      if (!scalar(x) || !std::isfinite(x)) return name + ": expected a finite number" + at;
      *static_cast<double*>(p) = k.in(x);
      return "";
    }
    case Kind::integer: {
      int x;
      if (!scalar(x)) return name + ": expected an integer" + at;
      *static_cast<int*>(p) = x;
      return "";
    }
    case Kind::boolean: {
      bool x;
      if (!scalar(x)) return name + ": expected true or false" + at;
      *static_cast<bool*>(p) = x;
      return "";
    }
    case Kind::text: {
      std::string x;
      if (!scalar(x)) return name + ": expected a name" + at;
      try {
        *static_cast<UserDistribution*>(p) = parse_distribution(x);
      } catch (const ConfigError& e) {
        return name + ": " + e.what() + at;
      }
      return "";
    }
    case Kind::int_list:
    case Kind::text_list:
    case Kind::algo_list: {
      if (!v.IsSequence()) return name + ": expected a list" + at;
      std::vector<int> ints;
      std::vector<std::string> texts;
      std::vector<Algorithm> algos;
      for (const auto& e : v) {
        const std::string eat = where(e.Mark());
        if (k.kind == Kind::int_list) {
          int x;
          if (!e.IsScalar() || !YAML::convert<int>::decode(e, x)) return name + ": expected integers" + eat;
          ints.push_back(x);
        } else {
          std::string x;
          if (!e.IsScalar() || !YAML::convert<std::string>::decode(e, x)) return name + ": expected names" + eat;
          if (k.kind == Kind::algo_list) {
            try {
              algos.push_back(parse_algorithm(x));
            } catch (const ConfigError& err) {
              return name + ": " + err.what() + eat;
            }
          } else {
            texts.push_back(x);
          }
        }
      }
      if (k.kind == Kind::int_list) *static_cast<std::vector<int>*>(p) = ints;
      if (k.kind == Kind::text_list) *static_cast<std::vector<std::string>*>(p) = texts;
      if (k.kind == Kind::algo_list) *static_cast<std::vector<Algorithm>*>(p) = algos;
      return "";
    }
  }
  return "";
}

template <class T>
std::string join_list(const std::vector<T>& v, auto fmt) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

inline std::string write_value(const Key& k, Scenario& s) {
  void* p = k.ref(s);
  switch (k.kind) {
    case Kind::real: return format_number(file_value(*static_cast<double*>(p), k.in, k.out));
    case Kind::integer: return std::to_string(*static_cast<int*>(p));
    case Kind::boolean: return *static_cast<bool*>(p) ? "true" : "false";
    case Kind::text: return std::string(to_string(*static_cast<UserDistribution*>(p)));
    case Kind::int_list:
      return join_list(*static_cast<std::vector<int>*>(p), [](int x) { return std::to_string(x); });
    case Kind::text_list:
      return join_list(*static_cast<std::vector<std::string>*>(p), [](const std::string& x) { return x; });
    case Kind::algo_list:
      return join_list(*static_cast<std::vector<Algorithm>*>(p),
                       [](Algorithm a) { return std::string(to_string(a)); });
  }
  return "";
}

}  // namespace detail

// ------------------------------------------------------------------ loading

/// Parses scenario text; missing keys keep their defaults. Every problem is
/// collected before throwing, each with its key and, where the document
/// has one, its line and column.
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<text>") {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(origin + ": parse error" + detail::where(e.mark) + ": " + e.msg);
  }
  Scenario s;
  std::vector<std::string> errs;
  if (doc.IsNull()) return s;
  if (!doc.IsMap()) throw ScenarioError(origin + ": top level must be a mapping" + detail::where(doc.Mark()));

  for (const auto& top : doc) {
    const std::string sec = top.first.as<std::string>();
    const YAML::Node& body = top.second;
    if (sec == "seeds") {
      std::vector<std::uint64_t> seeds;
      bool ok = body.IsSequence();
      if (ok)
        for (const auto& e : body) {
          std::uint64_t x;
          if (!e.IsScalar() || !YAML::convert<std::uint64_t>::decode(e, x)) ok = false;
          else seeds.push_back(x);
        }
      if (ok) s.seeds = seeds;
      else errs.push_back("seeds: expected a list of non-negative integers" + detail::where(body.Mark()));
      continue;
    }
    bool known = false;
    for (const char* k : detail::kSections) known = known || sec == k;
    if (!known) {
      errs.push_back("unknown section '" + sec + "'" + detail::where(top.first.Mark()));
      continue;
    }
    if (body.IsNull()) continue;
    if (!body.IsMap()) {
      errs.push_back(sec + ": expected a mapping" + detail::where(body.Mark()));
      continue;
    }
    for (const auto& kv : body) {
      const std::string key = kv.first.as<std::string>();
      const detail::Key* found = nullptr;
      for (const auto& k : detail::keys())
        if (sec == k.section && key == k.name) found = &k;
      if (!found) {
        errs.push_back("unknown key '" + sec + "." + key + "'" + detail::where(kv.first.Mark()));
        continue;
      }
      auto e = detail::read_value(*found, kv.second, s);
      if (!e.empty()) errs.push_back(e);
    }
  }
  for (auto& p : s.problems()) errs.push_back(p);
  if (!errs.empty()) {
    std::string msg = origin + ": invalid scenario";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ScenarioError(msg);
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string() + ": cannot read file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

// ---------------------------------------------------------------- emission

/// Every key in a fixed order with exact numbers; the hash is taken over
/// this text.
inline std::string emit_scenario(const Scenario& sc) {
  Scenario s = sc;
  std::string out;
  for (const char* sec : detail::kSections) {
    out += std::string(sec) + ":\n";
    for (const auto& k : detail::keys())
      if (std::string_view(k.section) == sec) out += "  " + std::string(k.name) + ": " + detail::write_value(k, s) + "\n";
  }
  out += "seeds: " + detail::join_list(s.seeds, [](std::uint64_t x) { return std::to_string(x); }) + "\n";
  return out;
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string scenario_hash(const Scenario& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(emit_scenario(s))));
  return buf;
}

inline const char* const kMetricsColumns =
    "algorithm,L,K,K_thr,distribution,seed,sum_rate_bps,served_users,sum_alpha_utility,jfi_rate,"
    "jfi_utility,outer_iterations,wall_time_s,scenario_hash,build_id";

inline std::string metrics_csv(const std::vector<SweepRow>& rows, const std::string& hash,
                               const std::string& build = kBuildId) {
  std::string out = std::string(kMetricsColumns) + "\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    for (double v : {m.sum_rate, m.sum_alpha_utility, m.jfi_rate, m.jfi_utility, r.wall_time_s})
      if (!std::isfinite(v))
        throw std::domain_error("non-finite metric for " + std::string(to_string(r.algorithm)) +
                                " seed " + std::to_string(r.seed));
    out += std::string(to_string(r.algorithm)) + "," + std::to_string(r.L) + "," + std::to_string(r.K) +
           "," + std::to_string(r.K_thr) + "," + r.distribution + "," + std::to_string(r.seed) + "," +
           format_number(m.sum_rate) + "," + std::to_string(m.served_users) + "," +
           format_number(m.sum_alpha_utility) + "," + format_number(m.jfi_rate) + "," +
           format_number(m.jfi_utility) + "," + std::to_string(r.outer_iterations) + "," +
           format_number(r.wall_time_s) + "," + hash + "," + build + "\n";
  }
  return out;
}

inline nlohmann::ordered_json run_log_entry(const SweepRow& r, const std::string& hash) {
  nlohmann::ordered_json j;
  const auto& rec = r.record;
  j["algorithm"] = std::string(to_string(r.algorithm));
  j["L"] = r.L;
  j["K"] = r.K;
  j["K_thr"] = r.K_thr;
  j["distribution"] = r.distribution;
  j["seed"] = r.seed;
  j["scenario_hash"] = hash;
  j["initial_objective"] = rec.initial_objective;
  j["objective"] = rec.objective;
  j["converged"] = rec.converged;
  j["outer_iterations"] = rec.outer_iterations;
  j["outer_decreases"] = rec.outer_decreases;
  j["violations"] = rec.violations;
  j["violation_log"] = rec.violation_log;
  auto its = nlohmann::ordered_json::array();
  for (const auto& it : rec.iterations) {
    nlohmann::ordered_json e;
    e["iteration"] = it.iteration;
    e["objective"] = it.objective;
    e["phase1_rounds"] = it.phase1_rounds;
    e["swaps"] = it.swaps;
    e["non_increasing_swaps"] = it.non_increasing_swaps;
    e["repaired_subchannels"] = it.repaired_subchannels;
    e["blocking_pairs"] = it.blocking_pairs;
    e["negotiation_removals"] = it.negotiation_removals;
    e["non_increasing_removals"] = it.non_increasing_removals;
    e["min_sinr_removals"] = it.min_sinr_removals;
    e["sca_iterations"] = it.sca_iterations;
    e["sca_guard_triggers"] = it.sca_guard_triggers;
    e["sca_converged"] = it.sca_converged;
    e["rejected_phases"] = it.rejected_phases;
    e["violations"] = it.violations;
    e["bdc_seconds"] = it.bdc_seconds;
    e["sa_seconds"] = it.sa_seconds;
    e["sca_seconds"] = it.sca_seconds;
    its.push_back(std::move(e));
  }
  j["iterations"] = std::move(its);
  return j;
}

inline std::string run_log(const std::vector<SweepRow>& rows, const std::string& hash) {
  std::string out;
  for (const auto& r : rows) out += run_log_entry(r, hash).dump() + "\n";
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  f << text;
  f.close();
  if (!f) throw IoError(path.string() + ": write failed");
}

/// scenario.yaml, metrics.csv and run_log.jsonl under `dir`.
inline void emit_results(const Scenario& s, const std::vector<SweepRow>& rows,
                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": " + ec.message());
  const auto hash = scenario_hash(s);
  write_file(dir / "scenario.yaml", emit_scenario(s));
  write_file(dir / "metrics.csv", metrics_csv(rows, hash));
  write_file(dir / "run_log.jsonl", run_log(rows, hash));
}

}  // namespace leobeam
