#pragma once

// Scenario description and the network it expands to for one seed.

#include <cstdint>
#include <string>
#include <vector>

#include "leobeam/channel.hpp"
#include "leobeam/geometry.hpp"
#include "leobeam/netmodel.hpp"

namespace leobeam {

enum class Algorithm { proposal, baseline1, baseline2 };

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "proposal") return Algorithm::proposal;
  if (s == "baseline1") return Algorithm::baseline1;
  if (s == "baseline2") return Algorithm::baseline2;
  throw ConfigError("unknown algorithm '" + std::string(s) +
                    "' (expected proposal, baseline1 or baseline2)");
}

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::proposal: return "proposal";
    case Algorithm::baseline1: return "baseline1";
    case Algorithm::baseline2: return "baseline2";
  }
  return "proposal";
}

struct AlgorithmConfig {
  int max_outer_iterations = 10;
  double outer_tolerance = 1e-3;       // relative objective change
  int swap_cap = 2;                    // I_1
  int negotiation_cap = 2;             // I_2
  double interference_threshold = 0;   // W, 0 means the noise power
  double sca_threshold = 1e-3;         // utility units
  int sca_max_iterations = 50;
  bool vacancy_swaps = false;
};

struct SweepConfig {
  std::vector<int> beams_per_satellite;  // L
  std::vector<int> subchannels;          // K
  std::vector<int> per_user_caps;        // K_thr
  std::vector<std::string> distributions;
  std::vector<Algorithm> algorithms{Algorithm::proposal, Algorithm::baseline1,
                                    Algorithm::baseline2};
};

struct Scenario {
  WalkerConfig walker;
  int serving_satellites = 2;   // M
  int beams_per_satellite = 7;  // L

  double area_latitude_deg = 41.7642;
  double area_longitude_deg = 86.6513;
  double area_radius = 250e3;     // m
  int candidate_count = 200;      // C
  double service_radius = 100e3;  // r0, m

  int user_count = 50;  // N
  UserLayout layout;

  int slot_count = 100;     // T
  double slot_length = 1.0; // s

  RadioConfig radio;
  AntennaModel antenna;
  AtmosphereModel atmosphere;
  double noise_temperature = 150.0;  // K

  AlgorithmConfig algorithm;
  SweepConfig sweep;
  std::vector<std::uint64_t> seeds{1};

  int beams() const { return serving_satellites * beams_per_satellite; }

  TargetArea area() const {
    return {{deg_to_rad(area_latitude_deg), deg_to_rad(area_longitude_deg), 0.0}, area_radius};
  }

  /// Every problem found, one entry each; empty when valid.
  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    auto need = [&](bool ok, const std::string& msg) {
      if (!ok) p.push_back(msg);
    };
    need(radio.beam_bandwidth > 0, "radio.bandwidth_mhz must be positive");
    need(radio.subchannel_count >= 1, "radio.subchannels must be >= 1");
    need(radio.per_user_cap >= 1, "radio.per_user_cap must be >= 1");
    if (radio.per_user_cap > radio.subchannel_count)
      p.push_back("radio.per_user_cap (" + std::to_string(radio.per_user_cap) +
                  ") exceeds radio.subchannels (" + std::to_string(radio.subchannel_count) + ")");
    need(radio.beam_power_cap > 0, "radio.beam_power_w must be positive");
    need(radio.satellite_power_cap > 0, "radio.satellite_power_w must be positive");
    need(radio.min_elevation >= 0 && radio.min_elevation < kPi / 2,
         "radio.min_elevation_deg must lie in [0, 90)");
    need(radio.min_sinr >= 0, "radio.min_sinr must be >= 0");
    need(radio.reference_power >= 0, "radio.reference_power_w must be >= 0");
    need(radio.fairness_alpha >= 0 && radio.fairness_alpha <= 1, "radio.alpha must lie in [0, 1]");
    need(radio.utility_floor > 0, "radio.utility_floor_bps must be positive");
    need(walker.plane_count >= 1, "constellation.planes must be >= 1");
    need(walker.sats_per_plane >= 1, "constellation.sats_per_plane must be >= 1");
    need(walker.phasing_factor >= 0 && walker.phasing_factor < std::max(walker.plane_count, 1),
         "constellation.phasing must lie in [0, planes)");
    need(walker.altitude > 0, "constellation.altitude_km must be positive");
    need(serving_satellites >= 1, "constellation.serving_satellites must be >= 1");
    need(beams_per_satellite >= 1, "constellation.beams_per_satellite must be >= 1");
    need(area_latitude_deg >= -90 && area_latitude_deg <= 90, "area.latitude_deg must lie in [-90, 90]");
    need(area_longitude_deg >= -180 && area_longitude_deg <= 180,
         "area.longitude_deg must lie in [-180, 180]");
    need(area_radius > 0, "area.radius_km must be positive");
    need(candidate_count >= 1, "area.candidates must be >= 1");
    need(service_radius > 0, "area.service_radius_km must be positive");
    need(user_count >= 0, "users.count must be >= 0");
    need(layout.hotspot_radius > 0, "users.hotspot_radius_km must be positive");
    need(layout.cluster_count >= 1, "users.clusters must be >= 1");
    need(slot_count >= 1, "constellation.slots must be >= 1");
    need(slot_length > 0, "constellation.slot_length_s must be positive");
    need(antenna.aperture_efficiency > 0 && antenna.aperture_efficiency <= 1,
         "radio.antenna_efficiency must lie in (0, 1]");
    need(antenna.aperture_diameter > 0, "radio.antenna_diameter_m must be positive");
    need(antenna.carrier_frequency > 0, "radio.frequency_ghz must be positive");
    need(noise_temperature >= 0, "radio.noise_temperature_k must be >= 0");
    need(algorithm.max_outer_iterations >= 1, "algorithm.max_outer_iterations must be >= 1");
    need(algorithm.outer_tolerance > 0, "algorithm.outer_tolerance must be positive");
    need(algorithm.swap_cap >= 0, "algorithm.swap_cap must be >= 0");
    need(algorithm.negotiation_cap >= 0, "algorithm.negotiation_cap must be >= 0");
    need(algorithm.interference_threshold >= 0, "algorithm.interference_threshold_w must be >= 0");
    need(algorithm.sca_threshold > 0, "algorithm.sca_threshold must be positive");
    need(algorithm.sca_max_iterations >= 1, "algorithm.sca_max_iterations must be >= 1");
    for (int v : sweep.beams_per_satellite) need(v >= 1, "sweep.beams_per_satellite entries must be >= 1");
    for (int v : sweep.subchannels) need(v >= 1, "sweep.subchannels entries must be >= 1");
    for (int v : sweep.per_user_caps) need(v >= 1, "sweep.per_user_caps entries must be >= 1");
    for (const auto& d : sweep.distributions)
      need(d == "uniform" || d == "dense" || d == "clustered",
           "sweep.distributions: unknown distribution '" + d + "'");
    need(!sweep.algorithms.empty(), "sweep.algorithms must not be empty");
    need(!seeds.empty(), "seeds must not be empty");
    return p;
  }

  void validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "invalid scenario:";
    for (const auto& s : p) msg += "\n  " + s;
    throw ScenarioError(msg);
  }
};

/// Positions, gains and discs for one seed. Throws ScenarioError when fewer
/// than M satellites stay visible for the whole period.
inline Network build_network(const Scenario& s, std::uint64_t seed) {
  s.validate();
  const TargetArea area = s.area();
  ConstellationState st = propagate_walker(s.walker, s.slot_count, s.slot_length);
  st.serving_sats =
      select_serving_satellites(st, area, s.walker, s.radio.min_elevation, s.serving_satellites);
  auto cand = generate_candidates(area, s.candidate_count, s.walker.earth_radius);
  auto users = generate_users(area, s.user_count, s.layout, seed, s.walker.earth_radius);
  ChannelTensor ch = build_channel_tensor(
      st, cand, users, s.antenna, s.atmosphere,
      {s.walker.earth_radius, s.walker.altitude, s.radio.min_elevation});
  ch.noise = noise_power(s.noise_temperature, s.radio.subchannel_bandwidth());

  Network net;
  net.radio = s.radio;
  net.channel = std::move(ch);
  for (int m = 0; m < s.serving_satellites; ++m)
    for (int l = 0; l < s.beams_per_satellite; ++l) {
      net.beam_group.push_back(m);
      net.beam_satellite.push_back(m);
    }
  net.satellite_count = s.serving_satellites;
  const int N = static_cast<int>(users.size());
  net.service_disc.assign(cand.size() * users.size(), 0);
  for (std::size_t c = 0; c < cand.size(); ++c)
    for (int n = 0; n < N; ++n) {
      const double ang = std::acos(std::clamp(
          cand[c].dot(users[n]) / (cand[c].norm() * users[n].norm()), -1.0, 1.0));
      net.service_disc[c * N + n] = ang * s.walker.earth_radius <= s.service_radius;
    }
  net.candidate_positions = std::move(cand);
  net.user_positions = std::move(users);
  return net;
}

}  // namespace leobeam
