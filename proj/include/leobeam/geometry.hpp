#pragma once

// Constellation propagation, Earth-fixed coordinates and the angle helpers
// that drive the link budget.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leobeam/rng.hpp"

namespace leobeam {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEarthGm = 3.986004418e14;  // m^3/s^2
inline constexpr double kEarthRadius = 6371e3;
inline constexpr double kEarthRotationRate = 7.2921159e-5;  // rad/s

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct GeodeticCoord {
  double latitude = 0.0;   // rad
  double longitude = 0.0;  // rad
  double altitude = 0.0;   // m above the mean sphere
};

struct EcefCoord {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const EcefCoord&, const EcefCoord&) = default;

  EcefCoord operator-(const EcefCoord& o) const { return {x - o.x, y - o.y, z - o.z}; }
  EcefCoord operator+(const EcefCoord& o) const { return {x + o.x, y + o.y, z + o.z}; }
  EcefCoord operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const EcefCoord& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

struct WalkerConfig {
  double altitude = 780e3;
  double inclination = deg_to_rad(45.0);
  int plane_count = 16;
  int sats_per_plane = 30;
  int phasing_factor = 1;
  double epoch = 0.0;  // s, offset added to every sample time
  double earth_radius = kEarthRadius;
  double earth_rotation_rate = kEarthRotationRate;

  int satellite_count() const { return plane_count * sats_per_plane; }
  double orbit_radius() const { return earth_radius + altitude; }
  double mean_motion() const { return std::sqrt(kEarthGm / std::pow(orbit_radius(), 3)); }
  double orbital_period() const { return 2.0 * kPi / mean_motion(); }

  void validate() const {
    if (plane_count < 1 || sats_per_plane < 1)
      throw ConfigError("walker: plane_count and sats_per_plane must be >= 1");
    if (phasing_factor < 0 || phasing_factor >= plane_count)
      throw ConfigError("walker: phasing_factor must lie in [0, plane_count)");
    if (!(altitude > 0.0) || !(earth_radius > 0.0))
      throw ConfigError("walker: altitude and earth_radius must be positive");
  }
};

struct TargetArea {
  GeodeticCoord center;
  double radius = 250e3;  // m, measured along the surface
};

/// Per-slot satellite positions plus the satellites chosen to serve the area.
struct ConstellationState {
  int satellite_count = 0;
  int slot_count = 0;
  std::vector<EcefCoord> positions;  // [sat * slot_count + slot]
  std::vector<int> serving_sats;

  const EcefCoord& position(int sat, int slot) const {
    return positions[static_cast<std::size_t>(sat) * slot_count + slot];
  }
};

inline EcefCoord geodetic_to_ecef(const GeodeticCoord& g, double earth_radius) {
  const double r = earth_radius + g.altitude;
  return {r * std::cos(g.latitude) * std::cos(g.longitude),
          r * std::cos(g.latitude) * std::sin(g.longitude), r * std::sin(g.latitude)};
}

inline double distance(const EcefCoord& a, const EcefCoord& b) { return (a - b).norm(); }

/// Earth-centred inertial position of satellite `sat` at absolute time `time`.
inline EcefCoord walker_inertial_position(const WalkerConfig& cfg, int sat, double time) {
  const int plane = sat / cfg.sats_per_plane;
  const int slot_in_plane = sat % cfg.sats_per_plane;
  const double total = static_cast<double>(cfg.satellite_count());
  const double raan = 2.0 * kPi * plane / cfg.plane_count;
  const double phase = 2.0 * kPi * slot_in_plane / cfg.sats_per_plane +
                       2.0 * kPi * cfg.phasing_factor * plane / total;
  const double u = phase + cfg.mean_motion() * time;
  const double r = cfg.orbit_radius();
  const double ci = std::cos(cfg.inclination), si = std::sin(cfg.inclination);
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(raan), so = std::sin(raan);
  return {r * (cu * co - su * ci * so), r * (cu * so + su * ci * co), r * su * si};
}

inline EcefCoord inertial_to_ecef(const EcefCoord& p, double time, double rotation_rate) {
  const double th = rotation_rate * time;
  const double c = std::cos(th), s = std::sin(th);
  return {c * p.x + s * p.y, -s * p.x + c * p.y, p.z};
}

/// Circular-orbit positions sampled at slot midpoints, in the Earth-fixed frame.
inline ConstellationState propagate_walker(const WalkerConfig& cfg, int slot_count,
                                           double slot_length) {
  cfg.validate();
  if (slot_count < 1) throw ConfigError("propagate_walker: slot_count must be >= 1");
  ConstellationState state;
  state.satellite_count = cfg.satellite_count();
  state.slot_count = slot_count;
  state.positions.resize(static_cast<std::size_t>(state.satellite_count) * slot_count);
  for (int s = 0; s < state.satellite_count; ++s) {
    for (int t = 0; t < slot_count; ++t) {
      const double time = cfg.epoch + (t + 0.5) * slot_length;
      state.positions[static_cast<std::size_t>(s) * slot_count + t] =
          inertial_to_ecef(walker_inertial_position(cfg, s, time), time, cfg.earth_rotation_rate);
    }
  }
  return state;
}

/// Angle at the satellite between the beam axis (towards `beam_center`) and
/// the direction of `user`, from the three pairwise distances.
inline double off_boresight_angle(const EcefCoord& sat, const EcefCoord& beam_center,
                                  const EcefCoord& user) {
  const double d_sat_user = distance(sat, user);
  const double d_sat_center = distance(sat, beam_center);
  if (d_sat_user == 0.0 || d_sat_center == 0.0)
    throw GeometryError("off_boresight_angle: satellite coincides with a ground point");
  const double d_center_user = distance(beam_center, user);
  const double q = (d_sat_user * d_sat_user + d_sat_center * d_sat_center -
                    d_center_user * d_center_user) /
                   (2.0 * d_sat_user * d_sat_center);
  return std::acos(std::clamp(q, -1.0, 1.0));
}

/// Elevation of a satellite at height `sat_height` above a user on the sphere.
inline double elevation_angle(const EcefCoord& sat, const EcefCoord& user, double earth_radius,
                              double sat_height) {
  const double d = distance(sat, user);
  if (d == 0.0) throw GeometryError("elevation_angle: zero slant range");
  const double rs = earth_radius + sat_height;
  const double q = (d * d + earth_radius * earth_radius - rs * rs) / (2.0 * d * earth_radius);
  return std::acos(std::clamp(q, -1.0, 1.0)) - kPi / 2.0;
}

/// The `count` satellites with the largest worst-case elevation over all
/// slots, among those that never drop below `min_elevation`.
inline std::vector<int> select_serving_satellites(const ConstellationState& state,
                                                  const TargetArea& area,
                                                  const WalkerConfig& cfg, double min_elevation,
                                                  int count) {
  const EcefCoord center = geodetic_to_ecef(area.center, cfg.earth_radius);
  struct Cand {
    int sat;
    double worst;
  };
  std::vector<Cand> qualified;
  for (int s = 0; s < state.satellite_count; ++s) {
    double worst = kPi;
    for (int t = 0; t < state.slot_count; ++t)
      worst = std::min(worst, elevation_angle(state.position(s, t), center, cfg.earth_radius,
                                              cfg.altitude));
    if (worst >= min_elevation) qualified.push_back({s, worst});
  }
  if (static_cast<int>(qualified.size()) < count)
    throw ScenarioError("select_serving_satellites: only " + std::to_string(qualified.size()) +
                        " satellites stay above the minimum elevation, " +
                        std::to_string(count) + " required");
  std::stable_sort(qualified.begin(), qualified.end(),
                   [](const Cand& a, const Cand& b) { return a.worst > b.worst; });
  std::vector<int> out;
  for (int i = 0; i < count; ++i) out.push_back(qualified[i].sat);
  return out;
}

/// Point reached from `origin` by travelling `arc` metres along bearing
/// `bearing` (radians from north) on the sphere.
inline GeodeticCoord destination_point(const GeodeticCoord& origin, double bearing, double arc,
                                       double earth_radius) {
  const double delta = arc / earth_radius;
  const double sl = std::sin(origin.latitude), cl = std::cos(origin.latitude);
  const double lat = std::asin(std::clamp(
      sl * std::cos(delta) + cl * std::sin(delta) * std::cos(bearing), -1.0, 1.0));
  double lon = origin.longitude + std::atan2(std::sin(bearing) * std::sin(delta) * cl,
                                             std::cos(delta) - sl * std::sin(lat));
  lon = std::remainder(lon, 2.0 * kPi);
  if (lon >= kPi) lon -= 2.0 * kPi;
  return {lat, lon, 0.0};
}

/// Sunflower lattice over the service disc; index 0 is the area centre.
inline std::vector<EcefCoord> generate_candidates(const TargetArea& area, int count,
                                                  double earth_radius) {
  if (count < 1) throw ConfigError("generate_candidates: count must be >= 1");
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<EcefCoord> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double r = area.radius * std::sqrt(static_cast<double>(i) / count);
    out.push_back(
        geodetic_to_ecef(destination_point(area.center, golden * i, r, earth_radius), earth_radius));
  }
  return out;
}

enum class UserDistribution { uniform, dense, clustered };

inline UserDistribution parse_distribution(std::string_view name) {
  if (name == "uniform") return UserDistribution::uniform;
  if (name == "dense") return UserDistribution::dense;
  if (name == "clustered") return UserDistribution::clustered;
  throw ConfigError("unknown user distribution '" + std::string(name) +
                    "' (expected uniform, dense or clustered)");
}

inline std::string_view to_string(UserDistribution d) {
  switch (d) {
    case UserDistribution::uniform: return "uniform";
    case UserDistribution::dense: return "dense";
    case UserDistribution::clustered: return "clustered";
  }
  return "uniform";
}

struct UserLayout {
  UserDistribution distribution = UserDistribution::uniform;
  double hotspot_radius = 50e3;  // dense and clustered layouts
  int cluster_count = 5;
};

namespace detail {

inline GeodeticCoord sample_disc(Rng& rng, const GeodeticCoord& center, double radius,
                                 double earth_radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double bearing = 2.0 * kPi * rng.uniform();
  return destination_point(center, bearing, r, earth_radius);
}

}  // namespace detail

/// User positions for one of the supported layouts. Hot spots are kept
/// inside the area and, for clusters, at least two hot-spot radii apart.
inline std::vector<EcefCoord> generate_users(const TargetArea& area, int count,
                                             const UserLayout& layout, std::uint64_t seed,
                                             double earth_radius,
                                             std::vector<GeodeticCoord>* hotspots = nullptr) {
  if (count < 0) throw ConfigError("generate_users: count must be >= 0");
  Rng rng(seed);
  std::vector<EcefCoord> out;
  out.reserve(count);
  auto emit = [&](const GeodeticCoord& g) { out.push_back(geodetic_to_ecef(g, earth_radius)); };
  const double inner = std::max(0.0, area.radius - layout.hotspot_radius);
  switch (layout.distribution) {
    case UserDistribution::uniform:
      for (int i = 0; i < count; ++i)
        emit(detail::sample_disc(rng, area.center, area.radius, earth_radius));
      break;
    case UserDistribution::dense: {
      const GeodeticCoord spot = detail::sample_disc(rng, area.center, inner, earth_radius);
      if (hotspots) hotspots->push_back(spot);
      for (int i = 0; i < count; ++i)
        emit(detail::sample_disc(rng, spot, layout.hotspot_radius, earth_radius));
      break;
    }
    case UserDistribution::clustered: {
      if (layout.cluster_count < 1) throw ConfigError("generate_users: cluster_count must be >= 1");
      std::vector<GeodeticCoord> spots;
      std::vector<EcefCoord> spot_ecef;
      const double min_gap = 2.0 * layout.hotspot_radius;
      for (int attempt = 0; static_cast<int>(spots.size()) < layout.cluster_count; ++attempt) {
        if (attempt > 100000)
          throw ConfigError("generate_users: cannot place separated clusters in the area");
        const GeodeticCoord s = detail::sample_disc(rng, area.center, inner, earth_radius);
        const EcefCoord e = geodetic_to_ecef(s, earth_radius);
        bool ok = true;
        for (const auto& o : spot_ecef) ok = ok && distance(o, e) > min_gap;
        if (!ok) continue;
        spots.push_back(s);
        spot_ecef.push_back(e);
      }
      if (hotspots) *hotspots = spots;
      for (int i = 0; i < count; ++i)
        emit(detail::sample_disc(rng, spots[i % layout.cluster_count], layout.hotspot_radius,
                                 earth_radius));
      break;
    }
  }
  return out;
}

}  // namespace leobeam
