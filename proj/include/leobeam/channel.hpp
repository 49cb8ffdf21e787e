#pragma once

// Link budget: antenna pattern, free-space and atmospheric loss, noise, and
// the per-satellite channel tensor.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "leobeam/geometry.hpp"

namespace leobeam {

inline constexpr double kLightSpeed = 299792458.0;
inline constexpr double kBoltzmann = 1.380649e-23;

namespace detail {

inline double bessel_series(int n, double x) {
  const long double h = 0.5L * x;
  const long double h2 = h * h;
  long double term = 1.0L;
  for (int i = 1; i <= n; ++i) term *= h / i;
  long double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= -h2 / (static_cast<long double>(k) * (k + n));
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum) + 1e-30L) break;
  }
  return static_cast<double>(sum);
}

// Hankel expansion, truncated at the smallest term.
inline double bessel_asymptotic(int n, double x) {
  const double mu = 4.0 * n * n;
  double p = 0.0, q = 0.0;
  double a = 1.0;  // a_k / x^k
  double last = INFINITY;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      const double odd = 2.0 * k - 1.0;
      a *= (mu - odd * odd) / (k * 8.0 * x);
    }
    if (std::fabs(a) > last) break;
    last = std::fabs(a);
    const int sign = ((k / 2) % 2 == 0) ? 1 : -1;
    if (k % 2 == 0)
      p += sign * a;
    else
      q += sign * a;
    if (last < 1e-17) break;
  }
  const double chi = x - (0.5 * n + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// J_1 or J_3 of the first kind for x >= 0.
inline double bessel_j(int order, double x) {
  if (order != 1 && order != 3) throw std::invalid_argument("bessel_j: only orders 1 and 3");
  if (x < 0.0) throw std::domain_error("bessel_j: x must be non-negative");
  return x <= 12.0 ? detail::bessel_series(order, x) : detail::bessel_asymptotic(order, x);
}

struct AntennaModel {
  double aperture_efficiency = 0.65;
  double aperture_diameter = 0.5;      // m
  double carrier_frequency = 20e9;     // Hz
  double light_speed = kLightSpeed;    // m/s
  double half_power_angle = 0.0;       // rad; 0 means derive from the aperture
  double rx_gain = std::pow(10.0, 3.97);

  double wavelength() const { return light_speed / carrier_frequency; }
  // 70 degrees times wavelength over diameter
  double derived_half_power_angle() const {
    return deg_to_rad(70.0) * wavelength() / aperture_diameter;
  }
  double effective_half_power_angle() const {
    return half_power_angle > 0.0 ? half_power_angle : derived_half_power_angle();
  }
};

struct AtmosphereModel {
  double rician_factor = 0.95;
  double cloud_attenuation = 0.1;
  double rain_attenuation = 0.058;
};

inline double peak_gain(const AntennaModel& a) {
  const double x = kPi * a.aperture_diameter * a.carrier_frequency / a.light_speed;
  return a.aperture_efficiency * x * x;
}

inline double tx_antenna_gain(const AntennaModel& a, double off_boresight) {
  const double g = peak_gain(a);
  const double mu = 2.07123 * std::sin(off_boresight) / std::sin(a.effective_half_power_angle());
  if (std::fabs(mu) < 1e-6) return g;
  const double m = std::fabs(mu);
  const double bracket = bessel_j(1, m) / (2.0 * m) + 36.0 * bessel_j(3, m) / (m * m * m);
  return g * bracket * bracket;
}

inline double atmospheric_loss(double d, double sat_height, const AtmosphereModel& atm) {
  return std::pow(10.0, d * (4.343 * atm.cloud_attenuation + atm.rain_attenuation) /
                            (10.0 * sat_height));
}

inline double free_space_gain(double d, double frequency, double light_speed = kLightSpeed) {
  const double x = light_speed / (4.0 * kPi * d * frequency);
  return x * x;
}

inline double path_gain(double d, const AntennaModel& a, const AtmosphereModel& atm,
                        double sat_height) {
  return free_space_gain(d, a.carrier_frequency, a.light_speed) /
         atmospheric_loss(d, sat_height, atm) * atm.rician_factor;
}

inline double noise_power(double noise_temperature, double subchannel_bandwidth) {
  return kBoltzmann * noise_temperature * subchannel_bandwidth;
}

/// Channel gains per (group, candidate, user, slot). A group is one serving
/// satellite; all beams of a satellite share its geometry and hence its
/// gains. No subchannel axis: gains do not depend on the subchannel.
struct ChannelTensor {
  int groups = 0;
  int candidates = 0;
  int users = 0;
  int slots = 0;
  std::vector<double> h;        // [((g*C + c)*N + n)*T + t]
  std::vector<char> elev_ok;    // [(g*N + n)*T + t]
  double noise = 0.0;           // W per subchannel

  ChannelTensor() = default;
  ChannelTensor(int g, int c, int n, int t)
      : groups(g), candidates(c), users(n), slots(t),
        h(static_cast<std::size_t>(g) * c * n * t, 0.0),
        elev_ok(static_cast<std::size_t>(g) * n * t, 1) {}

  std::size_t index(int g, int c, int n, int t) const {
    return ((static_cast<std::size_t>(g) * candidates + c) * users + n) * slots + t;
  }
  double& at(int g, int c, int n, int t) { return h[index(g, c, n, t)]; }
  double at(int g, int c, int n, int t) const { return h[index(g, c, n, t)]; }
  bool usable(int g, int n, int t) const {
    return elev_ok[(static_cast<std::size_t>(g) * users + n) * slots + t] != 0;
  }
  void set_usable(int g, int n, int t, bool ok) {
    elev_ok[(static_cast<std::size_t>(g) * users + n) * slots + t] = ok ? 1 : 0;
  }
};

struct LinkGeometry {
  double earth_radius = kEarthRadius;
  double sat_height = 780e3;
  double min_elevation = deg_to_rad(25.0);
};

inline ChannelTensor build_channel_tensor(const ConstellationState& state,
                                          const std::vector<EcefCoord>& candidates,
                                          const std::vector<EcefCoord>& users,
                                          const AntennaModel& antenna,
                                          const AtmosphereModel& atmos,
                                          const LinkGeometry& link) {
  const int G = static_cast<int>(state.serving_sats.size());
  const int C = static_cast<int>(candidates.size());
  const int N = static_cast<int>(users.size());
  const int T = state.slot_count;
  ChannelTensor out(G, C, N, T);
  for (int g = 0; g < G; ++g) {
    for (int t = 0; t < T; ++t) {
      const EcefCoord& sat = state.position(state.serving_sats[g], t);
      for (int n = 0; n < N; ++n) {
        const double d = distance(sat, users[n]);
        const double pg = path_gain(d, antenna, atmos, link.sat_height) * antenna.rx_gain;
        out.set_usable(g, n, t,
                       elevation_angle(sat, users[n], link.earth_radius, link.sat_height) >=
                           link.min_elevation);
        for (int c = 0; c < C; ++c)
          out.at(g, c, n, t) =
              tx_antenna_gain(antenna, off_boresight_angle(sat, candidates[c], users[n])) * pg;
      }
    }
  }
  return out;
}

}  // namespace leobeam
