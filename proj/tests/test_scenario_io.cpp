#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "desk.hpp"
#include "leobeam/scenario_io.hpp"

using namespace leobeam;

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("leobeam_io_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(LoadScenario, EmptyGivesDefaults) {
  const auto s = parse_scenario("");
  EXPECT_EQ(emit_scenario(s), emit_scenario(Scenario{}));
  EXPECT_EQ(s.user_count, 50);
  EXPECT_EQ(s.candidate_count, 200);
  EXPECT_EQ(s.slot_count, 100);
  EXPECT_EQ(s.serving_satellites, 2);
  EXPECT_EQ(s.radio.beam_bandwidth, 400e6);
  EXPECT_EQ(s.radio.subchannel_count, 20);
  EXPECT_EQ(s.radio.per_user_cap, 6);
}

TEST(LoadScenario, UnitsConverted) {
  const auto s = parse_scenario(R"(
constellation: {altitude_km: 550, inclination_deg: 90}
area: {radius_km: 100}
radio: {bandwidth_mhz: 250, frequency_ghz: 12, rx_gain_dbi: 30, min_elevation_deg: 30}
)");
  EXPECT_DOUBLE_EQ(s.walker.altitude, 550e3);
  EXPECT_DOUBLE_EQ(s.walker.inclination, kPi / 2);
  EXPECT_DOUBLE_EQ(s.area_radius, 100e3);
  EXPECT_DOUBLE_EQ(s.radio.beam_bandwidth, 250e6);
  EXPECT_DOUBLE_EQ(s.antenna.carrier_frequency, 12e9);
  EXPECT_DOUBLE_EQ(s.antenna.rx_gain, 1000.0);
  EXPECT_DOUBLE_EQ(s.radio.min_elevation, kPi / 6);
}

TEST(LoadScenario, CapAboveSubchannelsNamesBothKeys) {
  const auto e = error_of("radio:\n  subchannels: 20\n  per_user_cap: 25\n");
  EXPECT_NE(e.find("radio.per_user_cap"), std::string::npos) << e;
  EXPECT_NE(e.find("radio.subchannels"), std::string::npos) << e;
}

TEST(LoadScenario, UnknownKeysRejectedWithPosition) {
  const auto e = error_of("radio:\n  subchannels: 20\n  bandwith_mhz: 400\n");
  EXPECT_NE(e.find("unknown key 'radio.bandwith_mhz'"), std::string::npos) << e;
  EXPECT_NE(e.find("line 3, column 3"), std::string::npos) << e;
  EXPECT_NE(error_of("antenna: {gain: 1}\n").find("unknown section 'antenna'"), std::string::npos);
}

TEST(LoadScenario, EveryProblemListed) {
  const auto e = error_of(R"(
users: {count: many, distribution: ring}
radio: {alpha: 3, beam_power_w: -1}
sweep: {algorithms: [proposal, greedy]}
seeds: 4
)");
  for (const char* k : {"users.count", "users.distribution", "radio.alpha", "radio.beam_power_w",
                        "sweep.algorithms", "seeds"})
    EXPECT_NE(e.find(k), std::string::npos) << k << "\n" << e;
  EXPECT_NE(e.find("line 2"), std::string::npos) << e;
}

TEST(LoadScenario, ParseErrorHasLineAndColumn) {
  const auto e = error_of("radio:\n  subchannels: [1, 2\n");
  EXPECT_NE(e.find("parse error"), std::string::npos) << e;
  EXPECT_NE(e.find("line "), std::string::npos) << e;
  EXPECT_NE(e.find("column "), std::string::npos) << e;
}

TEST(LoadScenario, TypeErrors) {
  EXPECT_NE(error_of("radio: {subchannels: 2.5}").find("radio.subchannels: expected an integer"),
            std::string::npos);
  EXPECT_NE(error_of("algorithm: {vacancy_swaps: maybe}").find("expected true or false"),
            std::string::npos);
  EXPECT_NE(error_of("sweep: {subchannels: 4}").find("expected a list"), std::string::npos);
  EXPECT_NE(error_of("- 1\n- 2\n").find("top level must be a mapping"), std::string::npos);
}

TEST(LoadScenario, MissingFileIsScenarioError) {
  EXPECT_THROW(load_scenario("/nonexistent/leobeam.yaml"), ScenarioError);
}

TEST(EmitScenario, RoundTripIsFixpoint) {
  Scenario s = desk::scenario(3);
  s.walker.inclination = 0.7853981633974483 + 1e-9;
  s.area_latitude_deg = 41.7642;
  s.antenna.rx_gain = detail::dbi_in(33.92);  // as loaded from a file
  s.radio.min_elevation = 0.41;
  s.walker.altitude = 780123.456;
  s.sweep.beams_per_satellite = {1, 3};
  s.sweep.distributions = {"dense", "clustered"};
  s.sweep.algorithms = {Algorithm::baseline2};
  s.seeds = {3, 18446744073709551615ull};
  const auto text = emit_scenario(s);
  const auto back = parse_scenario(text);
  EXPECT_EQ(emit_scenario(back), text);
  EXPECT_EQ(back.walker.inclination, s.walker.inclination);
  EXPECT_EQ(back.antenna.rx_gain, s.antenna.rx_gain);
  EXPECT_EQ(back.radio.min_elevation, s.radio.min_elevation);
  EXPECT_EQ(back.walker.altitude, s.walker.altitude);
  EXPECT_EQ(back.seeds, s.seeds);
  EXPECT_EQ(back.sweep.algorithms, s.sweep.algorithms);
}

TEST(EmitScenario, SampleFilesRoundTrip) {
  for (const char* f : {"full.yaml", "desk.yaml"}) {
    const auto s = load_scenario(std::filesystem::path(LEOBEAM_SCENARIO_DIR) / f);
    const auto text = emit_scenario(s);
    EXPECT_EQ(emit_scenario(parse_scenario(text)), text) << f;
  }
  const auto p = load_scenario(std::filesystem::path(LEOBEAM_SCENARIO_DIR) / "full.yaml");
  EXPECT_EQ(p.user_count, 50);
  EXPECT_EQ(p.candidate_count, 200);
  EXPECT_EQ(p.slot_count, 100);
  EXPECT_EQ(p.serving_satellites, 2);
  EXPECT_EQ(p.radio.beam_bandwidth, 400e6);
}

TEST(EmitScenario, HashFollowsContent) {
  Scenario a, b;
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
  EXPECT_EQ(scenario_hash(a).size(), 16u);
  b.user_count = 51;
  EXPECT_NE(scenario_hash(a), scenario_hash(b));
  EXPECT_EQ(fnv1a(""), 14695981039346656037ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Results, EmptySweepIsHeaderOnly) {
  EXPECT_EQ(metrics_csv({}, "h"), std::string(kMetricsColumns) + "\n");
}

TEST(Results, RowsCarryHashAndBuild) {
  auto s = desk::scenario(1, 8, 2, 6);
  s.seeds = {1, 2};
  s.sweep.algorithms = {Algorithm::proposal, Algorithm::baseline2};
  const auto rows = run_sweep(s);
  ASSERT_EQ(rows.size(), 4u);
  const auto hash = scenario_hash(s);
  const auto csv = metrics_csv(rows, hash, "b1d");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    EXPECT_EQ(line.substr(line.size() - hash.size() - 4), hash + ",b1d");
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 14);
  }
  EXPECT_EQ(n, 4);
  auto bad = rows;
  bad[0].metrics.sum_rate = NAN;
  EXPECT_THROW(metrics_csv(bad, hash), std::domain_error);
}

TEST(Results, EmissionIsByteIdentical) {
  auto s = desk::scenario(2, 8, 2, 6);
  const auto d1 = scratch_dir("a"), d2 = scratch_dir("b");
  emit_results(s, run_sweep(s), d1);
  emit_results(s, run_sweep(s), d2);
  for (const char* f : {"scenario.yaml", "metrics.csv", "run_log.jsonl"}) {
    EXPECT_FALSE(read_all(d1 / f).empty()) << f;
    EXPECT_EQ(read_all(d1 / f), read_all(d2 / f)) << f;
  }
  const auto log = read_all(d1 / "run_log.jsonl");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);
  const auto j = nlohmann::json::parse(log.substr(0, log.find('\n')));
  EXPECT_EQ(j["algorithm"], "proposal");
  EXPECT_FALSE(j["iterations"].empty());
  EXPECT_EQ(parse_scenario(read_all(d1 / "scenario.yaml")).candidate_count, 8);
}

TEST(Results, UnwritableDirectoryNamesPath) {
  try {
    emit_results(Scenario{}, {}, "/proc/leobeam_nope");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/proc/leobeam_nope"), std::string::npos);
  }
}

TEST(EmitScenario, RandomFilesReachFixpoint) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    auto num = [&](double lo, double hi) { return format_number(std::round(rng.uniform(lo, hi) * 1e4) / 1e4); };
    const std::string text =
        "constellation: {altitude_km: " + num(300, 2000) + ", inclination_deg: " + num(0, 90) +
        ", epoch_s: " + num(0, 5000) + "}\n"
        "area: {latitude_deg: " + num(-60, 60) + ", radius_km: " + num(50, 400) + "}\n"
        "radio: {bandwidth_mhz: " + num(1, 900) + ", min_elevation_deg: " + num(5, 60) +
        ", frequency_ghz: " + num(2, 40) + ", rx_gain_dbi: " + num(0, 50) +
        ", half_power_angle_deg: " + num(0, 5) + "}\n";
    const auto s = parse_scenario(text);
    const auto once = emit_scenario(s);
    EXPECT_EQ(emit_scenario(parse_scenario(once)), once) << text;
    EXPECT_EQ(scenario_hash(parse_scenario(once)), scenario_hash(s));
  }
}
