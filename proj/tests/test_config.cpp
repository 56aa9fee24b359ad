#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "dsie/config.hpp"

namespace dsie {
namespace {

const char* kSmall = R"({
  "schema": "dsie-config v1",
  "buses": [{"id": 1}, {"id": 2}, {"id": 3}],
  "branches": [
    {"name": "a", "from": 1, "to": 2, "length_ft": 5280, "cable": "500MCM"},
    {"name": "b", "from": 2, "to": 3, "r_ohm": 0.2, "l_h": 0.001}
  ],
  "sensors": {"branches": ["a", "b"], "buses": [1, 3]},
  "areas": [{"name": "left", "branches": ["a"], "buses": [1, 2]},
            {"name": "right", "branches": ["b"], "buses": [2, 3]}],
  "noise": {"sigma2_u": 1e-3, "seed": 9},
  "scenario": {
    "start_time_s": 0.0, "duration_s": 0.2, "dt_s": 0.01,
    "profiles": {
      "1": [{"start_s": 0.0, "d": 13200, "q": 0}],
      "2": [{"start_s": 0.0, "d": 13100, "q": -50, "ramp_d": -10}],
      "3": [{"start_s": 0.0, "d": 13050, "q": -80}]
    },
    "events": [{"time_s": 0.1, "buses": [3], "d": [12900], "q": [-90]}]
  },
  "attack": {"targets": [2], "bias_d": [100], "bias_q": [5],
             "start_step": 5, "end_step": 10, "scope": "stealth"}
})";

TEST(Config, ParsesSmallProblem) {
  const Preset p = parse_config(kSmall);
  ASSERT_EQ(p.topology.num_buses(), 3);
  ASSERT_EQ(p.topology.num_branches(), 2);
  EXPECT_NEAR(p.topology.branches[0].resistance_ohm, 0.1558, 1e-12);
  EXPECT_NEAR(p.topology.branches[0].inductance_h * 2 * std::numbers::pi * 60, 0.1927, 1e-12);
  EXPECT_EQ(p.topology.branches[1].inductance_h, 0.001);
  EXPECT_EQ(p.layout.metered_buses, (std::vector<int>{0, 2}));
  ASSERT_EQ(p.areas.size(), 2u);
  EXPECT_EQ(p.areas[1].buses, (std::vector<int>{1, 2}));
  EXPECT_EQ(p.noise.sigma2_u, 1e-3);
  EXPECT_EQ(p.noise.sigma2_x, 5e-4);
  EXPECT_EQ(p.noise.seed, 9u);
  EXPECT_EQ(p.scenario.num_steps(), 20);
  EXPECT_NEAR(std::abs(p.scenario.voltage(2, 0.05) - Complex(13099.5, -50)), 0.0, 1e-9);
  EXPECT_EQ(p.scenario.voltage(3, 0.15), Complex(12900, -90));
  ASSERT_TRUE(p.attack.has_value());
  EXPECT_EQ(p.attack->bias[0], Complex(100, 5));
  EXPECT_EQ(p.attack->scope, AttackScope::kStealth);
  EXPECT_EQ(p.attack->end_step, 10);
}

TEST(Config, DumpRoundTrips) {
  const Preset p = parse_config(kSmall);
  const Preset q = parse_config(dump_config(p));
  ASSERT_EQ(q.topology.num_branches(), 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(q.topology.branches[k].resistance_ohm, p.topology.branches[k].resistance_ohm);
    EXPECT_EQ(q.topology.branches[k].inductance_h, p.topology.branches[k].inductance_h);
    EXPECT_EQ(q.topology.branches[k].name, p.topology.branches[k].name);
  }
  EXPECT_EQ(q.layout.metered_branches, p.layout.metered_branches);
  EXPECT_EQ(q.scenario.events.size(), 1u);
  EXPECT_EQ(q.scenario.voltage(2, 0.13), p.scenario.voltage(2, 0.13));
  EXPECT_EQ(q.attack->bias, p.attack->bias);
}

TEST(Config, PresetRoundTripsThroughDump) {
  const Preset p = builtin_preset("potsdam13");
  const Preset q = parse_config(dump_config(p));
  EXPECT_EQ(q.topology.num_branches(), 13);
  EXPECT_EQ(q.layout.metered_buses, p.layout.metered_buses);
  for (int k : p.scenario.event_steps())
    for (const Bus& b : p.topology.buses)
      EXPECT_EQ(q.scenario.voltage(b.id, p.scenario.time_of(k)),
                p.scenario.voltage(b.id, p.scenario.time_of(k)));
  EXPECT_THROW(builtin_preset("ieee14"), ConfigError);
}

TEST(Config, ShippedFileMatchesPreset) {
  const Preset shipped =
      load_config(std::filesystem::path(DSIE_SOURCE_DIR) / "configs" / "potsdam13.json");
  const Preset p = potsdam_preset();
  ASSERT_EQ(shipped.topology.num_branches(), p.topology.num_branches());
  for (int k = 0; k < p.topology.num_branches(); ++k) {
    const Branch& a = shipped.topology.branches[k];
    const Branch& b = p.topology.branches[k];
    EXPECT_EQ(a.name, b.name);
    EXPECT_EQ(a.from, b.from);
    EXPECT_NEAR(a.resistance_ohm, b.resistance_ohm, 1e-12);
    EXPECT_NEAR(a.inductance_h, b.inductance_h, 1e-15);
  }
  EXPECT_EQ(shipped.layout.metered_branches, p.layout.metered_branches);
  EXPECT_EQ(shipped.layout.metered_buses, p.layout.metered_buses);
  ASSERT_EQ(shipped.areas.size(), p.areas.size());
  ASSERT_EQ(shipped.scenario.events.size(), p.scenario.events.size());
  for (int k = 0; k <= p.scenario.num_steps(); ++k)
    for (const Bus& bus : p.topology.buses)
      EXPECT_LT(std::abs(shipped.scenario.voltage(bus.id, p.scenario.time_of(k)) -
                         p.scenario.voltage(bus.id, p.scenario.time_of(k))),
                1e-6);
  ASSERT_TRUE(shipped.attack.has_value());
  EXPECT_EQ(shipped.attack->target_buses, p.attack->target_buses);
}

TEST(Config, MalformedInputIsConfigError) {
  EXPECT_THROW(parse_config("not json"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema": "dsie-config v9"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"buses": [{"id": 1}]})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);

  std::string text = kSmall;
  text.replace(text.find("500MCM"), 6, "999KCM");
  EXPECT_THROW(parse_config(text), ConfigError);

  text = kSmall;
  text.replace(text.find("\"stealth\""), 9, "\"loud\"");
  EXPECT_THROW(parse_config(text), ConfigError);

  text = kSmall;
  text.replace(text.find("\"duration_s\": 0.2"), 17, "\"duration_s\": \"x\"");
  EXPECT_THROW(parse_config(text), ConfigError);
}

TEST(Config, TopologyProblemsSurface) {
  std::string text = kSmall;
  text.replace(text.find("\"to\": 3"), 7, "\"to\": 7");
  EXPECT_THROW(parse_config(text), Error);
  text = kSmall;
  text.replace(text.find("\"r_ohm\": 0.2"), 12, "\"r_ohm\": -1");
  EXPECT_THROW(parse_config(text), ParameterError);
}

}  // namespace
}  // namespace dsie
