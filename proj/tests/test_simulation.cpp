#include <cmath>

#include <gtest/gtest.h>

#include "dsie/simulation.hpp"
#include "test_support.hpp"

namespace dsie {
namespace {

Scenario flat_chain_scenario(const NetworkTopology& t, double duration) {
  Scenario s;
  s.start_time_s = 0.0;
  s.duration_s = duration;
  s.dt_s = 0.01;
  for (const Bus& b : t.buses)
    s.profiles[b.id] = {{0.0, Complex(13200.0 - 20.0 * b.id, -5.0 * b.id), Complex(0, 0)}};
  return s;
}

TEST(Scenario, PiecewiseProfilesAndEvents) {
  const NetworkTopology t = testing::chain(1);
  Scenario s = flat_chain_scenario(t, 1.0);
  s.profiles[1].push_back({0.5, Complex(13000, 0), Complex(100, -10)});
  s.events.push_back({0.3, {2}, {Complex(12000, 0)}});
  s.events.push_back({0.3, {1}, {Complex(12500, 0)}});
  EXPECT_NO_THROW(s.validate(t));
  EXPECT_EQ(s.num_steps(), 100);
  EXPECT_EQ(s.voltage(2, 0.29), Complex(13160, -10));
  EXPECT_EQ(s.voltage(2, 0.3), Complex(12000, 0));
  EXPECT_EQ(s.voltage(2, 0.9), Complex(12000, 0));
  EXPECT_EQ(s.voltage(1, 0.4), Complex(12500, 0));
  // A later segment overrides an earlier event.
  EXPECT_NEAR(std::abs(s.voltage(1, 0.7) - Complex(13020, -2)), 0.0, 1e-9);
  EXPECT_EQ(s.event_steps(), std::vector<int>{30});
}

TEST(Scenario, ValidationCatchesBadInput) {
  const NetworkTopology t = testing::chain(1);
  Scenario s = flat_chain_scenario(t, 1.0);
  s.dt_s = 0.0;
  EXPECT_THROW(s.validate(t), ConfigError);
  s = flat_chain_scenario(t, 1.005);
  EXPECT_THROW(s.validate(t), ConfigError);
  s = flat_chain_scenario(t, 1.0);
  s.profiles.erase(2);
  EXPECT_THROW(s.validate(t), ConfigError);
  s = flat_chain_scenario(t, 1.0);
  s.events.push_back({0.305, {1}, {Complex(1, 0)}});
  EXPECT_THROW(s.validate(t), ConfigError);
  s = flat_chain_scenario(t, 1.0);
  s.profiles[9] = s.profiles[1];
  EXPECT_THROW(s.validate(t), ConfigError);
}

TEST(Truth, NoiselessTrajectoryFollowsRecursionFromSteadyState) {
  const NetworkTopology t = testing::chain(2);
  const DiscreteModel m = assemble_model(t, full_layout(t), NoiseSpec{}, PerUnitBases{}, 0.01);
  Scenario s = flat_chain_scenario(t, 0.2);
  s.events.push_back({0.1, {3}, {Complex(12800, -30)}});
  const TruthTrajectory truth = simulate_truth(t, m, s, std::nullopt);
  ASSERT_EQ(truth.num_samples(), 21);
  EXPECT_TRUE(truth.process_noise.empty());
  // Steady state: i = (v_from - v_to) / Z.
  for (int k = 0; k < 2; ++k) {
    const Complex i = (s.voltage(k + 1, 0.0) - s.voltage(k + 2, 0.0)) / t.impedance(k);
    EXPECT_NEAR(truth.x[0](2 * k), i.real(), 1e-9 * std::abs(i));
    EXPECT_NEAR(truth.x[0](2 * k + 1), i.imag(), 1e-9 * std::abs(i));
  }
  for (int k = 1; k <= 20; ++k)
    EXPECT_LT((truth.x[k] - (m.a * truth.x[k - 1] + m.b * truth.u[k - 1])).norm(),
              1e-9 * truth.x[k].norm());
  EXPECT_NEAR(truth.u[10](4), 12800.0, 1e-12);
  EXPECT_NEAR(truth.time_s[10], 0.1, 1e-12);
}

TEST(Truth, ProcessNoiseHasCovarianceQ) {
  const NetworkTopology t = testing::chain(1);
  NoiseSpec noise;
  noise.seed = 42;
  const DiscreteModel m = assemble_model(t, full_layout(t), noise, PerUnitBases{}, 0.01);
  const TruthTrajectory truth = simulate_truth(t, m, flat_chain_scenario(t, 200.0), noise);
  ASSERT_EQ(truth.process_noise.size(), 20000u);
  Mat cov = Mat::Zero(2, 2);
  for (const Vec& w : truth.process_noise) cov += w * w.transpose();
  cov /= static_cast<double>(truth.process_noise.size());
  const double q = m.q(0, 0);
  // Standard error of a variance estimate is q sqrt(2/N), about 1%.
  EXPECT_NEAR(cov(0, 0), q, 0.05 * q);
  EXPECT_NEAR(cov(1, 1), q, 0.05 * q);
  EXPECT_NEAR(cov(0, 1), 0.0, 0.05 * q);
}

TEST(Measurements, SameSeedSameStream) {
  const NetworkTopology t = testing::chain(2);
  const DiscreteModel m = assemble_model(t, full_layout(t), NoiseSpec{}, PerUnitBases{}, 0.01);
  const TruthTrajectory truth = simulate_truth(t, m, flat_chain_scenario(t, 0.1), std::nullopt);
  NoiseSpec noise;
  noise.seed = 7;
  const auto a = generate_measurements(truth, t, full_layout(t), noise, PerUnitBases{});
  const auto b = generate_measurements(truth, t, full_layout(t), noise, PerUnitBases{});
  noise.seed = 8;
  const auto c = generate_measurements(truth, t, full_layout(t), noise, PerUnitBases{});
  ASSERT_EQ(a.size(), 11u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].z_x, b[k].z_x);
    EXPECT_EQ(a[k].z_u, b[k].z_u);
    EXPECT_NE(a[k].z_u, c[k].z_u);
    EXPECT_EQ(a[k].k, static_cast<int>(k));
  }
}

TEST(Measurements, ZeroVarianceIsExactAndNoiseMatchesVariance) {
  const NetworkTopology t = testing::chain(1);
  const DiscreteModel m = assemble_model(t, full_layout(t), NoiseSpec{}, PerUnitBases{}, 0.01);
  const TruthTrajectory truth = simulate_truth(t, m, flat_chain_scenario(t, 50.0), std::nullopt);
  NoiseSpec quiet;
  quiet.sigma2_u = quiet.sigma2_x = 0.0;
  const auto exact = generate_measurements(truth, t, full_layout(t), quiet, PerUnitBases{});
  EXPECT_EQ(exact[3].z_x, truth.x[3]);
  EXPECT_EQ(exact[3].z_u, truth.u[3]);

  const PerUnitBases bases;
  const auto noisy = generate_measurements(truth, t, full_layout(t), NoiseSpec{}, bases);
  double su = 0.0, sx = 0.0;
  for (std::size_t k = 0; k < noisy.size(); ++k) {
    su += (noisy[k].z_u - truth.u[k]).squaredNorm() / 4.0;
    sx += (noisy[k].z_x - truth.x[k]).squaredNorm() / 2.0;
  }
  su /= noisy.size();
  sx /= noisy.size();
  const double want_u = 5e-4 * bases.v_base * bases.v_base;
  const double want_x = 5e-4 * bases.i_base() * bases.i_base();
  EXPECT_NEAR(su, want_u, 0.05 * want_u);
  EXPECT_NEAR(sx, want_x, 0.05 * want_x);
}

TEST(Projector, PicksRowsByName) {
  const Preset p = potsdam_preset();
  const LocalArea area = restrict_network(p.topology, p.layout, p.areas[1].branches,
                                          p.areas[1].buses, p.noise, p.bases, 0.01);
  const FrameProjector proj(p.topology, p.layout, area.topology, area.layout);
  MeasurementFrame f{3, Vec::LinSpaced(20, 0, 19), Vec::LinSpaced(10, 100, 109)};
  const MeasurementFrame g = proj(f);
  EXPECT_EQ(g.k, 3);
  ASSERT_EQ(g.z_x.size(), 6);  // 2-3, 3-4, 13-2
  EXPECT_EQ(g.z_x(0), 2.0);    // 2-3 is the second metered branch
  EXPECT_EQ(g.z_x(5), 19.0);   // 13-2 is the last
  ASSERT_EQ(g.z_u.size(), 4);  // buses 3 and 4
  EXPECT_EQ(g.z_u(0), 102.0);
  EXPECT_EQ(g.z_u(3), 105.0);
  EXPECT_THROW(proj(MeasurementFrame{0, Vec::Zero(4), Vec::Zero(10)}), DimensionError);
  EXPECT_THROW(FrameProjector(area.topology, area.layout, p.topology, p.layout), TopologyError);
}

TEST(Projector, BusAndBranchSelections) {
  const Preset p = potsdam_preset();
  const LocalArea area = restrict_network(p.topology, p.layout, p.areas[3].branches,
                                          p.areas[3].buses, p.noise, p.bases, 0.01);
  const Mat pb = bus_projection(p.topology, area.topology);
  const Vec u = Vec::LinSpaced(26, 0, 25);
  const Vec sel = pb * u;
  for (int i = 0; i < area.topology.num_buses(); ++i)
    EXPECT_EQ(sel(2 * i), 2.0 * p.topology.bus_index(area.topology.buses[i].id));
  const Mat pk = branch_projection(p.topology, area.topology);
  EXPECT_EQ(pk.rows(), 8);
  EXPECT_EQ(pk.cols(), 26);
}

TEST(Cable, ImpedancePerLength) {
  const Branch b = cable_branch("2-3", 2, 3, 4150, kCable500Mcm);
  EXPECT_NEAR(b.resistance_ohm, 0.12246, 1e-5);
  EXPECT_NEAR(2 * std::numbers::pi * 60 * b.inductance_h, 0.15146, 1e-5);
}

TEST(Potsdam, PresetShape) {
  const Preset p = potsdam_preset();
  EXPECT_EQ(p.topology.num_buses(), 13);
  EXPECT_EQ(p.topology.num_branches(), 13);
  EXPECT_EQ(p.layout.metered_branches.size(), 10u);
  EXPECT_EQ(p.layout.metered_buses.size(), 5u);
  EXPECT_EQ(p.areas.size(), 4u);
  EXPECT_EQ(p.scenario.num_steps(), 100);
  EXPECT_EQ(p.scenario.event_steps().size(), 10u);
  EXPECT_EQ(p.scenario.event_steps().front(), 5);
  ASSERT_TRUE(p.attack.has_value());
  EXPECT_EQ(p.attack->target_buses, (std::vector<int>{2, 3, 4, 13}));
  EXPECT_NO_THROW(p.scenario.validate(p.topology));
}

TEST(Potsdam, OperatingPointSatisfiesKirchhoff) {
  const Preset p = potsdam_preset();
  const CVec v = potsdam_operating_point(p.topology, p.loads, 1.0, Complex(13200, 0));
  EXPECT_EQ(v(p.topology.bus_index(1)), Complex(13200, 0));
  // Net branch current out of a plain load bus equals minus its load current.
  const IncidenceMatrix inc = build_incidence(p.topology);
  CVec out = CVec::Zero(13);
  for (int k = 0; k < 13; ++k) {
    const Complex i = (v(p.topology.bus_index(p.topology.branches[k].from)) -
                       v(p.topology.bus_index(p.topology.branches[k].to))) /
                      p.topology.impedance(k);
    for (int b = 0; b < 13; ++b) out(b) += static_cast<double>(inc.entries(k, b)) * i;
  }
  for (int id : {3, 5, 6}) {
    const LoadData& load = *std::find_if(p.loads.begin(), p.loads.end(),
                                         [id](const LoadData& l) { return l.bus == id; });
    const Complex want = -std::conj(Complex(load.p_kw, load.q_kvar) * 1e3 / 13.2e3);
    EXPECT_LT(std::abs(out(p.topology.bus_index(id)) - want), 1e-6 * std::abs(want));
  }
  // Voltages stay within a few percent of nominal.
  for (int i = 0; i < 13; ++i) EXPECT_NEAR(std::abs(v(i)) / 13.2e3, 1.0, 0.05);
}

TEST(Potsdam, EventStepsAreModest) {
  const Preset p = potsdam_preset();
  double worst = 0.0;
  for (int k : p.scenario.event_steps())
    for (const Bus& b : p.topology.buses) {
      const double t = p.scenario.time_of(k);
      const double step =
          std::abs(p.scenario.voltage(b.id, t) - p.scenario.voltage(b.id, t - p.scenario.dt_s));
      worst = std::max(worst, step / 13.2e3);
    }
  EXPECT_GT(worst, 0.01);
  EXPECT_LT(worst, 0.06);
}

}  // namespace
}  // namespace dsie
