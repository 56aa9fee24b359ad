#pragma once

// Ground-truth trajectories and PMU measurement streams.
//
// Bus voltages are scripted, piecewise-constant-or-ramp signals held over
// each sample interval. Branch currents follow the exact discrete recursion
// of the network model.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsie/detection.hpp"
#include "dsie/estimation.hpp"
#include "dsie/network.hpp"

namespace dsie {

struct VoltageSegment {
  double start_s = 0.0;
  Complex value;        // V
  Complex ramp_per_s;   // V/s, zero for a flat segment
};

struct VoltageEvent {
  double time_s = 0.0;
  std::vector<int> buses;  // bus ids
  std::vector<Complex> values;
};

struct Scenario {
  double start_time_s = 0.0;
  double duration_s = 1.0;
  double dt_s = 0.01;
  std::map<int, std::vector<VoltageSegment>> profiles;  // bus id -> segments by start time
  std::vector<VoltageEvent> events;

  int num_steps() const;  // samples are k = 0 .. num_steps()
  double time_of(int k) const { return start_time_s + k * dt_s; }
  Complex voltage(int bus_id, double t) const;
  std::vector<int> event_steps() const;  // ascending, duplicates removed
  void validate(const NetworkTopology& topology) const;
};

struct TruthTrajectory {
  std::vector<double> time_s;
  std::vector<Vec> x;  // branch currents (A)
  std::vector<Vec> u;  // bus voltages (V)
  std::vector<Vec> process_noise;  // w_k-1 added to reach x_k; empty when noiseless

  int num_samples() const { return static_cast<int>(x.size()); }
};

// x_0 is the sinusoidal steady state (v_from - v_to) / (R + jwL) of the
// initial voltages. With `process_noise`, w ~ N(0, Q) is drawn from a stream
// seeded by its seed.
TruthTrajectory simulate_truth(const NetworkTopology& topology, const DiscreteModel& model,
                               const Scenario& scenario,
                               const std::optional<NoiseSpec>& process_noise);

// z_x = C x + e_x, z_u = D u + e_u in SI, with variances converted from
// per-unit through `bases`. Zero variances give noiseless frames. The same
// seed always reproduces the same stream.
std::vector<MeasurementFrame> generate_measurements(const TruthTrajectory& truth,
                                                    const NetworkTopology& topology,
                                                    const MeasurementLayout& layout,
                                                    const NoiseSpec& noise,
                                                    const PerUnitBases& bases);

// Re-orders frames recorded under one layout into the row order of another
// (e.g. a single area), matching sensors by branch name and bus id.
class FrameProjector {
 public:
  FrameProjector(const NetworkTopology& source_topology, const MeasurementLayout& source_layout,
                 const NetworkTopology& target_topology, const MeasurementLayout& target_layout);

  MeasurementFrame operator()(const MeasurementFrame& frame) const;
  std::vector<MeasurementFrame> project(const std::vector<MeasurementFrame>& frames) const;

 private:
  Mat select_x_;
  Mat select_u_;
};

// Real-stacked selection of the target network's buses / branches from the
// source network's vectors.
Mat bus_projection(const NetworkTopology& source, const NetworkTopology& target);
Mat branch_projection(const NetworkTopology& source, const NetworkTopology& target);

// ---------------------------------------------------------------------------
// Potsdam 13-bus microgrid

struct LoadData {
  int bus = 0;
  double p_kw = 0.0;
  double q_kvar = 0.0;
};

struct GeneratorData {
  int bus = 0;
  double r_ohm = 0.0;
  double l_mh = 0.0;
};

struct CableType {
  std::string name;
  double r_ohm_per_mi = 0.0;
  double x_ohm_per_mi = 0.0;  // at 60 Hz
};

inline const CableType kCable500Mcm{"500MCM", 0.1558, 0.1927};

// R = len * r, L = len * x / (2 pi 60). Lengths in feet.
Branch cable_branch(std::string name, int from, int to, double length_ft, const CableType& cable);

struct Preset {
  NetworkTopology topology;
  MeasurementLayout layout;
  std::vector<AreaSpec> areas;
  Scenario scenario;
  PerUnitBases bases;
  NoiseSpec noise;
  std::optional<AttackSpec> attack;
  std::vector<LoadData> loads;
  std::vector<GeneratorData> generators;
};

// 13 buses, 13 branches of 500 MCM cable, four areas:
//   area 1: 1-2, 1-12, 11-12           area 2: 2-3, 3-4, 13-2
//   area 3: 4-5, 5-6, 6-7 (no interior sensors, unobservable)
//   area 4: 7-9, 8-9, 9-10, 10-11
// Scenario: 0.75 s to 1.75 s at 100 Hz with load changes every 0.1 s.
Preset potsdam_preset();

// Two areas over the observable part of the preset, sharing bus 11:
// areas 1 and 2 merged, and area 4. Positions refer to `topology`.
std::vector<AreaSpec> potsdam_two_area_split(const NetworkTopology& topology);

// Nodal solve of the load pattern scaled by `load_scale`, with bus 1 held at
// `slack_voltage` and generator buses injecting fixed currents. Returns bus
// voltages in topology order.
CVec potsdam_operating_point(const NetworkTopology& topology, const std::vector<LoadData>& loads,
                             double load_scale, Complex slack_voltage);

}  // namespace dsie
