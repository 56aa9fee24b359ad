#pragma once

// Branch-current network model in the synchronous dq frame.
//
// States are branch currents, inputs are bus voltages. Every phasor is
// stored as a real (d, q) pair, so a network with n branches and m buses has
// a 2n-dimensional state and a 2m-dimensional input. Branch k owns state
// entries (2k, 2k+1); bus i owns input entries (2i, 2i+1).
//
//   d/dt i_k = -(R_k/L_k + j w) i_k + (1/L_k) (v_from - v_to)
//
// Shunt capacitance is neglected.

#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dsie/linalg.hpp"
#include "dsie/noise.hpp"

namespace dsie {

inline constexpr double kDefaultOmega = 2.0 * std::numbers::pi * 60.0;

struct Bus {
  int id = 0;
  double nominal_voltage_v = 13.2e3;
};

struct Branch {
  std::string name;
  int from = 0;  // bus id
  int to = 0;    // bus id
  double resistance_ohm = 0.0;
  double inductance_h = 0.0;
};

struct NetworkTopology {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  double omega = kDefaultOmega;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_branches() const { return static_cast<int>(branches.size()); }

  // Position of a bus id / branch name; throws TopologyError when absent.
  int bus_index(int bus_id) const;
  int branch_index(std::string_view name) const;
  bool has_bus(int bus_id) const;

  // Series impedance R + jwL of a branch (by position).
  Complex impedance(int branch) const;

  // Throws TopologyError / ParameterError when an invariant is broken.
  void validate(bool require_connected = true) const;
};

struct IncidenceMatrix {
  Eigen::MatrixXi entries;  // n branches x m buses, +1 at from-bus, -1 at to-bus
};

IncidenceMatrix build_incidence(const NetworkTopology& topology);

struct ContinuousModel {
  Mat a_c;  // 2n x 2n, block diagonal
  Mat b_c;  // 2n x 2m

  int num_branches() const { return static_cast<int>(a_c.rows() / 2); }
  int num_buses() const { return static_cast<int>(b_c.cols() / 2); }
  static int d_index(int phasor) { return 2 * phasor; }
  static int q_index(int phasor) { return 2 * phasor + 1; }
};

ContinuousModel build_continuous(const NetworkTopology& topology);

struct DiscreteDynamics {
  Mat a;
  Mat b;
};

// Exact zero-order-hold discretization. A_c must be block diagonal with
// 2x2 blocks of the form [[s, w], [-w, s]], which is always the case for
// models produced by build_continuous.
DiscreteDynamics discretize(const ContinuousModel& model, double dt);

// Positions into NetworkTopology::branches / buses. The order here is the
// row order of the measurement vectors.
struct MeasurementLayout {
  std::vector<int> metered_branches;
  std::vector<int> metered_buses;

  bool empty() const { return metered_branches.empty() && metered_buses.empty(); }
  void validate(const NetworkTopology& topology) const;
};

MeasurementLayout full_layout(const NetworkTopology& topology);

struct MeasurementMatrices {
  Mat c;  // 2p x 2n
  Mat d;  // 2l x 2m, may have zero rows
};

MeasurementMatrices build_measurement_matrices(const MeasurementLayout& layout,
                                               const NetworkTopology& topology);

// Linear discrete state-space model with its noise covariances (SI units).
//   x_k   = A x_{k-1} + B u_{k-1} + w_{k-1},   w ~ N(0, Q)
//   z_x,k = C x_k + v_x,                        v_x ~ N(0, R_x)
//   z_u,k = D u_k + v_u,                        v_u ~ N(0, R_u)
struct DiscreteModel {
  Mat a, b, c, d;
  Mat q, r_x, r_u;
  double dt = 0.0;

  int state_dim() const { return static_cast<int>(a.rows()); }
  int input_dim() const { return static_cast<int>(b.cols()); }
  int state_meas_dim() const { return static_cast<int>(c.rows()); }
  int input_meas_dim() const { return static_cast<int>(d.rows()); }
};

DiscreteModel assemble_model(const NetworkTopology& topology, const MeasurementLayout& layout,
                             const NoiseSpec& noise, const PerUnitBases& bases, double dt);

ObservabilityReport check_observability(const DiscreteModel& model);

// ---------------------------------------------------------------------------
// Area partitioning

struct AreaSpec {
  std::string name;
  std::vector<int> branches;  // global branch positions
  std::vector<int> buses;     // global bus positions
};

struct Area {
  std::string name;
  std::vector<int> branches;  // global positions, ascending
  std::vector<int> buses;     // global positions, ascending
};

struct AreaPartition {
  std::vector<Area> areas;
  // Keyed by (i, j) with i != j. Shared buses are global positions in
  // ascending order; this order is the message order between i and j.
  std::map<std::pair<int, int>, std::vector<int>> shared_buses;
  // T_ij: 2|shared| x 2 m_i, picks the shared buses out of area i's input.
  std::map<std::pair<int, int>, Mat> selection;

  std::vector<int> neighbors(int area) const;
};

struct LocalArea {
  NetworkTopology topology;
  MeasurementLayout layout;
  DiscreteModel model;
  ObservabilityReport observability;
  // local position -> global position
  std::vector<int> global_branch;
  std::vector<int> global_bus;
};

struct PartitionResult {
  AreaPartition partition;
  std::vector<LocalArea> locals;
};

PartitionResult partition(const NetworkTopology& topology, const MeasurementLayout& layout,
                          const std::vector<AreaSpec>& assignment, const NoiseSpec& noise,
                          const PerUnitBases& bases, double dt);

// Restriction of a network to a branch/bus subset, with the sensors that
// fall inside it. Bus and branch order follow ascending global position;
// sensor order follows the parent layout.
LocalArea restrict_network(const NetworkTopology& topology, const MeasurementLayout& layout,
                           const std::vector<int>& branches, const std::vector<int>& buses,
                           const NoiseSpec& noise, const PerUnitBases& bases, double dt);

}  // namespace dsie
