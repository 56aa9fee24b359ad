#include "dsie/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dsie {

void NoiseSpec::validate() const {
  if (!(sigma2_u > 0.0) || !(sigma2_x > 0.0) || !(sigma2_q > 0.0))
    throw ParameterError("noise variances must be positive");
}

int NetworkTopology::bus_index(int bus_id) const {
  for (int i = 0; i < num_buses(); ++i)
    if (buses[i].id == bus_id) return i;
  throw TopologyError("unknown bus id " + std::to_string(bus_id));
}

bool NetworkTopology::has_bus(int bus_id) const {
  return std::any_of(buses.begin(), buses.end(), [&](const Bus& b) { return b.id == bus_id; });
}

int NetworkTopology::branch_index(std::string_view name) const {
  for (int k = 0; k < num_branches(); ++k)
    if (branches[k].name == name) return k;
  throw TopologyError("unknown branch '" + std::string(name) + "'");
}

Complex NetworkTopology::impedance(int branch) const {
  const Branch& b = branches.at(branch);
  return {b.resistance_ohm, omega * b.inductance_h};
}

void NetworkTopology::validate(bool require_connected) const {
  if (buses.empty()) throw TopologyError("topology has no buses");
  std::set<int> ids;
  for (const Bus& b : buses)
    if (!ids.insert(b.id).second) throw TopologyError("duplicate bus id " + std::to_string(b.id));
  std::set<std::string> names;
  for (const Branch& br : branches) {
    if (!names.insert(br.name).second) throw TopologyError("duplicate branch '" + br.name + "'");
    if (!ids.contains(br.from) || !ids.contains(br.to))
      throw TopologyError("branch '" + br.name + "' has a dangling endpoint");
    if (br.from == br.to) throw TopologyError("branch '" + br.name + "' is a self-loop");
    if (!(br.resistance_ohm > 0.0)) throw ParameterError("branch '" + br.name + "' needs R > 0");
    if (!(br.inductance_h > 0.0)) throw ParameterError("branch '" + br.name + "' needs L > 0");
  }
  if (!require_connected) return;

  // Union-find over bus positions.
  std::vector<int> parent(buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const Branch& br : branches) parent[find(bus_index(br.from))] = find(bus_index(br.to));
  const int root = find(0);
  for (int i = 1; i < num_buses(); ++i)
    if (find(i) != root) throw TopologyError("network is not connected");
}

IncidenceMatrix build_incidence(const NetworkTopology& topology) {
  IncidenceMatrix inc;
  inc.entries = Eigen::MatrixXi::Zero(topology.num_branches(), topology.num_buses());
  for (int k = 0; k < topology.num_branches(); ++k) {
    const Branch& br = topology.branches[k];
    if (!topology.has_bus(br.from) || !topology.has_bus(br.to))
      throw TopologyError("branch '" + br.name + "' has a dangling endpoint");
    inc.entries(k, topology.bus_index(br.from)) = 1;
    inc.entries(k, topology.bus_index(br.to)) = -1;
  }
  return inc;
}

ContinuousModel build_continuous(const NetworkTopology& topology) {
  const int n = topology.num_branches();
  const int m = topology.num_buses();
  const IncidenceMatrix inc = build_incidence(topology);
  ContinuousModel model;
  model.a_c = Mat::Zero(2 * n, 2 * n);
  model.b_c = Mat::Zero(2 * n, 2 * m);
  for (int k = 0; k < n; ++k) {
    const Branch& br = topology.branches[k];
    if (!(br.inductance_h > 0.0)) throw ParameterError("branch '" + br.name + "' needs L > 0");
    const double r_over_l = br.resistance_ohm / br.inductance_h;
    model.a_c.block<2, 2>(2 * k, 2 * k) = real_block(-Complex(r_over_l, topology.omega));
    for (int i = 0; i < m; ++i) {
      if (inc.entries(k, i) == 0) continue;
      const double g = inc.entries(k, i) / br.inductance_h;
      model.b_c(2 * k, 2 * i) = g;
      model.b_c(2 * k + 1, 2 * i + 1) = g;
    }
  }
  return model;
}

namespace {

// (e^{z} - 1) / z, with a series near zero where the quotient cancels.
Complex phi1(Complex z) {
  if (std::abs(z) < 1e-4) {
    return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
  }
  return (std::exp(z) - 1.0) / z;
}

}  // namespace

DiscreteDynamics discretize(const ContinuousModel& model, double dt) {
  if (!(dt > 0.0)) throw ParameterError("discretize: dt must be positive");
  const int n = model.num_branches();
  DiscreteDynamics out;
  out.a = Mat::Zero(2 * n, 2 * n);
  out.b = Mat::Zero(model.b_c.rows(), model.b_c.cols());
  for (int k = 0; k < n; ++k) {
    const Eigen::Matrix2d blk = model.a_c.block<2, 2>(2 * k, 2 * k);
    if (std::abs(blk(0, 0) - blk(1, 1)) > 1e-12 * (1.0 + std::abs(blk(0, 0))) ||
        std::abs(blk(0, 1) + blk(1, 0)) > 1e-12 * (1.0 + std::abs(blk(0, 1))))
      throw ParameterError("discretize: A_c block is not a scaled rotation");
    // real_block(a + jb) = [[a, -b], [b, a]]
    const Complex lambda(blk(0, 0), blk(1, 0));
    out.a.block<2, 2>(2 * k, 2 * k) = real_block(std::exp(lambda * dt));
    out.b.middleRows(2 * k, 2) = real_block(dt * phi1(lambda * dt)) * model.b_c.middleRows(2 * k, 2);
  }
  return out;
}

void MeasurementLayout::validate(const NetworkTopology& topology) const {
  std::set<int> seen;
  for (int k : metered_branches) {
    if (k < 0 || k >= topology.num_branches()) throw ConfigError("metered branch out of range");
    if (!seen.insert(k).second) throw ConfigError("branch metered twice");
  }
  seen.clear();
  for (int i : metered_buses) {
    if (i < 0 || i >= topology.num_buses()) throw ConfigError("metered bus out of range");
    if (!seen.insert(i).second) throw ConfigError("bus metered twice");
  }
}

MeasurementLayout full_layout(const NetworkTopology& topology) {
  MeasurementLayout layout;
  layout.metered_branches.resize(topology.num_branches());
  layout.metered_buses.resize(topology.num_buses());
  std::iota(layout.metered_branches.begin(), layout.metered_branches.end(), 0);
  std::iota(layout.metered_buses.begin(), layout.metered_buses.end(), 0);
  return layout;
}

namespace {

MeasurementMatrices selection_matrices(const MeasurementLayout& layout,
                                       const NetworkTopology& topology) {
  layout.validate(topology);
  return {pair_selection(layout.metered_branches, topology.num_branches()),
          pair_selection(layout.metered_buses, topology.num_buses())};
}

}  // namespace

MeasurementMatrices build_measurement_matrices(const MeasurementLayout& layout,
                                               const NetworkTopology& topology) {
  if (layout.empty()) throw ConfigError("measurement layout has no sensors");
  return selection_matrices(layout, topology);
}

namespace {

DiscreteModel assemble_unchecked(const NetworkTopology& topology, const MeasurementLayout& layout,
                                 const NoiseSpec& noise, const PerUnitBases& bases, double dt) {
  noise.validate();
  const DiscreteDynamics dyn = discretize(build_continuous(topology), dt);
  MeasurementMatrices meas = selection_matrices(layout, topology);
  const double i2 = bases.i_base() * bases.i_base();
  const double v2 = bases.v_base * bases.v_base;
  DiscreteModel model;
  model.a = dyn.a;
  model.b = dyn.b;
  model.c = std::move(meas.c);
  model.d = std::move(meas.d);
  model.q = noise.sigma2_q * i2 * Mat::Identity(model.a.rows(), model.a.rows());
  model.r_x = noise.sigma2_x * i2 * Mat::Identity(model.c.rows(), model.c.rows());
  model.r_u = noise.sigma2_u * v2 * Mat::Identity(model.d.rows(), model.d.rows());
  model.dt = dt;
  return model;
}

}  // namespace

DiscreteModel assemble_model(const NetworkTopology& topology, const MeasurementLayout& layout,
                             const NoiseSpec& noise, const PerUnitBases& bases, double dt) {
  topology.validate();
  if (layout.empty()) throw ConfigError("measurement layout has no sensors");
  return assemble_unchecked(topology, layout, noise, bases, dt);
}

ObservabilityReport check_observability(const DiscreteModel& model) {
  const int nx = model.state_dim();
  const int nu = model.input_dim();
  const int p = model.state_meas_dim();
  const int l = model.input_meas_dim();
  Mat o = Mat::Zero(2 * p + l, nx + nu);
  o.topLeftCorner(p, nx) = model.c;
  o.block(p, nx, l, nu) = model.d;
  o.bottomLeftCorner(p, nx) = model.c * model.a;
  o.bottomRightCorner(p, nu) = model.c * model.b;

  ObservabilityReport report;
  report.rank = numerical_rank(o);
  report.required = nx + nu;
  report.observable = report.rank >= report.required;
  report.state_measurement_rows = p;
  report.input_measurement_rows = l;
  report.note =
      "branch-current sensors enter the regressor twice (times k-1 and k); removing one costs up "
      "to twice the rank of removing a bus-voltage sensor";
  return report;
}

std::vector<int> AreaPartition::neighbors(int area) const {
  std::vector<int> out;
  for (const auto& [key, buses] : shared_buses)
    if (key.first == area && !buses.empty()) out.push_back(key.second);
  return out;
}

LocalArea restrict_network(const NetworkTopology& topology, const MeasurementLayout& layout,
                           const std::vector<int>& branches, const std::vector<int>& buses,
                           const NoiseSpec& noise, const PerUnitBases& bases, double dt) {
  LocalArea local;
  local.global_branch = branches;
  local.global_bus = buses;
  std::sort(local.global_branch.begin(), local.global_branch.end());
  std::sort(local.global_bus.begin(), local.global_bus.end());

  std::vector<int> bus_to_local(topology.num_buses(), -1);
  std::vector<int> branch_to_local(topology.num_branches(), -1);
  local.topology.omega = topology.omega;
  for (int gi : local.global_bus) {
    bus_to_local[gi] = static_cast<int>(local.topology.buses.size());
    local.topology.buses.push_back(topology.buses.at(gi));
  }
  for (int gk : local.global_branch) {
    const Branch& br = topology.branches.at(gk);
    if (bus_to_local[topology.bus_index(br.from)] < 0 || bus_to_local[topology.bus_index(br.to)] < 0)
      throw PartitionError("branch '" + br.name + "' has an endpoint outside its area");
    branch_to_local[gk] = static_cast<int>(local.topology.branches.size());
    local.topology.branches.push_back(br);
  }
  for (int gk : layout.metered_branches)
    if (branch_to_local.at(gk) >= 0) local.layout.metered_branches.push_back(branch_to_local[gk]);
  for (int gi : layout.metered_buses)
    if (bus_to_local.at(gi) >= 0) local.layout.metered_buses.push_back(bus_to_local[gi]);

  local.topology.validate(false);
  local.model = assemble_unchecked(local.topology, local.layout, noise, bases, dt);
  local.observability = check_observability(local.model);
  return local;
}

PartitionResult partition(const NetworkTopology& topology, const MeasurementLayout& layout,
                          const std::vector<AreaSpec>& assignment, const NoiseSpec& noise,
                          const PerUnitBases& bases, double dt) {
  topology.validate();
  layout.validate(topology);
  if (assignment.empty()) throw PartitionError("partition needs at least one area");

  std::vector<int> branch_owner(topology.num_branches(), -1);
  std::vector<int> bus_count(topology.num_buses(), 0);
  PartitionResult result;
  for (std::size_t a = 0; a < assignment.size(); ++a) {
    const AreaSpec& spec = assignment[a];
    Area area{spec.name, spec.branches, spec.buses};
    std::sort(area.branches.begin(), area.branches.end());
    std::sort(area.buses.begin(), area.buses.end());
    if (std::adjacent_find(area.buses.begin(), area.buses.end()) != area.buses.end())
      throw PartitionError("area '" + spec.name + "' lists a bus twice");
    for (int k : area.branches) {
      if (k < 0 || k >= topology.num_branches()) throw PartitionError("branch out of range");
      if (branch_owner[k] >= 0)
        throw PartitionError("branch '" + topology.branches[k].name + "' assigned to two areas");
      branch_owner[k] = static_cast<int>(a);
      const Branch& br = topology.branches[k];
      for (int end : {topology.bus_index(br.from), topology.bus_index(br.to)})
        if (!std::binary_search(area.buses.begin(), area.buses.end(), end))
          throw PartitionError("branch '" + br.name + "' straddles area '" + spec.name +
                               "' without its endpoint bus being shared into it");
    }
    for (int i : area.buses) {
      if (i < 0 || i >= topology.num_buses()) throw PartitionError("bus out of range");
      ++bus_count[i];
    }
    result.partition.areas.push_back(std::move(area));
  }
  for (int k = 0; k < topology.num_branches(); ++k)
    if (branch_owner[k] < 0)
      throw PartitionError("branch '" + topology.branches[k].name + "' is not assigned");
  for (int i = 0; i < topology.num_buses(); ++i)
    if (bus_count[i] == 0)
      throw PartitionError("bus " + std::to_string(topology.buses[i].id) + " is in no area");

  for (const Area& area : result.partition.areas)
    result.locals.push_back(
        restrict_network(topology, layout, area.branches, area.buses, noise, bases, dt));

  const int count = static_cast<int>(result.partition.areas.size());
  for (int i = 0; i < count; ++i) {
    const Area& ai = result.partition.areas[i];
    for (int j = 0; j < count; ++j) {
      if (i == j) continue;
      const Area& aj = result.partition.areas[j];
      std::vector<int> shared;
      std::set_intersection(ai.buses.begin(), ai.buses.end(), aj.buses.begin(), aj.buses.end(),
                            std::back_inserter(shared));
      if (shared.empty()) continue;
      std::vector<int> local_pos;
      for (int g : shared)
        local_pos.push_back(static_cast<int>(
            std::lower_bound(ai.buses.begin(), ai.buses.end(), g) - ai.buses.begin()));
      result.partition.selection[{i, j}] =
          pair_selection(local_pos, static_cast<int>(ai.buses.size()));
      result.partition.shared_buses[{i, j}] = std::move(shared);
    }
  }
  return result;
}

}  // namespace dsie
