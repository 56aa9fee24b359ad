#include "dsie/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace dsie {

namespace {

constexpr double kTimeTol = 1e-9;
constexpr double kFeetPerMile = 5280.0;
constexpr double kCableOmega = 2.0 * std::numbers::pi * 60.0;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return std::mt19937_64(seq);
}

}  // namespace

int Scenario::num_steps() const {
  return static_cast<int>(std::llround(duration_s / dt_s));
}

Complex Scenario::voltage(int bus_id, double t) const {
  Complex value(0.0, 0.0);
  double since = -std::numeric_limits<double>::infinity();
  if (auto it = profiles.find(bus_id); it != profiles.end()) {
    for (const VoltageSegment& seg : it->second) {
      if (seg.start_s > t + kTimeTol) break;
      value = seg.value + seg.ramp_per_s * (t - seg.start_s);
      since = seg.start_s;
    }
  }
  for (const VoltageEvent& ev : events) {
    if (ev.time_s > t + kTimeTol || ev.time_s < since - kTimeTol) continue;
    for (std::size_t b = 0; b < ev.buses.size(); ++b) {
      if (ev.buses[b] != bus_id) continue;
      value = ev.values[b];
      since = ev.time_s;
    }
  }
  return value;
}

std::vector<int> Scenario::event_steps() const {
  std::vector<int> steps;
  for (const VoltageEvent& ev : events)
    steps.push_back(static_cast<int>(std::llround((ev.time_s - start_time_s) / dt_s)));
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

void Scenario::validate(const NetworkTopology& topology) const {
  if (!(dt_s > 0.0)) throw ConfigError("scenario: dt must be positive");
  if (!(duration_s > 0.0)) throw ConfigError("scenario: duration must be positive");
  if (std::abs(num_steps() * dt_s - duration_s) > 1e-9 * std::max(1.0, duration_s))
    throw ConfigError("scenario: duration is not a multiple of dt");
  for (const Bus& bus : topology.buses) {
    auto it = profiles.find(bus.id);
    if (it == profiles.end() || it->second.empty())
      throw ConfigError("scenario: bus " + std::to_string(bus.id) + " has no voltage profile");
    if (it->second.front().start_s > start_time_s + kTimeTol)
      throw ConfigError("scenario: profile of bus " + std::to_string(bus.id) +
                        " does not cover the start time");
    if (!std::is_sorted(it->second.begin(), it->second.end(),
                        [](const auto& a, const auto& b) { return a.start_s < b.start_s; }))
      throw ConfigError("scenario: segments must be ordered by start time");
  }
  for (const auto& [id, segs] : profiles)
    if (!topology.has_bus(id)) throw ConfigError("scenario: unknown bus " + std::to_string(id));
  for (const VoltageEvent& ev : events) {
    const double steps = (ev.time_s - start_time_s) / dt_s;
    if (std::abs(steps - std::round(steps)) > 1e-6)
      throw ConfigError("scenario: event time is not on the sample grid");
    if (ev.buses.size() != ev.values.size())
      throw ConfigError("scenario: event needs one value per bus");
    for (int id : ev.buses)
      if (!topology.has_bus(id)) throw ConfigError("scenario: event names unknown bus");
  }
}

TruthTrajectory simulate_truth(const NetworkTopology& topology, const DiscreteModel& model,
                               const Scenario& scenario,
                               const std::optional<NoiseSpec>& process_noise) {
  scenario.validate(topology);
  if (std::abs(scenario.dt_s - model.dt) > 1e-12)
    throw ConfigError("scenario sample time does not match the model");
  if (model.input_dim() != 2 * topology.num_buses() ||
      model.state_dim() != 2 * topology.num_branches())
    throw DimensionError("simulate_truth: model does not match the topology");

  const int steps = scenario.num_steps();
  TruthTrajectory truth;
  auto inputs_at = [&](int k) {
    CVec u(topology.num_buses());
    for (int i = 0; i < topology.num_buses(); ++i)
      u(i) = scenario.voltage(topology.buses[i].id, scenario.time_of(k));
    return stack(u);
  };

  // Fixed point x = A x + B u of the initial voltages.
  const Eigen::Index nx = model.state_dim();
  Vec u0 = inputs_at(0);
  Vec x = (Mat::Identity(nx, nx) - model.a).partialPivLu().solve(model.b * u0);

  std::optional<std::mt19937_64> rng;
  Mat q_factor;
  if (process_noise) {
    rng = make_rng(process_noise->seed, 1);
    Eigen::LLT<Mat> llt(model.q);
    if (llt.info() != Eigen::Success) throw NumericalError("process noise covariance is not SPD");
    q_factor = llt.matrixL();
  }
  std::normal_distribution<double> normal(0.0, 1.0);

  truth.time_s.push_back(scenario.time_of(0));
  truth.x.push_back(x);
  truth.u.push_back(u0);
  for (int k = 1; k <= steps; ++k) {
    Vec next = model.a * truth.x.back() + model.b * truth.u.back();
    if (rng) {
      Vec e(nx);
      for (Eigen::Index i = 0; i < nx; ++i) e(i) = normal(*rng);
      Vec w = q_factor * e;
      next += w;
      truth.process_noise.push_back(std::move(w));
    }
    truth.time_s.push_back(scenario.time_of(k));
    truth.x.push_back(std::move(next));
    truth.u.push_back(inputs_at(k));
  }
  return truth;
}

std::vector<MeasurementFrame> generate_measurements(const TruthTrajectory& truth,
                                                    const NetworkTopology& topology,
                                                    const MeasurementLayout& layout,
                                                    const NoiseSpec& noise,
                                                    const PerUnitBases& bases) {
  layout.validate(topology);
  if (noise.sigma2_u < 0.0 || noise.sigma2_x < 0.0)
    throw ParameterError("measurement noise variances must be non-negative");
  const Mat c = pair_selection(layout.metered_branches, topology.num_branches());
  const Mat d = pair_selection(layout.metered_buses, topology.num_buses());
  const double sd_x = std::sqrt(noise.sigma2_x) * bases.i_base();
  const double sd_u = std::sqrt(noise.sigma2_u) * bases.v_base;

  std::mt19937_64 rng = make_rng(noise.seed, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MeasurementFrame> frames;
  frames.reserve(truth.x.size());
  for (int k = 0; k < truth.num_samples(); ++k) {
    MeasurementFrame f;
    f.k = k;
    f.z_x = c * truth.x[k];
    f.z_u = d * truth.u[k];
    for (Eigen::Index r = 0; r < f.z_x.size(); ++r) f.z_x(r) += sd_x * normal(rng);
    for (Eigen::Index r = 0; r < f.z_u.size(); ++r) f.z_u(r) += sd_u * normal(rng);
    frames.push_back(std::move(f));
  }
  return frames;
}

FrameProjector::FrameProjector(const NetworkTopology& source_topology,
                               const MeasurementLayout& source_layout,
                               const NetworkTopology& target_topology,
                               const MeasurementLayout& target_layout) {
  std::vector<int> rows_x;
  for (int k : target_layout.metered_branches) {
    const std::string& name = target_topology.branches.at(k).name;
    const int src = source_topology.branch_index(name);
    auto it = std::find(source_layout.metered_branches.begin(),
                        source_layout.metered_branches.end(), src);
    if (it == source_layout.metered_branches.end())
      throw ConfigError("branch '" + name + "' is not metered in the source stream");
    rows_x.push_back(static_cast<int>(it - source_layout.metered_branches.begin()));
  }
  std::vector<int> rows_u;
  for (int i : target_layout.metered_buses) {
    const int id = target_topology.buses.at(i).id;
    const int src = source_topology.bus_index(id);
    auto it = std::find(source_layout.metered_buses.begin(), source_layout.metered_buses.end(), src);
    if (it == source_layout.metered_buses.end())
      throw ConfigError("bus " + std::to_string(id) + " is not metered in the source stream");
    rows_u.push_back(static_cast<int>(it - source_layout.metered_buses.begin()));
  }
  select_x_ = pair_selection(rows_x, static_cast<int>(source_layout.metered_branches.size()));
  select_u_ = pair_selection(rows_u, static_cast<int>(source_layout.metered_buses.size()));
}

MeasurementFrame FrameProjector::operator()(const MeasurementFrame& frame) const {
  if (frame.z_x.size() != select_x_.cols() || frame.z_u.size() != select_u_.cols())
    throw DimensionError("frame does not match the source layout");
  return {frame.k, select_x_ * frame.z_x, select_u_ * frame.z_u};
}

std::vector<MeasurementFrame> FrameProjector::project(
    const std::vector<MeasurementFrame>& frames) const {
  std::vector<MeasurementFrame> out;
  out.reserve(frames.size());
  for (const MeasurementFrame& f : frames) out.push_back((*this)(f));
  return out;
}

Mat bus_projection(const NetworkTopology& source, const NetworkTopology& target) {
  std::vector<int> idx;
  for (const Bus& b : target.buses) idx.push_back(source.bus_index(b.id));
  return pair_selection(idx, source.num_buses());
}

Mat branch_projection(const NetworkTopology& source, const NetworkTopology& target) {
  std::vector<int> idx;
  for (const Branch& b : target.branches) idx.push_back(source.branch_index(b.name));
  return pair_selection(idx, source.num_branches());
}

Branch cable_branch(std::string name, int from, int to, double length_ft, const CableType& cable) {
  const double miles = length_ft / kFeetPerMile;
  return {std::move(name), from, to, miles * cable.r_ohm_per_mi,
          miles * cable.x_ohm_per_mi / kCableOmega};
}

namespace {

// Generator buses other than the slack inject a fixed share of the nominal
// load current.
constexpr double kGeneratorShare = 0.15;
constexpr int kSlackBus = 1;

// Load multipliers applied at each load change, and the common-mode voltage
// sag per unit of extra load.
constexpr double kLoadSteps[] = {1.25, 0.75, 1.3, 0.75, 1.25, 0.8, 1.3, 0.75, 1.25, 1.0};
constexpr double kSagPerLoad = 0.09;

}  // namespace

CVec potsdam_operating_point(const NetworkTopology& topology, const std::vector<LoadData>& loads,
                             double load_scale, Complex slack_voltage) {
  const int m = topology.num_buses();
  const double v_nom = topology.buses.front().nominal_voltage_v;
  CVec injection = CVec::Zero(m);
  Complex total_load(0.0, 0.0);
  for (const LoadData& load : loads) {
    const Complex i_load = std::conj(Complex(load.p_kw, load.q_kvar) * 1e3 / v_nom);
    injection(topology.bus_index(load.bus)) -= load_scale * i_load;
    total_load += i_load;
  }
  for (int gen : {8, 9, 10, 13})
    if (topology.has_bus(gen)) injection(topology.bus_index(gen)) += kGeneratorShare * total_load;

  const IncidenceMatrix inc = build_incidence(topology);
  CMat laplacian = CMat::Zero(m, m);
  for (int k = 0; k < topology.num_branches(); ++k) {
    const Complex y = 1.0 / topology.impedance(k);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        laplacian(a, b) += static_cast<double>(inc.entries(k, a) * inc.entries(k, b)) * y;
  }
  const int slack = topology.bus_index(kSlackBus);
  std::vector<int> rest;
  for (int i = 0; i < m; ++i)
    if (i != slack) rest.push_back(i);
  const Eigen::Index r = static_cast<Eigen::Index>(rest.size());
  CMat l_rr(r, r);
  CVec rhs(r);
  for (Eigen::Index a = 0; a < r; ++a) {
    rhs(a) = injection(rest[a]) - laplacian(rest[a], slack) * slack_voltage;
    for (Eigen::Index b = 0; b < r; ++b) l_rr(a, b) = laplacian(rest[a], rest[b]);
  }
  const CVec v_rest = l_rr.partialPivLu().solve(rhs);
  CVec v(m);
  v(slack) = slack_voltage;
  for (Eigen::Index a = 0; a < r; ++a) v(rest[a]) = v_rest(a);
  return v;
}

Preset potsdam_preset() {
  Preset preset;
  NetworkTopology& topo = preset.topology;
  for (int id = 1; id <= 13; ++id) topo.buses.push_back({id, 13.2e3});
  const CableType& cable = kCable500Mcm;
  topo.branches = {
      cable_branch("1-2", 1, 2, 3100, cable),    cable_branch("2-3", 2, 3, 4150, cable),
      cable_branch("3-4", 3, 4, 125, cable),     cable_branch("4-5", 4, 5, 3350, cable),
      cable_branch("5-6", 5, 6, 4350, cable),    cable_branch("6-7", 6, 7, 5425, cable),
      cable_branch("7-9", 7, 9, 7025, cable),    cable_branch("8-9", 8, 9, 8100, cable),
      cable_branch("9-10", 9, 10, 8200, cable),  cable_branch("10-11", 10, 11, 375, cable),
      cable_branch("11-12", 11, 12, 400, cable), cable_branch("1-12", 1, 12, 1950, cable),
      cable_branch("13-2", 13, 2, 4150, cable),
  };
  topo.validate();

  auto branches = [&](std::initializer_list<const char*> names) {
    std::vector<int> out;
    for (const char* n : names) out.push_back(topo.branch_index(n));
    return out;
  };
  auto buses = [&](std::initializer_list<int> ids) {
    std::vector<int> out;
    for (int id : ids) out.push_back(topo.bus_index(id));
    return out;
  };

  // Every branch outside area 3 carries a current PMU; voltage PMUs sit at
  // buses 1, 3, 4, 7 and 9.
  preset.layout.metered_branches = branches(
      {"1-2", "2-3", "3-4", "7-9", "8-9", "9-10", "10-11", "11-12", "1-12", "13-2"});
  preset.layout.metered_buses = buses({1, 3, 4, 7, 9});

  preset.areas = {
      {"area1", branches({"1-2", "11-12", "1-12"}), buses({1, 2, 11, 12})},
      {"area2", branches({"2-3", "3-4", "13-2"}), buses({2, 3, 4, 13})},
      {"area3", branches({"4-5", "5-6", "6-7"}), buses({4, 5, 6, 7})},
      {"area4", branches({"7-9", "8-9", "9-10", "10-11"}), buses({7, 8, 9, 10, 11})},
  };

  preset.loads = {{1, 4866, 3015}, {2, 48, 30},   {3, 144, 89},  {4, 54, 33},
                  {5, 560, 347},   {6, 122, 76},  {7, 142, 88},  {9, 4166, 2582},
                  {11, 48, 30},    {12, 48, 30},  {13, 83, 51}};
  preset.generators = {{1, 0.3, 7.8}, {8, 0.4, 10}, {9, 0.2, 4.4}, {10, 1, 26}, {13, 1.2, 29}};

  Scenario& sc = preset.scenario;
  sc.start_time_s = 0.75;
  sc.duration_s = 1.0;
  sc.dt_s = 0.01;
  const double v_nom = 13.2e3;
  auto operating_point = [&](double scale) {
    return potsdam_operating_point(topo, preset.loads, scale,
                                   Complex(v_nom * (1.0 - kSagPerLoad * (scale - 1.0)), 0.0));
  };
  const CVec v0 = operating_point(1.0);
  for (int i = 0; i < topo.num_buses(); ++i)
    sc.profiles[topo.buses[i].id] = {{sc.start_time_s, v0(i), Complex(0.0, 0.0)}};
  double t = 0.8;
  for (double scale : kLoadSteps) {
    const CVec v = operating_point(scale);
    VoltageEvent ev;
    ev.time_s = t;
    for (int i = 0; i < topo.num_buses(); ++i) {
      ev.buses.push_back(topo.buses[i].id);
      ev.values.push_back(v(i));
    }
    sc.events.push_back(std::move(ev));
    t += 0.1;
  }

  AttackSpec attack;
  attack.target_buses = {2, 3, 4, 13};
  attack.bias = {{1500, 20}, {750, 20}, {1250, 20}, {850, 20}};
  attack.start_step = 50;  // 1.25 s
  attack.end_step = sc.num_steps();
  attack.scope = AttackScope::kStealth;
  preset.attack = attack;
  return preset;
}

std::vector<AreaSpec> potsdam_two_area_split(const NetworkTopology& topology) {
  auto branches = [&](std::initializer_list<const char*> names) {
    std::vector<int> out;
    for (const char* n : names) out.push_back(topology.branch_index(n));
    return out;
  };
  auto buses = [&](std::initializer_list<int> ids) {
    std::vector<int> out;
    for (int id : ids) out.push_back(topology.bus_index(id));
    return out;
  };
  return {
      {"west", branches({"1-2", "11-12", "1-12", "2-3", "3-4", "13-2"}),
       buses({1, 2, 3, 4, 11, 12, 13})},
      {"east", branches({"7-9", "8-9", "9-10", "10-11"}), buses({7, 8, 9, 10, 11})},
  };
}

}  // namespace dsie
