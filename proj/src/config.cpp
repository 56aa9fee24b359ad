#include "dsie/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace dsie {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(where + ": missing key '" + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::type_error& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

std::vector<Complex> complex_list(const json& j, const char* d_key, const char* q_key,
                                  const std::string& where) {
  const auto d = get<std::vector<double>>(j, d_key, where);
  const auto q = get<std::vector<double>>(j, q_key, where);
  if (d.size() != q.size())
    throw ConfigError(where + ": '" + d_key + "' and '" + q_key + "' differ in length");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < d.size(); ++i) out.emplace_back(d[i], q[i]);
  return out;
}

std::vector<int> branch_positions(const NetworkTopology& topo, const json& names,
                                  const std::string& where) {
  std::vector<int> out;
  for (const json& n : names) {
    if (!n.is_string()) throw ConfigError(where + ": branch references must be names");
    out.push_back(topo.branch_index(n.get<std::string>()));
  }
  return out;
}

std::vector<int> bus_positions(const NetworkTopology& topo, const json& ids,
                               const std::string& where) {
  std::vector<int> out;
  for (const json& id : ids) {
    if (!id.is_number_integer()) throw ConfigError(where + ": bus references must be integers");
    out.push_back(topo.bus_index(id.get<int>()));
  }
  return out;
}

AttackScope parse_scope(const std::string& s) {
  if (s == "stealth") return AttackScope::kStealth;
  if (s == "enclosed") return AttackScope::kEnclosedBranches;
  throw ConfigError("attack.scope: expected 'stealth' or 'enclosed', got '" + s + "'");
}

Preset parse(const json& root) {
  if (!root.is_object()) throw ConfigError("config root must be an object");
  if (root.contains("schema") && root.at("schema") != kConfigSchema)
    throw ConfigError("unsupported config schema " + root.at("schema").dump());

  Preset p;
  p.topology.omega = get_or(root, "omega", kDefaultOmega, "config");
  if (root.contains("bases")) {
    const json& b = root.at("bases");
    p.bases.v_base = get_or(b, "v_base", p.bases.v_base, "bases");
    p.bases.s_base = get_or(b, "s_base", p.bases.s_base, "bases");
    if (!(p.bases.v_base > 0.0) || !(p.bases.s_base > 0.0))
      throw ConfigError("bases must be positive");
  }

  std::map<std::string, CableType> cables{{kCable500Mcm.name, kCable500Mcm}};
  if (root.contains("cable_types")) {
    for (const auto& [name, c] : root.at("cable_types").items())
      cables[name] = {name, get<double>(c, "r_ohm_per_mi", "cable_types." + name),
                      get<double>(c, "x_ohm_per_mi", "cable_types." + name)};
  }

  for (const json& b : require(root, "buses", "config"))
    p.topology.buses.push_back(
        {get<int>(b, "id", "buses"), get_or(b, "nominal_v", 13.2e3, "buses")});

  for (const json& b : require(root, "branches", "config")) {
    const auto name = get<std::string>(b, "name", "branches");
    const std::string where = "branches." + name;
    const int from = get<int>(b, "from", where);
    const int to = get<int>(b, "to", where);
    if (b.contains("length_ft")) {
      const auto cable = get<std::string>(b, "cable", where);
      auto it = cables.find(cable);
      if (it == cables.end()) throw ConfigError(where + ": unknown cable type '" + cable + "'");
      p.topology.branches.push_back(
          cable_branch(name, from, to, get<double>(b, "length_ft", where), it->second));
    } else {
      p.topology.branches.push_back(
          {name, from, to, get<double>(b, "r_ohm", where), get<double>(b, "l_h", where)});
    }
  }
  p.topology.validate();

  const json& sensors = require(root, "sensors", "config");
  p.layout.metered_branches =
      branch_positions(p.topology, require(sensors, "branches", "sensors"), "sensors");
  p.layout.metered_buses = bus_positions(p.topology, require(sensors, "buses", "sensors"), "sensors");
  p.layout.validate(p.topology);

  if (root.contains("areas")) {
    for (const json& a : root.at("areas")) {
      AreaSpec spec;
      spec.name = get<std::string>(a, "name", "areas");
      spec.branches = branch_positions(p.topology, require(a, "branches", spec.name), spec.name);
      spec.buses = bus_positions(p.topology, require(a, "buses", spec.name), spec.name);
      p.areas.push_back(std::move(spec));
    }
  }

  if (root.contains("noise")) {
    const json& n = root.at("noise");
    p.noise.sigma2_u = get_or(n, "sigma2_u", p.noise.sigma2_u, "noise");
    p.noise.sigma2_x = get_or(n, "sigma2_x", p.noise.sigma2_x, "noise");
    p.noise.sigma2_q = get_or(n, "sigma2_q", p.noise.sigma2_q, "noise");
    p.noise.seed = get_or<std::uint64_t>(n, "seed", p.noise.seed, "noise");
  }
  p.noise.validate();

  const json& sc = require(root, "scenario", "config");
  p.scenario.start_time_s = get_or(sc, "start_time_s", 0.0, "scenario");
  p.scenario.duration_s = get<double>(sc, "duration_s", "scenario");
  p.scenario.dt_s = get<double>(sc, "dt_s", "scenario");
  for (const auto& [key, segs] : require(sc, "profiles", "scenario").items()) {
    int id = 0;
    try {
      id = std::stoi(key);
    } catch (const std::exception&) {
      throw ConfigError("scenario.profiles: key '" + key + "' is not a bus id");
    }
    const std::string where = "scenario.profiles." + key;
    for (const json& s : segs)
      p.scenario.profiles[id].push_back(
          {get<double>(s, "start_s", where),
           Complex(get<double>(s, "d", where), get<double>(s, "q", where)),
           Complex(get_or(s, "ramp_d", 0.0, where), get_or(s, "ramp_q", 0.0, where))});
  }
  if (sc.contains("events")) {
    for (const json& e : sc.at("events")) {
      VoltageEvent ev;
      ev.time_s = get<double>(e, "time_s", "scenario.events");
      ev.buses = get<std::vector<int>>(e, "buses", "scenario.events");
      ev.values = complex_list(e, "d", "q", "scenario.events");
      p.scenario.events.push_back(std::move(ev));
    }
  }
  p.scenario.validate(p.topology);

  if (root.contains("attack")) {
    const json& a = root.at("attack");
    AttackSpec spec;
    spec.target_buses = get<std::vector<int>>(a, "targets", "attack");
    spec.bias = complex_list(a, "bias_d", "bias_q", "attack");
    spec.start_step = get<int>(a, "start_step", "attack");
    spec.end_step = get_or(a, "end_step", p.scenario.num_steps(), "attack");
    spec.scope = parse_scope(get_or<std::string>(a, "scope", "enclosed", "attack"));
    if (spec.bias.size() != spec.target_buses.size())
      throw ConfigError("attack: one bias per target bus is required");
    for (int id : spec.target_buses)
      if (!p.topology.has_bus(id)) throw ConfigError("attack: unknown target bus");
    p.attack = spec;
  }

  if (root.contains("loads"))
    for (const json& l : root.at("loads"))
      p.loads.push_back({get<int>(l, "bus", "loads"), get<double>(l, "p_kw", "loads"),
                         get<double>(l, "q_kvar", "loads")});
  if (root.contains("generators"))
    for (const json& g : root.at("generators"))
      p.generators.push_back({get<int>(g, "bus", "generators"),
                              get<double>(g, "r_ohm", "generators"),
                              get<double>(g, "l_mh", "generators")});
  return p;
}

}  // namespace

Preset parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse(root);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

Preset load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string dump_config(const Preset& p) {
  json root;
  root["schema"] = kConfigSchema;
  root["omega"] = p.topology.omega;
  root["bases"] = {{"v_base", p.bases.v_base}, {"s_base", p.bases.s_base}};
  json buses = json::array();
  for (const Bus& b : p.topology.buses) buses.push_back({{"id", b.id}, {"nominal_v", b.nominal_voltage_v}});
  root["buses"] = buses;
  json branches = json::array();
  for (const Branch& b : p.topology.branches)
    branches.push_back({{"name", b.name},
                        {"from", b.from},
                        {"to", b.to},
                        {"r_ohm", b.resistance_ohm},
                        {"l_h", b.inductance_h}});
  root["branches"] = branches;

  auto branch_names = [&](const std::vector<int>& positions) {
    json out = json::array();
    for (int k : positions) out.push_back(p.topology.branches.at(k).name);
    return out;
  };
  auto bus_ids = [&](const std::vector<int>& positions) {
    json out = json::array();
    for (int i : positions) out.push_back(p.topology.buses.at(i).id);
    return out;
  };
  root["sensors"] = {{"branches", branch_names(p.layout.metered_branches)},
                     {"buses", bus_ids(p.layout.metered_buses)}};
  json areas = json::array();
  for (const AreaSpec& a : p.areas)
    areas.push_back(
        {{"name", a.name}, {"branches", branch_names(a.branches)}, {"buses", bus_ids(a.buses)}});
  if (!p.areas.empty()) root["areas"] = areas;
  root["noise"] = {{"sigma2_u", p.noise.sigma2_u},
                   {"sigma2_x", p.noise.sigma2_x},
                   {"sigma2_q", p.noise.sigma2_q},
                   {"seed", p.noise.seed}};

  json profiles = json::object();
  for (const auto& [id, segs] : p.scenario.profiles) {
    json list = json::array();
    for (const VoltageSegment& s : segs)
      list.push_back({{"start_s", s.start_s},
                      {"d", s.value.real()},
                      {"q", s.value.imag()},
                      {"ramp_d", s.ramp_per_s.real()},
                      {"ramp_q", s.ramp_per_s.imag()}});
    profiles[std::to_string(id)] = list;
  }
  json events = json::array();
  for (const VoltageEvent& e : p.scenario.events) {
    std::vector<double> d, q;
    for (const Complex& v : e.values) {
      d.push_back(v.real());
      q.push_back(v.imag());
    }
    events.push_back({{"time_s", e.time_s}, {"buses", e.buses}, {"d", d}, {"q", q}});
  }
  root["scenario"] = {{"start_time_s", p.scenario.start_time_s},
                      {"duration_s", p.scenario.duration_s},
                      {"dt_s", p.scenario.dt_s},
                      {"profiles", profiles},
                      {"events", events}};

  if (p.attack) {
    std::vector<double> d, q;
    for (const Complex& v : p.attack->bias) {
      d.push_back(v.real());
      q.push_back(v.imag());
    }
    root["attack"] = {{"targets", p.attack->target_buses},
                      {"bias_d", d},
                      {"bias_q", q},
                      {"start_step", p.attack->start_step},
                      {"end_step", p.attack->end_step},
                      {"scope", p.attack->scope == AttackScope::kStealth ? "stealth" : "enclosed"}};
  }
  if (!p.loads.empty()) {
    json loads = json::array();
    for (const LoadData& l : p.loads)
      loads.push_back({{"bus", l.bus}, {"p_kw", l.p_kw}, {"q_kvar", l.q_kvar}});
    root["loads"] = loads;
  }
  if (!p.generators.empty()) {
    json gens = json::array();
    for (const GeneratorData& g : p.generators)
      gens.push_back({{"bus", g.bus}, {"r_ohm", g.r_ohm}, {"l_mh", g.l_mh}});
    root["generators"] = gens;
  }
  return root.dump(2);
}

Preset builtin_preset(std::string_view name) {
  if (name == "potsdam13") return potsdam_preset();
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace dsie
