#include "dsie/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dsie {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DetectionReport report_for(double d_m, int dof, double alpha) {
  if (dof >= 1) return detect(d_m, dof, alpha);
  DetectionReport r;
  r.d_m = d_m;
  r.threshold = std::numeric_limits<double>::infinity();
  return r;
}

EstimatorCell cell_from(const DetectionReport& r) {
  EstimatorCell c;
  c.d_m = r.d_m;
  c.threshold = r.threshold;
  c.flag = r.bad();
  return c;
}

}  // namespace

std::string_view estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kSie: return "sie";
    case EstimatorKind::kDsie: return "dsie";
    case EstimatorKind::kWls: return "wls";
    case EstimatorKind::kTse: return "tse";
  }
  return "?";
}

EstimatorKind parse_estimator(std::string_view name) {
  for (EstimatorKind k :
       {EstimatorKind::kSie, EstimatorKind::kDsie, EstimatorKind::kWls, EstimatorKind::kTse})
    if (estimator_name(k) == name) return k;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::vector<EstimatorKind> parse_estimator_list(std::string_view text) {
  std::vector<EstimatorKind> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    if (!item.empty()) {
      const EstimatorKind k = parse_estimator(item);
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("no estimators selected");
  return out;
}

void ExperimentConfig::validate() const {
  if (estimators.empty()) throw ConfigError("at least one estimator is required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (!(tse_process_variance_pu > 0.0))
    throw ParameterError("TSE process variance must be positive");
}

double mse(const Vec& u_hat, const Vec& u_true, const PerUnitBases& bases) {
  if (u_hat.size() != u_true.size() || u_hat.size() % 2 != 0)
    throw DimensionError("mse: vectors must have equal, even length");
  if (u_hat.size() == 0) return 0.0;
  const double m = static_cast<double>(u_hat.size() / 2);
  return (u_hat - u_true).squaredNorm() / (bases.v_base * bases.v_base) / m;
}

Complex terminal_power(Complex v, Complex i) { return v * std::conj(i); }

CVec bus_injections(const NetworkTopology& topology, const Vec& branch_currents) {
  if (branch_currents.size() != 2 * topology.num_branches())
    throw DimensionError("bus_injections: branch current dimension");
  const IncidenceMatrix inc = build_incidence(topology);
  const CVec i = unstack(branch_currents);
  return inc.entries.cast<Complex>().transpose() * i;
}

int ExperimentResult::column(EstimatorKind kind) const {
  auto it = std::find(estimators.begin(), estimators.end(), kind);
  return it == estimators.end() ? -1 : static_cast<int>(it - estimators.begin());
}

namespace {

struct EstimatorRun {
  EstimateTrace trace;
  std::vector<EstimatorCell> cells;
  std::vector<bool> degraded;
  std::vector<int> rejects;

  explicit EstimatorRun(int samples)
      : cells(samples), degraded(samples, false), rejects(samples, 0) {
    trace.u.resize(samples);
    trace.power.resize(samples);
  }
};

CVec powers(const NetworkTopology& topology, const Vec& x, const Vec& u) {
  const CVec inj = bus_injections(topology, x);
  const CVec v = unstack(u);
  CVec s(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) s(i) = terminal_power(v(i), inj(i));
  return s;
}

EstimatorRun run_sie(const LocalArea& region, const std::vector<MeasurementFrame>& frames,
                     double alpha) {
  const int samples = static_cast<int>(frames.size());
  EstimatorRun run(samples);
  DsieFilter filter(region.model);
  for (int k = 1; k < samples; ++k) {
    const DsieOutput out = filter.step(frames[k - 1], frames[k]);
    run.trace.u[k - 1] = out.joint.u;
    run.trace.power[k - 1] = powers(region.topology, out.joint.x, out.joint.u);
    run.cells[k] = cell_from(report_for(out.residual.d_m, out.residual.dof, alpha));
  }
  return run;
}

EstimatorRun run_dsie(const PartitionResult& parts, const LocalArea& region,
                      const NetworkTopology& topology, const MeasurementLayout& layout,
                      const std::vector<MeasurementFrame>& frames, double alpha, bool parallel) {
  const int samples = static_cast<int>(frames.size());
  EstimatorRun run(samples);
  DistributedEstimator estimator(parts, alpha, parallel);
  const std::size_t areas = parts.locals.size();

  std::vector<std::vector<MeasurementFrame>> area_frames;
  for (const LocalArea& local : parts.locals)
    area_frames.push_back(FrameProjector(topology, layout, local.topology, local.layout).project(frames));

  // For every region bus / branch: (area, local position) of each active owner.
  std::vector<std::vector<std::pair<int, int>>> bus_owners(region.topology.num_buses());
  std::vector<std::pair<int, int>> branch_owner(region.topology.num_branches(), {-1, -1});
  for (std::size_t a = 0; a < areas; ++a) {
    if (!estimator.active(static_cast<int>(a))) continue;
    const LocalArea& local = parts.locals[a];
    for (std::size_t i = 0; i < local.global_bus.size(); ++i) {
      auto it = std::find(region.global_bus.begin(), region.global_bus.end(), local.global_bus[i]);
      if (it != region.global_bus.end())
        bus_owners[it - region.global_bus.begin()].push_back({int(a), int(i)});
    }
    for (std::size_t k = 0; k < local.global_branch.size(); ++k) {
      auto it = std::find(region.global_branch.begin(), region.global_branch.end(),
                          local.global_branch[k]);
      if (it != region.global_branch.end())
        branch_owner[it - region.global_branch.begin()] = {int(a), int(k)};
    }
  }

  for (int k = 1; k < samples; ++k) {
    std::vector<MeasurementFrame> prev, curr;
    for (std::size_t a = 0; a < areas; ++a) {
      prev.push_back(area_frames[a][k - 1]);
      curr.push_back(area_frames[a][k]);
    }
    const std::vector<AreaStepOutput> out = estimator.step(prev, curr);

    Vec u = Vec::Zero(2 * region.topology.num_buses());
    for (std::size_t i = 0; i < bus_owners.size(); ++i) {
      for (const auto& [a, li] : bus_owners[i]) u.segment(2 * i, 2) += out[a].fused.u.segment(2 * li, 2);
      u.segment(2 * i, 2) /= static_cast<double>(bus_owners[i].size());
    }
    Vec x = Vec::Zero(2 * region.topology.num_branches());
    bool complete = true;
    for (std::size_t b = 0; b < branch_owner.size(); ++b) {
      const auto [a, lk] = branch_owner[b];
      if (a < 0) {
        complete = false;
        continue;
      }
      x.segment(2 * b, 2) = out[a].fused.x.segment(2 * lk, 2);
    }
    run.trace.u[k - 1] = u;
    if (complete) run.trace.power[k - 1] = powers(region.topology, x, u);

    // Each area's residual uses its own sensors only. Unless a shared bus is
    // metered, the squared distances are independent chi-square variables.
    double d2 = 0.0;
    int dof = 0;
    for (const AreaStepOutput& o : out) {
      if (!o.active) continue;
      d2 += o.residual.d_m * o.residual.d_m;
      dof += o.residual.dof;
      for (const GateOutcome& g : o.gates) run.rejects[k] += g.accepted ? 0 : 1;
      run.degraded[k] = run.degraded[k] || o.degraded;
    }
    run.cells[k] = cell_from(report_for(std::sqrt(d2), dof, alpha));
  }
  return run;
}

EstimatorRun run_wls(const QuasiStaticModel& qs, const std::vector<MeasurementFrame>& frames,
                     double alpha) {
  const int samples = static_cast<int>(frames.size());
  EstimatorRun run(samples);
  const int dof = static_cast<int>(qs.h.rows() - qs.h.cols());
  for (int k = 0; k < samples; ++k) {
    const Vec z = quasi_static_measurement(frames[k]);
    const StaticEstimate est = static_wls_baseline(qs.h, qs.w, z);
    const Vec r = residual_static(z, qs.h, qs.w);
    run.trace.u[k] = est.x;
    run.cells[k] = cell_from(report_for(std::sqrt(r.dot(qs.w * r)), dof, alpha));
  }
  return run;
}

EstimatorRun run_tse(const QuasiStaticModel& qs, double process_variance,
                     const std::vector<MeasurementFrame>& frames, double alpha) {
  const int samples = static_cast<int>(frames.size());
  EstimatorRun run(samples);
  TrackingEstimator tse(qs, process_variance);
  for (int k = 0; k < samples; ++k) {
    const TrackingEstimator::Output out = tse.step(frames[k]);
    run.trace.u[k] = out.v;
    if (out.innovation.size() > 0)
      run.cells[k] = cell_from(report_for(mahalanobis(out.innovation, out.innovation_cov),
                                          static_cast<int>(out.innovation.size()), alpha));
  }
  return run;
}

std::vector<int> iota_positions(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

Comparison compare_estimators(const ExperimentResult& result, int window) {
  if (result.estimators.size() < 2) throw ConfigError("comparison needs at least two estimators");
  if (window < 1) throw ParameterError("comparison window must be positive");
  Comparison cmp;
  cmp.window = window;
  cmp.reference = result.estimators.front();
  cmp.event_steps = result.event_steps;
  const int rows = static_cast<int>(result.rows.size());

  std::vector<bool> in_window(rows, false);
  for (int e : cmp.event_steps)
    for (int k = e; k < std::min(e + window, rows); ++k)
      if (k >= 0) in_window[k] = true;

  for (std::size_t c = 0; c < result.estimators.size(); ++c) {
    ComparisonEntry entry;
    entry.kind = result.estimators[c];
    for (int e : cmp.event_steps) {
      double peak = kNaN;
      for (int k = std::max(e, 0); k < std::min(e + window, rows); ++k) {
        const double v = result.rows[k].cells[c].mse;
        if (!std::isnan(v) && (std::isnan(peak) || v > peak)) peak = v;
      }
      entry.post_event_peak.push_back(peak);
    }
    double sum = 0.0;
    int count = 0;
    for (double p : entry.post_event_peak)
      if (!std::isnan(p)) {
        sum += p;
        ++count;
      }
    entry.mean_post_event_peak = count > 0 ? sum / count : kNaN;
    sum = 0.0;
    count = 0;
    for (int k = 0; k < rows; ++k) {
      const double v = result.rows[k].cells[c].mse;
      if (!in_window[k] && !std::isnan(v)) {
        sum += v;
        ++count;
      }
    }
    entry.quiet_mean_mse = count > 0 ? sum / count : kNaN;
    cmp.entries.push_back(std::move(entry));
  }
  const double ref = cmp.entries.front().mean_post_event_peak;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (ComparisonEntry& e : cmp.entries) {
    e.peak_ratio = e.mean_post_event_peak / ref;
    lo = std::min(lo, e.quiet_mean_mse);
    hi = std::max(hi, e.quiet_mean_mse);
  }
  cmp.quiet_spread = hi / lo;
  std::stable_sort(cmp.entries.begin(), cmp.entries.end(), [](const auto& a, const auto& b) {
    return a.mean_post_event_peak < b.mean_post_event_peak;
  });
  return cmp;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Preset& problem = config.problem;
  const NetworkTopology& topology = problem.topology;
  const MeasurementLayout& layout = problem.layout;
  NoiseSpec noise = problem.noise;
  if (config.seed) noise.seed = *config.seed;
  noise.validate();
  const double dt = problem.scenario.dt_s;

  ExperimentResult result;
  result.estimators = config.estimators;
  result.event_steps = problem.scenario.event_steps();

  // Centralized estimation region: the whole network when observable,
  // otherwise the union of observable areas.
  const DiscreteModel full = assemble_model(topology, layout, noise, problem.bases, dt);
  const ObservabilityReport full_obs = check_observability(full);
  std::optional<PartitionResult> parts;
  if (!problem.areas.empty())
    parts = partition(topology, layout, problem.areas, noise, problem.bases, dt);

  LocalArea region;
  if (full_obs.observable) {
    region = restrict_network(topology, layout, iota_positions(topology.num_branches()),
                              iota_positions(topology.num_buses()), noise, problem.bases, dt);
    result.region_note = "full network";
  } else {
    if (!parts) throw UnobservableError(full_obs);
    std::set<int> branches, buses;
    std::vector<std::string> names;
    for (std::size_t a = 0; a < parts->locals.size(); ++a) {
      const LocalArea& local = parts->locals[a];
      if (!local.observability.observable) continue;
      branches.insert(local.global_branch.begin(), local.global_branch.end());
      buses.insert(local.global_bus.begin(), local.global_bus.end());
      names.push_back(parts->partition.areas[a].name);
    }
    if (branches.empty()) throw UnobservableError(full_obs);
    region = restrict_network(topology, layout, {branches.begin(), branches.end()},
                              {buses.begin(), buses.end()}, noise, problem.bases, dt);
    if (!region.observability.observable) throw UnobservableError(region.observability);
    result.region_note = "union of observable areas:";
    for (const std::string& n : names) result.region_note += " " + n;
  }
  for (const Bus& b : region.topology.buses) result.reported_buses.push_back(b.id);

  result.truth = simulate_truth(topology, full, problem.scenario,
                                config.process_noise ? std::optional<NoiseSpec>(noise) : std::nullopt);
  NoiseSpec meas_noise = noise;
  if (!config.measurement_noise) meas_noise.sigma2_u = meas_noise.sigma2_x = 0.0;
  result.clean_frames = generate_measurements(result.truth, topology, layout, meas_noise, problem.bases);
  result.frames = result.clean_frames;
  if (config.apply_attack && problem.attack) {
    result.attack_spec = problem.attack;
    result.attack = build_fdia(*problem.attack, topology, layout);
    result.frames = inject(result.clean_frames, *result.attack, layout, problem.attack->start_step,
                           problem.attack->end_step);
  }

  const std::vector<MeasurementFrame> region_frames =
      FrameProjector(topology, layout, region.topology, region.layout).project(result.frames);
  const int samples = result.truth.num_samples();

  std::optional<QuasiStaticModel> qs;
  auto quasi_static = [&]() -> const QuasiStaticModel& {
    if (!qs) qs = build_quasi_static(region.topology, region.layout, region.model);
    return *qs;
  };
  std::optional<PartitionResult> dsie_parts = parts;
  if (!dsie_parts)
    dsie_parts = partition(topology, layout,
                           {{"all", iota_positions(topology.num_branches()),
                             iota_positions(topology.num_buses())}},
                           noise, problem.bases, dt);
  const double tse_q =
      config.tse_process_variance_pu * problem.bases.v_base * problem.bases.v_base;

  std::vector<std::function<EstimatorRun()>> jobs;
  for (EstimatorKind kind : config.estimators) {
    switch (kind) {
      case EstimatorKind::kSie:
        jobs.emplace_back([&] { return run_sie(region, region_frames, config.alpha); });
        break;
      case EstimatorKind::kDsie:
        jobs.emplace_back([&] {
          return run_dsie(*dsie_parts, region, topology, layout, result.frames, config.alpha,
                          config.parallel);
        });
        break;
      case EstimatorKind::kWls:
        quasi_static();
        jobs.emplace_back([&] { return run_wls(*qs, region_frames, config.alpha); });
        break;
      case EstimatorKind::kTse:
        quasi_static();
        jobs.emplace_back([&] { return run_tse(*qs, tse_q, region_frames, config.alpha); });
        break;
    }
  }
  std::vector<EstimatorRun> runs;
  if (config.parallel) {
    std::vector<std::future<EstimatorRun>> futures;
    for (auto& job : jobs) futures.push_back(std::async(std::launch::async, job));
    for (auto& f : futures) runs.push_back(f.get());
  } else {
    for (auto& job : jobs) runs.push_back(job());
  }

  const Mat bus_select = bus_projection(topology, region.topology);
  const int dsie_col = result.column(EstimatorKind::kDsie);
  for (int k = 0; k < samples; ++k) {
    MetricsRow row;
    row.step = k;
    row.time_s = result.truth.time_s[k];
    row.attack_active = result.attack_spec && k >= result.attack_spec->start_step &&
                        k <= result.attack_spec->end_step;
    const Vec u_true = bus_select * result.truth.u[k];
    for (EstimatorRun& run : runs) {
      EstimatorCell cell = run.cells[k];
      if (run.trace.u[k]) cell.mse = mse(*run.trace.u[k], u_true, problem.bases);
      row.cells.push_back(cell);
    }
    if (dsie_col >= 0) {
      row.dsie_degraded = runs[dsie_col].degraded[k];
      row.dsie_gate_rejects = runs[dsie_col].rejects[k];
    }
    result.rows.push_back(std::move(row));
  }
  for (EstimatorRun& run : runs) result.traces.push_back(std::move(run.trace));

  for (std::size_t c = 0; c < result.estimators.size(); ++c) {
    EstimatorSummary s;
    s.kind = result.estimators[c];
    double sum = 0.0;
    for (const MetricsRow& row : result.rows) {
      const EstimatorCell& cell = row.cells[c];
      if (!std::isnan(cell.mse)) {
        sum += cell.mse;
        s.max_mse = std::max(s.max_mse, cell.mse);
        ++s.mse_rows;
      }
      if (cell.flag) {
        ++s.flags;
        if (!row.attack_active) ++s.false_alarms;
        if (result.attack_spec && !s.detection_latency && row.step >= result.attack_spec->start_step)
          s.detection_latency = row.step - result.attack_spec->start_step;
      }
    }
    s.mean_mse = s.mse_rows > 0 ? sum / s.mse_rows : kNaN;
    result.summary.push_back(s);
  }
  if (result.estimators.size() >= 2) result.comparison = compare_estimators(result);

  if (!config.output_dir.empty()) write_outputs(result, problem, config.output_dir);
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace {

void put(std::ostream& out, double v) {
  if (!std::isnan(v)) out << v;
}

std::ostream& precise(std::ostream& out) {
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_metrics_csv(const ExperimentResult& result, std::ostream& out) {
  precise(out) << kCsvSchema << "\nstep,time_s,attack_active";
  for (EstimatorKind k : result.estimators) {
    const std::string n(estimator_name(k));
    out << ',' << n << "_mse," << n << "_dm," << n << "_threshold," << n << "_flag";
  }
  const bool dsie = result.column(EstimatorKind::kDsie) >= 0;
  if (dsie) out << ",dsie_degraded,dsie_gate_rejects";
  out << '\n';
  for (const MetricsRow& row : result.rows) {
    out << row.step << ',' << row.time_s << ',' << int(row.attack_active);
    for (const EstimatorCell& c : row.cells) {
      out << ',';
      put(out, c.mse);
      out << ',';
      put(out, c.d_m);
      out << ',';
      put(out, c.threshold);
      out << ',' << int(c.flag);
    }
    if (dsie) out << ',' << int(row.dsie_degraded) << ',' << row.dsie_gate_rejects;
    out << '\n';
  }
}

void write_estimates_csv(const ExperimentResult& result, std::ostream& out) {
  precise(out) << kCsvSchema << "\nstep,time_s,estimator,bus,v_d,v_q,p_w,q_var\n";
  for (std::size_t c = 0; c < result.estimators.size(); ++c) {
    const EstimateTrace& trace = result.traces[c];
    for (std::size_t k = 0; k < trace.u.size(); ++k) {
      if (!trace.u[k]) continue;
      const Vec& u = *trace.u[k];
      for (std::size_t i = 0; i < result.reported_buses.size(); ++i) {
        out << k << ',' << result.truth.time_s[k] << ',' << estimator_name(result.estimators[c])
            << ',' << result.reported_buses[i] << ',' << u(2 * i) << ',' << u(2 * i + 1) << ',';
        if (trace.power[k]) out << (*trace.power[k])(i).real() << ',' << (*trace.power[k])(i).imag();
        else out << ',';
        out << '\n';
      }
    }
  }
}

void write_truth_csv(const ExperimentResult& result, const NetworkTopology& topology,
                     std::ostream& out) {
  precise(out) << kCsvSchema << "\nstep,time_s";
  for (const Branch& b : topology.branches) out << ",i_" << b.name << "_d,i_" << b.name << "_q";
  for (const Bus& b : topology.buses) out << ",v_" << b.id << "_d,v_" << b.id << "_q";
  out << '\n';
  for (int k = 0; k < result.truth.num_samples(); ++k) {
    out << k << ',' << result.truth.time_s[k];
    for (Eigen::Index r = 0; r < result.truth.x[k].size(); ++r) out << ',' << result.truth.x[k](r);
    for (Eigen::Index r = 0; r < result.truth.u[k].size(); ++r) out << ',' << result.truth.u[k](r);
    out << '\n';
  }
}

void write_measurements_csv(const std::vector<MeasurementFrame>& frames,
                            const NetworkTopology& topology, const MeasurementLayout& layout,
                            const Scenario& scenario, std::ostream& out) {
  precise(out) << kCsvSchema << "\nstep,time_s";
  for (int k : layout.metered_branches) {
    const std::string& n = topology.branches.at(k).name;
    out << ",zi_" << n << "_d,zi_" << n << "_q";
  }
  for (int i : layout.metered_buses) {
    const int id = topology.buses.at(i).id;
    out << ",zv_" << id << "_d,zv_" << id << "_q";
  }
  out << '\n';
  for (const MeasurementFrame& f : frames) {
    out << f.k << ',' << scenario.time_of(f.k);
    for (Eigen::Index r = 0; r < f.z_x.size(); ++r) out << ',' << f.z_x(r);
    for (Eigen::Index r = 0; r < f.z_u.size(); ++r) out << ',' << f.z_u(r);
    out << '\n';
  }
}

void write_summary_json(const ExperimentResult& result, std::ostream& out) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["schema"] = "dsie-summary v1";
  j["region"] = result.region_note;
  j["reported_buses"] = result.reported_buses;
  j["event_steps"] = result.event_steps;
  json est = json::array();
  for (const EstimatorSummary& s : result.summary) {
    est.push_back({{"estimator", estimator_name(s.kind)},
                   {"mean_mse_pu2", num(s.mean_mse)},
                   {"max_mse_pu2", num(s.max_mse)},
                   {"mse_rows", s.mse_rows},
                   {"flags", s.flags},
                   {"false_alarms", s.false_alarms},
                   {"detection_latency_steps",
                    s.detection_latency ? json(*s.detection_latency) : json(nullptr)}});
  }
  j["estimators"] = est;
  if (result.attack_spec) {
    json a;
    a["start_step"] = result.attack_spec->start_step;
    a["end_step"] = result.attack_spec->end_step;
    a["current_rows"] = result.attack->branches.size();
    a["voltage_rows"] = result.attack->voltage_buses.size();
    j["attack"] = a;
  }
  if (result.comparison) {
    const Comparison& c = *result.comparison;
    json entries = json::array();
    for (const ComparisonEntry& e : c.entries) {
      json peaks = json::array();
      for (double p : e.post_event_peak) peaks.push_back(num(p));
      entries.push_back({{"estimator", estimator_name(e.kind)},
                         {"mean_post_event_peak_pu2", num(e.mean_post_event_peak)},
                         {"quiet_mean_mse_pu2", num(e.quiet_mean_mse)},
                         {"peak_ratio_to_reference", num(e.peak_ratio)},
                         {"post_event_peaks_pu2", peaks}});
    }
    j["comparison"] = {{"window_steps", c.window},
                       {"reference", estimator_name(c.reference)},
                       {"quiet_spread", num(c.quiet_spread)},
                       {"ranking", entries}};
  }
  out << j.dump(2) << '\n';
}

void write_outputs(const ExperimentResult& result, const Preset& problem,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metrics_csv(result, f);
  }
  {
    auto f = open("estimates.csv");
    write_estimates_csv(result, f);
  }
  {
    auto f = open("truth.csv");
    write_truth_csv(result, problem.topology, f);
  }
  {
    auto f = open("measurements.csv");
    write_measurements_csv(result.frames, problem.topology, problem.layout, problem.scenario, f);
  }
  {
    auto f = open("summary.json");
    write_summary_json(result, f);
  }
}

}  // namespace dsie
