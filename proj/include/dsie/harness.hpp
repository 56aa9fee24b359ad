#pragma once

// Experiment runner. Simulates one scenario, optionally corrupts the
// measurement stream, runs the selected estimators on the same stream and
// collects per-step metrics.
//
// Row k of the metrics refers to sample k. Voltage errors compare each
// estimator's estimate of u_k with the truth; the joint estimator obtains
// that estimate once frame k+1 arrives, so its last row has no MSE. Detection
// columns report the test evaluated when frame k arrived, so the joint
// estimator's first row has no statistic.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsie/config.hpp"
#include "dsie/detection.hpp"
#include "dsie/distributed.hpp"
#include "dsie/estimation.hpp"
#include "dsie/network.hpp"
#include "dsie/simulation.hpp"

namespace dsie {

inline constexpr std::string_view kCsvSchema = "# dsie-csv v1";

enum class EstimatorKind { kSie, kDsie, kWls, kTse };

std::string_view estimator_name(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view name);  // "sie", "dsie", "wls", "tse"
std::vector<EstimatorKind> parse_estimator_list(std::string_view comma_separated);

struct ExperimentConfig {
  Preset problem;
  std::vector<EstimatorKind> estimators{EstimatorKind::kSie, EstimatorKind::kDsie,
                                        EstimatorKind::kWls, EstimatorKind::kTse};
  std::optional<std::uint64_t> seed;  // overrides problem.noise.seed
  bool apply_attack = true;           // uses problem.attack when present
  double alpha = 0.01;
  double tse_process_variance_pu = 1e-4;
  bool process_noise = true;
  bool measurement_noise = true;
  bool parallel = true;
  std::filesystem::path output_dir;  // empty: nothing is written

  void validate() const;
};

// (1/m) sum |u_hat_i - u_i|^2 over m complex buses, in pu^2 of v_base.
double mse(const Vec& u_hat, const Vec& u_true, const PerUnitBases& bases);

// S = v conj(i). With i the current injected into the network at the bus,
// positive P is power delivered to the network.
Complex terminal_power(Complex v, Complex i);

// Net current leaving each bus into the branches: the incidence-weighted sum
// of branch currents. Complex, one entry per bus.
CVec bus_injections(const NetworkTopology& topology, const Vec& branch_currents);

struct EstimatorCell {
  double mse = std::numeric_limits<double>::quiet_NaN();
  double d_m = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  bool flag = false;
};

struct MetricsRow {
  int step = 0;
  double time_s = 0.0;
  bool attack_active = false;
  std::vector<EstimatorCell> cells;  // parallel to ExperimentResult::estimators
  bool dsie_degraded = false;
  int dsie_gate_rejects = 0;
};

// One voltage estimate of one estimator (real stacked over the reported
// buses), plus terminal powers for the joint estimators.
struct EstimateTrace {
  std::vector<std::optional<Vec>> u;       // indexed by step
  std::vector<std::optional<CVec>> power;  // indexed by step; joint estimators only
};

struct EstimatorSummary {
  EstimatorKind kind{};
  double mean_mse = 0.0;  // over rows with a defined MSE
  double max_mse = 0.0;
  int mse_rows = 0;
  int flags = 0;
  int false_alarms = 0;  // flagged rows without an active attack
  std::optional<int> detection_latency;  // first flag at or after onset, minus onset
};

struct ComparisonEntry {
  EstimatorKind kind{};
  std::vector<double> post_event_peak;  // per event, peak MSE over the window
  double mean_post_event_peak = 0.0;
  double quiet_mean_mse = 0.0;          // rows outside every post-event window
  double peak_ratio = 0.0;              // mean_post_event_peak / the reference's
};

struct Comparison {
  int window = 5;
  EstimatorKind reference{};  // first estimator of the run
  std::vector<int> event_steps;
  std::vector<ComparisonEntry> entries;  // ranked by mean_post_event_peak, ascending
  double quiet_spread = 0.0;             // max / min of quiet_mean_mse
};

struct ExperimentResult {
  std::vector<EstimatorKind> estimators;
  std::vector<int> reported_buses;  // bus ids whose voltages are scored
  std::string region_note;          // how the centralized estimation region was chosen
  TruthTrajectory truth;
  std::vector<MeasurementFrame> clean_frames;
  std::vector<MeasurementFrame> frames;  // after the attack, if any
  std::optional<AttackVector> attack;
  std::optional<AttackSpec> attack_spec;
  std::vector<int> event_steps;
  std::vector<MetricsRow> rows;
  std::vector<EstimateTrace> traces;  // parallel to estimators
  std::vector<EstimatorSummary> summary;
  std::optional<Comparison> comparison;

  int column(EstimatorKind kind) const;  // -1 when not run
};

// Ranks estimators by their post-event peak MSE. Needs at least two
// estimators.
Comparison compare_estimators(const ExperimentResult& result, int window = 5);

// Throws UnobservableError when neither the full network nor the union of
// observable areas supports the centralized estimators.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_metrics_csv(const ExperimentResult& result, std::ostream& out);
void write_estimates_csv(const ExperimentResult& result, std::ostream& out);
void write_truth_csv(const ExperimentResult& result, const NetworkTopology& topology,
                     std::ostream& out);
void write_measurements_csv(const std::vector<MeasurementFrame>& frames,
                            const NetworkTopology& topology, const MeasurementLayout& layout,
                            const Scenario& scenario, std::ostream& out);
void write_summary_json(const ExperimentResult& result, std::ostream& out);

// Writes metrics.csv, estimates.csv, truth.csv, measurements.csv and
// summary.json into `dir`, creating it if needed.
void write_outputs(const ExperimentResult& result, const Preset& problem,
                   const std::filesystem::path& dir);

}  // namespace dsie
