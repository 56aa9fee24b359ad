#pragma once

// Joint state-and-input estimation.
//
// Each step stacks two consecutive PMU frames into the batch regression
//
//   [z_x,k-1]   [C    0 ] [x_k-1]   [v_x,k-1         ]
//   [z_u,k-1] = [0    D ] [u_k-1] + [v_u,k-1         ]
//   [z_x,k  ]   [CA   CB]           [C w_k-1 + v_x,k ]
//
// solves it by weighted least squares for (x_k-1, u_k-1) with the full joint
// covariance, propagates through the dynamics, and runs a Kalman update on
// z_x,k. Inputs therefore come out with one step of delay.

#include <optional>

#include "dsie/linalg.hpp"
#include "dsie/network.hpp"

namespace dsie {

struct MeasurementFrame {
  int k = 0;
  Vec z_x;  // branch-current phasors (A), real stacked
  Vec z_u;  // bus-voltage phasors (V), real stacked
};

struct RegressionSystem {
  Mat o;       // (p + l + p) x (nx + nu)
  Mat weight;  // blockdiag(R_x, R_u, C Q C^T + R_x), a covariance
  Vec rhs;     // [z_x,k-1; z_u,k-1; z_x,k]
  int state_dim = 0;
  int input_dim = 0;
};

struct JointEstimate {
  int k = 0;
  Vec x;
  Vec u;
  Mat p;  // (nx + nu) square, [[P_x, P_xu], [P_ux, P_u]]

  int state_dim() const { return static_cast<int>(x.size()); }
  int input_dim() const { return static_cast<int>(u.size()); }
  Vec joint() const;
  Mat p_x() const { return p.topLeftCorner(x.size(), x.size()); }
  Mat p_u() const { return p.bottomRightCorner(u.size(), u.size()); }
  Mat p_xu() const { return p.topRightCorner(x.size(), u.size()); }
  Mat p_ux() const { return p.bottomLeftCorner(u.size(), x.size()); }
};

struct Prediction {
  int k = 0;
  Vec x;
  Mat p;
};

struct FilteredState {
  int k = 0;
  Vec x;
  Mat p;
};

// Weighted least squares against a measurement covariance:
// x = (H^T R^-1 H)^-1 H^T R^-1 z, p = (H^T R^-1 H)^-1. Cholesky whitening
// followed by column-pivoted QR; throws UnobservableError when H is rank
// deficient and NumericalError when R is not SPD.
struct WlsSolution {
  Vec x;
  Mat p;
};

WlsSolution solve_wls(const Mat& h, const Mat& covariance, const Vec& z);

RegressionSystem assemble_regression(const DiscreteModel& model, const MeasurementFrame& prev,
                                     const Vec& curr_zx);

// Whitens with the Cholesky factor of the weight, then solves by
// column-pivoted QR. Throws UnobservableError when O is rank deficient.
JointEstimate solve_batch_wls(const RegressionSystem& sys, int k = 0);

// Uses the full joint covariance, cross blocks included.
Prediction predict(const DiscreteModel& model, const JointEstimate& est);

// Kalman update on z_x. Throws NumericalError if C P C^T + R_x is not SPD.
FilteredState update(const DiscreteModel& model, const Prediction& pred, const Vec& z_x);

// Chi-square test on the batch-regression residual r = rhs - O [x; u].
// Under the model r^T W^-1 r ~ chi2(rows - cols).
struct RegressionResidual {
  Vec r;
  double d_m = 0.0;
  int dof = 0;
};

RegressionResidual regression_residual(const RegressionSystem& sys, const JointEstimate& est);

struct DsieOutput {
  JointEstimate joint;  // at step k-1
  Prediction prediction;
  FilteredState filtered;  // at step k
  RegressionResidual residual;
};

// Centralized estimator. Single owner; holds the last joint estimate and
// prediction for reporting.
class DsieFilter {
 public:
  explicit DsieFilter(DiscreteModel model);

  const DiscreteModel& model() const { return model_; }

  // prev.k + 1 must equal curr.k.
  DsieOutput step(const MeasurementFrame& prev, const MeasurementFrame& curr);

  const std::optional<JointEstimate>& last_estimate() const { return last_estimate_; }
  const std::optional<Prediction>& last_prediction() const { return last_prediction_; }

 private:
  DiscreteModel model_;
  std::optional<JointEstimate> last_estimate_;
  std::optional<Prediction> last_prediction_;
};

// ---------------------------------------------------------------------------
// Baselines on the quasi-static model, where bus voltages are the states and
// each branch-current row reads (v_from - v_to) / (R + jwL).

struct StaticEstimate {
  Vec x;
  Mat p;  // (H^T W H)^-1
};

// x = (H^T W H)^-1 H^T W z, W an information (inverse covariance) matrix.
StaticEstimate static_wls_baseline(const Mat& h, const Mat& w, const Vec& z);

struct QuasiStaticModel {
  Mat h;      // (2p + 2l) x 2m
  Mat r;      // measurement covariance, diagonal
  Mat w;      // r^-1
  int state_meas_dim = 0;
};

// Current rows carry R_x + Q: the process noise shows up as jitter around
// the steady-state branch current.
QuasiStaticModel build_quasi_static(const NetworkTopology& topology,
                                    const MeasurementLayout& layout, const DiscreteModel& model);

Vec quasi_static_measurement(const MeasurementFrame& frame);

// Tracking state estimator: Kalman filter with identity transition on bus
// voltages, v_k+1 = v_k + w_v.
class TrackingEstimator {
 public:
  TrackingEstimator(QuasiStaticModel model, double process_variance);

  struct Output {
    int k = 0;
    Vec v;
    Mat p;
    Vec innovation;
    Mat innovation_cov;
  };

  // The first call initializes from the static WLS solution of that frame.
  Output step(const MeasurementFrame& frame);
  bool initialized() const { return initialized_; }

 private:
  QuasiStaticModel model_;
  double q_;
  bool initialized_ = false;
  Vec v_;
  Mat p_;
};

}  // namespace dsie
