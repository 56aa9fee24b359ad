#pragma once

// Bad-data and false-data-injection detection.

#include <string>
#include <vector>

#include "dsie/estimation.hpp"
#include "dsie/linalg.hpp"
#include "dsie/network.hpp"

namespace dsie {

struct Innovation {
  Vec y;
  Mat s;
};

// y = rhs - O [x; u], S = O P O^T + R_w, for a prior independent of rhs.
Innovation innovation(const RegressionSystem& sys, const JointEstimate& prior);

// r = (I - M) z, M = H (H^T W H)^-1 H^T W.
Vec residual_static(const Vec& z, const Mat& h, const Mat& w);

// sqrt(y^T S^-1 y) through a Cholesky solve. Throws NumericalError if S is
// not SPD.
double mahalanobis(const Vec& y, const Mat& s);

double chi_square_quantile(double probability, int dof);
double chi_square_cdf(double x, int dof);

enum class Verdict { kClean, kBadData };

struct DetectionReport {
  double d_m = 0.0;
  double threshold = 0.0;  // compared against d_m, i.e. sqrt of the chi2 quantile
  int dof = 0;
  Verdict flag = Verdict::kClean;

  bool bad() const { return flag == Verdict::kBadData; }
};

// threshold^2 = chi2 quantile at 1 - alpha.
DetectionReport detect(double d_m, int dof, double alpha);

// ---------------------------------------------------------------------------
// False data injection

enum class AttackScope {
  // Rows are metered branches with both ends targeted; the classic
  // attacker's view of a single feeder section.
  kEnclosedBranches,
  // Every metered branch touching a target, plus direct bias on metered
  // target bus voltages. In the range of the quasi-static measurement
  // matrix, hence invisible to the static residual.
  kStealth,
};

struct AttackSpec {
  std::vector<int> target_buses;  // bus ids
  std::vector<Complex> bias;      // x_b per target (V)
  int start_step = 0;
  int end_step = 0;  // inclusive
  AttackScope scope = AttackScope::kEnclosedBranches;
};

struct AttackVector {
  std::vector<int> branches;      // topology positions of corrupted current rows
  CMat h;                         // branches x targets, admittance differences
  CVec a;                         // per corrupted branch (A)
  std::vector<int> voltage_buses; // topology positions of corrupted voltage rows
  CVec voltage_bias;              // per corrupted voltage row (V)
};

AttackVector build_fdia(const AttackSpec& spec, const NetworkTopology& topology,
                        const MeasurementLayout& layout);

// Adds the attack to frames whose step lies in [start_step, end_step].
// Frames follow `layout` row order. Returns new frames.
std::vector<MeasurementFrame> inject(const std::vector<MeasurementFrame>& frames,
                                     const AttackVector& attack, const MeasurementLayout& layout,
                                     int start_step, int end_step);

}  // namespace dsie
