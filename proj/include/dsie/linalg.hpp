#pragma once

// Shared numeric vocabulary: Eigen aliases, error types, and the real
// stacking of dq phasors.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dsie {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Error hierarchy. The CLI maps these onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class SyncError : public Error {
 public:
  using Error::Error;
};

class AttackInfeasibleError : public Error {
 public:
  using Error::Error;
};

struct ObservabilityReport {
  int rank = 0;
  int required = 0;
  bool observable = false;
  int state_measurement_rows = 0;
  int input_measurement_rows = 0;
  std::string note;
};

class UnobservableError : public Error {
 public:
  explicit UnobservableError(ObservabilityReport report);
  const ObservabilityReport& report() const { return report_; }

 private:
  ObservabilityReport report_;
};

// Multiplication by c = a + jb acting on (d, q) pairs: [[a, -b], [b, a]].
Eigen::Matrix2d real_block(Complex c);

// Complex n-vector -> real 2n-vector laid out as (d0, q0, d1, q1, ...).
Vec stack(const CVec& v);
CVec unstack(const Vec& v);

// Complex r x c matrix -> real 2r x 2c matrix of 2x2 multiplication blocks.
Mat stack(const CMat& m);

// Average with the transpose. Covariances leave every solver through here.
Mat symmetrize(const Mat& m);

// Rank by SVD with relative singular-value threshold rel_tol * sigma_max.
int numerical_rank(const Mat& m, double rel_tol = 1e-10);

// Selection matrix picking d/q pairs: row 2r, 2r+1 selects pair indices[r].
Mat pair_selection(const std::vector<int>& indices, int total_pairs);

}  // namespace dsie
