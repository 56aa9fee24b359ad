#include "dsie/estimation.hpp"

#include <cmath>
#include <utility>

namespace dsie {

Vec JointEstimate::joint() const {
  Vec out(x.size() + u.size());
  out << x, u;
  return out;
}

RegressionSystem assemble_regression(const DiscreteModel& model, const MeasurementFrame& prev,
                                     const Vec& curr_zx) {
  const int nx = model.state_dim();
  const int nu = model.input_dim();
  const int p = model.state_meas_dim();
  const int l = model.input_meas_dim();
  if (prev.z_x.size() != p || prev.z_u.size() != l || curr_zx.size() != p)
    throw DimensionError("assemble_regression: frame dimensions do not match the model");

  RegressionSystem sys;
  sys.state_dim = nx;
  sys.input_dim = nu;
  sys.o = Mat::Zero(2 * p + l, nx + nu);
  sys.o.topLeftCorner(p, nx) = model.c;
  sys.o.block(p, nx, l, nu) = model.d;
  sys.o.bottomLeftCorner(p, nx) = model.c * model.a;
  sys.o.bottomRightCorner(p, nu) = model.c * model.b;

  sys.weight = Mat::Zero(2 * p + l, 2 * p + l);
  sys.weight.topLeftCorner(p, p) = model.r_x;
  sys.weight.block(p, p, l, l) = model.r_u;
  sys.weight.bottomRightCorner(p, p) =
      symmetrize(model.c * model.q * model.c.transpose() + model.r_x);

  sys.rhs.resize(2 * p + l);
  sys.rhs << prev.z_x, prev.z_u, curr_zx;
  return sys;
}

namespace {

struct WhitenedSolve {
  Vec solution;
  Mat covariance;
};

// Least squares on an already whitened system: min |A s - b|^2.
WhitenedSolve solve_whitened(const Mat& a, const Vec& b) {
  const int cols = static_cast<int>(a.cols());
  const int rank = numerical_rank(a);
  if (rank < cols) {
    ObservabilityReport report;
    report.rank = rank;
    report.required = cols;
    report.observable = false;
    report.note = "regression matrix is rank deficient";
    throw UnobservableError(report);
  }
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  WhitenedSolve out;
  out.solution = qr.solve(b);
  const Mat r = qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  const Mat r_inv = r.triangularView<Eigen::Upper>().solve(Mat::Identity(cols, cols));
  const auto& perm = qr.colsPermutation();
  out.covariance = symmetrize(perm * (r_inv * r_inv.transpose()) * perm.transpose());
  return out;
}

}  // namespace

WlsSolution solve_wls(const Mat& h, const Mat& covariance, const Vec& z) {
  if (covariance.rows() != h.rows() || covariance.cols() != h.rows() || z.size() != h.rows())
    throw DimensionError("solve_wls: dimension mismatch");
  Eigen::LLT<Mat> llt(covariance);
  if (llt.info() != Eigen::Success) throw NumericalError("WLS covariance is not SPD");
  WhitenedSolve sol = solve_whitened(llt.matrixL().solve(h), llt.matrixL().solve(z));
  return {std::move(sol.solution), std::move(sol.covariance)};
}

JointEstimate solve_batch_wls(const RegressionSystem& sys, int k) {
  WlsSolution sol = solve_wls(sys.o, sys.weight, sys.rhs);
  JointEstimate est;
  est.k = k;
  est.x = sol.x.head(sys.state_dim);
  est.u = sol.x.tail(sys.input_dim);
  est.p = std::move(sol.p);
  return est;
}

Prediction predict(const DiscreteModel& model, const JointEstimate& est) {
  Mat ab(model.state_dim(), model.state_dim() + model.input_dim());
  ab << model.a, model.b;
  Prediction pred;
  pred.k = est.k + 1;
  pred.x = model.a * est.x + model.b * est.u;
  pred.p = symmetrize(ab * est.p * ab.transpose() + model.q);
  return pred;
}

FilteredState update(const DiscreteModel& model, const Prediction& pred, const Vec& z_x) {
  if (z_x.size() != model.state_meas_dim()) throw DimensionError("update: z_x dimension");
  const Mat cp = model.c * pred.p;
  const Mat s = symmetrize(cp * model.c.transpose() + model.r_x);
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is not SPD");
  const Mat gain = llt.solve(cp).transpose();  // P C^T S^-1

  FilteredState out;
  out.k = pred.k;
  out.x = pred.x + gain * (z_x - model.c * pred.x);
  const Mat ikc = Mat::Identity(pred.p.rows(), pred.p.cols()) - gain * model.c;
  out.p = symmetrize(ikc * pred.p);
  return out;
}

RegressionResidual regression_residual(const RegressionSystem& sys, const JointEstimate& est) {
  RegressionResidual out;
  out.r = sys.rhs - sys.o * est.joint();
  Eigen::LLT<Mat> llt(sys.weight);
  if (llt.info() != Eigen::Success) throw NumericalError("regression weight is not SPD");
  out.d_m = llt.matrixL().solve(out.r).norm();
  out.dof = static_cast<int>(sys.o.rows() - sys.o.cols());
  return out;
}

DsieFilter::DsieFilter(DiscreteModel model) : model_(std::move(model)) {}

DsieOutput DsieFilter::step(const MeasurementFrame& prev, const MeasurementFrame& curr) {
  if (prev.k + 1 != curr.k) throw SyncError("dsie step needs consecutive frames");
  const RegressionSystem sys = assemble_regression(model_, prev, curr.z_x);
  DsieOutput out;
  out.joint = solve_batch_wls(sys, prev.k);
  out.residual = regression_residual(sys, out.joint);
  out.prediction = predict(model_, out.joint);
  out.filtered = update(model_, out.prediction, curr.z_x);
  last_estimate_ = out.joint;
  last_prediction_ = out.prediction;
  return out;
}

StaticEstimate static_wls_baseline(const Mat& h, const Mat& w, const Vec& z) {
  if (h.rows() != z.size() || w.rows() != h.rows() || w.cols() != h.rows())
    throw DimensionError("static_wls_baseline: dimension mismatch");
  Eigen::LLT<Mat> llt(w);
  if (llt.info() != Eigen::Success) throw NumericalError("WLS weight is not SPD");
  const Mat lt = llt.matrixU();  // W = L L^T = U^T U
  const WhitenedSolve sol = solve_whitened(lt * h, lt * z);
  return {sol.solution, sol.covariance};
}

QuasiStaticModel build_quasi_static(const NetworkTopology& topology,
                                    const MeasurementLayout& layout, const DiscreteModel& model) {
  const IncidenceMatrix inc = build_incidence(topology);
  const int p = static_cast<int>(layout.metered_branches.size());
  const int l = static_cast<int>(layout.metered_buses.size());
  CMat h_current = CMat::Zero(p, topology.num_buses());
  for (int r = 0; r < p; ++r) {
    const int k = layout.metered_branches[r];
    const Complex y = 1.0 / topology.impedance(k);
    for (int i = 0; i < topology.num_buses(); ++i)
      if (inc.entries(k, i) != 0) h_current(r, i) = static_cast<double>(inc.entries(k, i)) * y;
  }
  QuasiStaticModel qs;
  qs.state_meas_dim = 2 * p;
  qs.h = Mat::Zero(2 * p + 2 * l, 2 * topology.num_buses());
  qs.h.topRows(2 * p) = stack(h_current);
  qs.h.bottomRows(2 * l) = pair_selection(layout.metered_buses, topology.num_buses());

  qs.r = Mat::Zero(2 * p + 2 * l, 2 * p + 2 * l);
  const Mat cqc = model.c * model.q * model.c.transpose();
  qs.r.topLeftCorner(2 * p, 2 * p) = (model.r_x + cqc).diagonal().asDiagonal();
  qs.r.bottomRightCorner(2 * l, 2 * l) = model.r_u.diagonal().asDiagonal();
  qs.w = qs.r.diagonal().cwiseInverse().asDiagonal();
  return qs;
}

Vec quasi_static_measurement(const MeasurementFrame& frame) {
  Vec z(frame.z_x.size() + frame.z_u.size());
  z << frame.z_x, frame.z_u;
  return z;
}

TrackingEstimator::TrackingEstimator(QuasiStaticModel model, double process_variance)
    : model_(std::move(model)), q_(process_variance) {
  if (!(q_ > 0.0)) throw ParameterError("tracking estimator needs a positive process variance");
}

TrackingEstimator::Output TrackingEstimator::step(const MeasurementFrame& frame) {
  const Vec z = quasi_static_measurement(frame);
  if (z.size() != model_.h.rows()) throw DimensionError("tracking estimator: frame dimension");
  Output out;
  out.k = frame.k;
  if (!initialized_) {
    StaticEstimate init = static_wls_baseline(model_.h, model_.w, z);
    v_ = std::move(init.x);
    p_ = std::move(init.p);
    initialized_ = true;
    out.v = v_;
    out.p = p_;
    return out;
  }
  const Eigen::Index n = v_.size();
  p_ += q_ * Mat::Identity(n, n);
  out.innovation = z - model_.h * v_;
  const Mat hp = model_.h * p_;
  out.innovation_cov = symmetrize(hp * model_.h.transpose() + model_.r);
  Eigen::LLT<Mat> llt(out.innovation_cov);
  if (llt.info() != Eigen::Success) throw NumericalError("TSE innovation covariance is not SPD");
  const Mat gain = llt.solve(hp).transpose();
  v_ += gain * out.innovation;
  p_ = symmetrize((Mat::Identity(n, n) - gain * model_.h) * p_);
  out.v = v_;
  out.p = p_;
  return out;
}

}  // namespace dsie
