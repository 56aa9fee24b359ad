#include "dsie/detection.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

namespace dsie {

Innovation innovation(const RegressionSystem& sys, const JointEstimate& prior) {
  const Vec z = prior.joint();
  if (z.size() != sys.o.cols() || prior.p.rows() != sys.o.cols())
    throw DimensionError("innovation: prior dimension does not match the regression");
  Innovation out;
  out.y = sys.rhs - sys.o * z;
  out.s = symmetrize(sys.o * prior.p * sys.o.transpose() + sys.weight);
  return out;
}

Vec residual_static(const Vec& z, const Mat& h, const Mat& w) {
  const StaticEstimate est = static_wls_baseline(h, w, z);
  return z - h * est.x;
}

double mahalanobis(const Vec& y, const Mat& s) {
  if (s.rows() != y.size() || s.cols() != y.size())
    throw DimensionError("mahalanobis: covariance dimension");
  if (y.size() == 0) return 0.0;
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("mahalanobis: covariance is not SPD");
  return llt.matrixL().solve(y).norm();
}

double chi_square_quantile(double probability, int dof) {
  if (dof < 1) throw ParameterError("chi-square needs dof >= 1");
  return boost::math::quantile(boost::math::chi_squared(dof), probability);
}

double chi_square_cdf(double x, int dof) {
  if (dof < 1) throw ParameterError("chi-square needs dof >= 1");
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::chi_squared(dof), x);
}

DetectionReport detect(double d_m, int dof, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("detect: alpha must lie in (0, 1)");
  DetectionReport report;
  report.d_m = d_m;
  report.dof = dof;
  report.threshold = std::sqrt(chi_square_quantile(1.0 - alpha, dof));
  report.flag = d_m * d_m > report.threshold * report.threshold ? Verdict::kBadData
                                                                 : Verdict::kClean;
  return report;
}

AttackVector build_fdia(const AttackSpec& spec, const NetworkTopology& topology,
                        const MeasurementLayout& layout) {
  if (spec.target_buses.size() != spec.bias.size())
    throw ConfigError("attack: one bias value per target bus");
  std::vector<int> targets;
  for (int id : spec.target_buses) {
    if (!topology.has_bus(id)) throw ConfigError("attack targets unknown bus " + std::to_string(id));
    targets.push_back(topology.bus_index(id));
  }
  auto target_col = [&](int bus) {
    auto it = std::find(targets.begin(), targets.end(), bus);
    return it == targets.end() ? -1 : static_cast<int>(it - targets.begin());
  };
  auto metered = [&](int k) {
    return std::find(layout.metered_branches.begin(), layout.metered_branches.end(), k) !=
           layout.metered_branches.end();
  };

  AttackVector out;
  std::vector<bool> covered(targets.size(), false);
  for (int k = 0; k < topology.num_branches(); ++k) {
    if (!metered(k)) continue;
    const int cf = target_col(topology.bus_index(topology.branches[k].from));
    const int ct = target_col(topology.bus_index(topology.branches[k].to));
    const bool take = spec.scope == AttackScope::kEnclosedBranches ? (cf >= 0 && ct >= 0)
                                                                   : (cf >= 0 || ct >= 0);
    if (!take) continue;
    out.branches.push_back(k);
    if (cf >= 0) covered[cf] = true;
    if (ct >= 0) covered[ct] = true;
  }
  for (std::size_t t = 0; t < targets.size(); ++t)
    if (!covered[t])
      throw AttackInfeasibleError("attack target bus " + std::to_string(spec.target_buses[t]) +
                                  " has no metered incident branch");

  const CVec xb = Eigen::Map<const CVec>(spec.bias.data(), static_cast<Eigen::Index>(spec.bias.size()));
  out.h = CMat::Zero(static_cast<Eigen::Index>(out.branches.size()),
                     static_cast<Eigen::Index>(targets.size()));
  for (std::size_t r = 0; r < out.branches.size(); ++r) {
    const int k = out.branches[r];
    const Complex y = 1.0 / topology.impedance(k);
    const int cf = target_col(topology.bus_index(topology.branches[k].from));
    const int ct = target_col(topology.bus_index(topology.branches[k].to));
    if (cf >= 0) out.h(r, cf) += y;
    if (ct >= 0) out.h(r, ct) -= y;
  }
  out.a = out.h * xb;

  if (spec.scope == AttackScope::kStealth) {
    std::vector<Complex> bias;
    for (int bus : layout.metered_buses) {
      const int c = target_col(bus);
      if (c < 0) continue;
      out.voltage_buses.push_back(bus);
      bias.push_back(spec.bias[c]);
    }
    out.voltage_bias = Eigen::Map<CVec>(bias.data(), static_cast<Eigen::Index>(bias.size()));
  } else {
    out.voltage_bias = CVec(0);
  }
  return out;
}

std::vector<MeasurementFrame> inject(const std::vector<MeasurementFrame>& frames,
                                     const AttackVector& attack, const MeasurementLayout& layout,
                                     int start_step, int end_step) {
  std::vector<MeasurementFrame> out = frames;
  if (start_step > end_step || frames.empty()) return out;
  const int first = frames.front().k;
  const int last = frames.back().k;
  if (start_step > last || end_step < first || start_step < first)
    throw ParameterError("attack window lies outside the run");

  // Row offsets of the attacked measurements in layout order.
  std::vector<std::pair<int, Complex>> current_rows;
  for (std::size_t r = 0; r < attack.branches.size(); ++r) {
    auto it = std::find(layout.metered_branches.begin(), layout.metered_branches.end(),
                        attack.branches[r]);
    if (it == layout.metered_branches.end())
      throw DimensionError("attack row targets an unmetered branch");
    current_rows.emplace_back(static_cast<int>(it - layout.metered_branches.begin()), attack.a(r));
  }
  std::vector<std::pair<int, Complex>> voltage_rows;
  for (std::size_t r = 0; r < attack.voltage_buses.size(); ++r) {
    auto it = std::find(layout.metered_buses.begin(), layout.metered_buses.end(),
                        attack.voltage_buses[r]);
    if (it == layout.metered_buses.end()) throw DimensionError("attack row targets an unmetered bus");
    voltage_rows.emplace_back(static_cast<int>(it - layout.metered_buses.begin()),
                              attack.voltage_bias(r));
  }

  for (MeasurementFrame& f : out) {
    if (f.k < start_step || f.k > end_step) continue;
    for (const auto& [row, value] : current_rows) {
      f.z_x(2 * row) += value.real();
      f.z_x(2 * row + 1) += value.imag();
    }
    for (const auto& [row, value] : voltage_rows) {
      f.z_u(2 * row) += value.real();
      f.z_u(2 * row + 1) += value.imag();
    }
  }
  return out;
}

}  // namespace dsie
