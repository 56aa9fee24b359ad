#include "dsie/linalg.hpp"

#include <utility>

namespace dsie {

UnobservableError::UnobservableError(ObservabilityReport report)
    : Error("model is unobservable: rank " + std::to_string(report.rank) + " < required " +
            std::to_string(report.required)),
      report_(std::move(report)) {}

Eigen::Matrix2d real_block(Complex c) {
  Eigen::Matrix2d b;
  b << c.real(), -c.imag(), c.imag(), c.real();
  return b;
}

Vec stack(const CVec& v) {
  Vec out(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out(2 * i) = v(i).real();
    out(2 * i + 1) = v(i).imag();
  }
  return out;
}

CVec unstack(const Vec& v) {
  if (v.size() % 2 != 0) throw DimensionError("unstack: odd-length vector");
  CVec out(v.size() / 2);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = Complex(v(2 * i), v(2 * i + 1));
  return out;
}

Mat stack(const CMat& m) {
  Mat out = Mat::Zero(2 * m.rows(), 2 * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != Complex(0.0, 0.0)) out.block<2, 2>(2 * r, 2 * c) = real_block(m(r, c));
  return out;
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

int numerical_rank(const Mat& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = rel_tol * s(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;
  return rank;
}

Mat pair_selection(const std::vector<int>& indices, int total_pairs) {
  Mat t = Mat::Zero(2 * static_cast<Eigen::Index>(indices.size()), 2 * total_pairs);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int c = indices[r];
    if (c < 0 || c >= total_pairs) throw DimensionError("pair_selection: index out of range");
    t(2 * r, 2 * c) = 1.0;
    t(2 * r + 1, 2 * c + 1) = 1.0;
  }
  return t;
}

}  // namespace dsie
