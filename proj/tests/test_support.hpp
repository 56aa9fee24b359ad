#pragma once

// Independent reference computations used as test oracles. None of these
// call into the library's solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dsie/network.hpp"
#include "dsie/simulation.hpp"

namespace dsie::testing {

// Classic fourth-order Runge-Kutta for x' = f(x) over [0, t] in `steps` steps.
inline Eigen::VectorXd rk4(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                           Eigen::VectorXd x, double t, int steps) {
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// ZOH pair (A, B) of x' = Ac x + Bc u by integrating unit initial states and
// unit held inputs.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> rk4_discretize(const Eigen::MatrixXd& ac,
                                                                  const Eigen::MatrixXd& bc,
                                                                  double dt, int steps) {
  const Eigen::Index n = ac.rows();
  const Eigen::Index m = bc.cols();
  Eigen::MatrixXd a(n, n), b(n, m);
  for (Eigen::Index j = 0; j < n; ++j)
    a.col(j) = rk4([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(ac * x); },
                   Eigen::VectorXd::Unit(n, j), dt, steps);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd u = Eigen::VectorXd::Unit(m, j);
    b.col(j) = rk4([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(ac * x + bc * u); },
                   Eigen::VectorXd::Zero(n), dt, steps);
  }
  return {a, b};
}

// Rank by Gaussian elimination with partial pivoting; pivots below
// rel_tol * max|entry| count as zero.
inline int elimination_rank(Eigen::MatrixXd m, double rel_tol = 1e-9) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index col = 0; col < m.cols() && rank < m.rows(); ++col) {
    Eigen::Index pivot = rank;
    for (Eigen::Index r = rank; r < m.rows(); ++r)
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    if (std::abs(m(pivot, col)) <= rel_tol * scale) continue;
    m.row(pivot).swap(m.row(rank));
    for (Eigen::Index r = rank + 1; r < m.rows(); ++r)
      m.row(r) -= m(r, col) / m(rank, col) * m.row(rank);
    ++rank;
  }
  return rank;
}

// (H^T R^-1 H)^-1 H^T R^-1 z through explicit inverses.
struct DenseWls {
  Eigen::VectorXd x;
  Eigen::MatrixXd p;
};

inline DenseWls dense_wls(const Eigen::MatrixXd& h, const Eigen::MatrixXd& r,
                          const Eigen::VectorXd& z) {
  const Eigen::MatrixXd r_inv = r.fullPivLu().inverse();
  const Eigen::MatrixXd info = h.transpose() * r_inv * h;
  const Eigen::MatrixXd p = info.fullPivLu().inverse();
  return {p * h.transpose() * r_inv * z, p};
}

// Same problem through a symmetric square root of R and an SVD
// pseudo-inverse of the whitened regressor.
inline Eigen::VectorXd pinv_wls(const Eigen::MatrixXd& h, const Eigen::MatrixXd& r,
                                const Eigen::VectorXd& z) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  const Eigen::MatrixXd r_inv_sqrt = eig.operatorInverseSqrt();
  const Eigen::MatrixXd a = r_inv_sqrt * h;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * sv(0)) inv(i) = 1.0 / sv(i);
  const Eigen::MatrixXd pinv = svd.matrixV().leftCols(sv.size()) * inv.asDiagonal() *
                               svd.matrixU().leftCols(sv.size()).transpose();
  return pinv * (r_inv_sqrt * z);
}

// Two-sided one-sample Kolmogorov-Smirnov p-value against a continuous CDF,
// with the Stephens small-sample correction of the asymptotic series.
inline double ks_pvalue(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sqrt_n = std::sqrt(n);
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double floor = 0.5) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return m * m.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// Buses 1..n+1 in a chain, branch k from bus k to k+1.
inline NetworkTopology chain(int branches, double r = 0.05, double l = 2e-4,
                             double omega = kDefaultOmega) {
  NetworkTopology t;
  t.omega = omega;
  for (int i = 1; i <= branches + 1; ++i) t.buses.push_back({i, 13.2e3});
  for (int k = 1; k <= branches; ++k)
    t.branches.push_back({std::to_string(k) + "-" + std::to_string(k + 1), k, k + 1, r, l});
  return t;
}

// The part of the Potsdam preset covered by the two-area split (areas 1, 2
// and 4), with its own sensors.
inline LocalArea potsdam_region(const Preset& p) {
  std::vector<int> branches, buses;
  for (const AreaSpec& a : potsdam_two_area_split(p.topology)) {
    branches.insert(branches.end(), a.branches.begin(), a.branches.end());
    buses.insert(buses.end(), a.buses.begin(), a.buses.end());
  }
  std::sort(branches.begin(), branches.end());
  std::sort(buses.begin(), buses.end());
  buses.erase(std::unique(buses.begin(), buses.end()), buses.end());
  return restrict_network(p.topology, p.layout, branches, buses, p.noise, p.bases,
                          p.scenario.dt_s);
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace dsie::testing
