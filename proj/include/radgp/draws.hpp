#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "radgp/error.hpp"
#include "radgp/geometry.hpp"

namespace radgp {

// Stored MCMC output. Parameter draws cover every iteration 1..L1; latent and
// prediction draws are kept for iterations >= L2 only (one row per retained
// iteration, in iteration order).
struct PosteriorDraws {
  Matrix beta;    // L1 x p
  Vector sigma2;  // L1
  Matrix theta;   // L1 x (number of kernel parameters)
  std::vector<std::string> theta_names;

  std::vector<int> retained;  // 1-based iteration indices >= L2
  Matrix z_train;             // retained x n, latent model only
  Matrix z_test;              // retained x |T2| latent process draws
  Matrix y_test;              // retained x |T2| predictive draws (with noise)

  int L1 = 0;
  int L2 = 0;
  std::uint64_t seed = 0;
  double theta_accept_rate = 0.0;      // post burn-in
  double cg_iterations_mean = 0.0;
  int cg_iterations_max = 0;

  int n_retained() const { return static_cast<int>(retained.size()); }
};

// empirical quantile with linear interpolation on the sorted draws
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error("draws", "quantile of empty vector");
  std::sort(v.begin(), v.end());
  double pos = q * (static_cast<double>(v.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[lo + 1];
}

inline double column_quantile(const Matrix& draws, Eigen::Index col, double q) {
  std::vector<double> v(draws.rows());
  for (Eigen::Index i = 0; i < draws.rows(); ++i) v[i] = draws(i, col);
  return quantile(std::move(v), q);
}

struct PredictionSummary {
  Vector post_mean, post_sd, lower, upper;
};

// central credible intervals at the given level from per-draw columns
inline PredictionSummary summarize_draws(const Matrix& draws, double level = 0.95) {
  PredictionSummary s;
  const Eigen::Index m = draws.cols();
  s.post_mean = draws.colwise().mean();
  s.post_sd = Vector(m);
  s.lower = Vector(m);
  s.upper = Vector(m);
  const double tail = (1.0 - level) / 2.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    double mu = s.post_mean[j];
    s.post_sd[j] = std::sqrt((draws.col(j).array() - mu).square().sum() /
                             std::max<double>(1.0, draws.rows() - 1.0));
    s.lower[j] = column_quantile(draws, j, tail);
    s.upper[j] = column_quantile(draws, j, 1.0 - tail);
  }
  return s;
}

// posterior mean of a parameter column over retained iterations
inline double retained_mean(const PosteriorDraws& d, const Vector& column) {
  double acc = 0.0;
  for (int it : d.retained) acc += column[it - 1];
  return acc / std::max(1, d.n_retained());
}

}  // namespace radgp
