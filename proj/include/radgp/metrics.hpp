#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "radgp/error.hpp"
#include "radgp/precision.hpp"
#include "radgp/rng.hpp"

namespace radgp {

namespace detail {

inline void check_symmetric(const Matrix& c, const char* what) {
  double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw Error("metrics", std::string(what) + " is not symmetric");
}

inline Vector psd_eigenvalues(const Matrix& c, const char* what) {
  check_symmetric(c, what);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  Vector ev = es.eigenvalues();
  const double lmax = std::max(0.0, ev.maxCoeff());
  if (ev.minCoeff() < -1e-8 * std::max(lmax, 1.0))
    throw Error("metrics", std::string(what) + " is indefinite beyond tolerance");
  return ev;
}

// symmetric PSD square root; eigenvalues below -tol reject, small negatives
// clamp to zero
inline Matrix psd_sqrt(const Matrix& c, const char* what) {
  check_symmetric(c, what);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()));
  Vector ev = es.eigenvalues();
  const double lmax = std::max(0.0, ev.maxCoeff());
  const double tol = 1e-12 * std::max(lmax, 1.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-8 * std::max(lmax, 1.0))
      throw Error("metrics", std::string(what) + " is indefinite beyond tolerance");
    ev[i] = ev[i] < tol ? 0.0 : ev[i];
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Squared Gaussian Wasserstein-2 distance,
///   ||m1-m2||^2 + tr C1 + tr C2 - 2 tr{(C1^{1/2} C2 C1^{1/2})^{1/2}},
/// clamped at zero against roundoff.
inline double w2_gaussian(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                          const Matrix& cov2) {
  if (cov1.rows() != cov2.rows() || mean1.size() != mean2.size() || mean1.size() != cov1.rows())
    throw Error("metrics", "dimension mismatch in w2_gaussian");
  Matrix s1 = detail::psd_sqrt(cov1, "cov1");
  detail::psd_eigenvalues(cov2, "cov2");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s1 * cov2 * s1);
  double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  double v = (mean1 - mean2).squaredNorm() + cov1.trace() + cov2.trace() - 2.0 * cross;
  return std::max(0.0, v);
}

/// Trace norm of cov1 - cov2; upper-bounds the squared Gaussian W2.
inline double w2_trace_bound(const Matrix& cov1, const Matrix& cov2) {
  if (cov1.rows() != cov2.rows() || cov1.cols() != cov2.cols())
    throw Error("metrics", "dimension mismatch in w2_trace_bound");
  Matrix diff = cov1 - cov2;
  if (diff.rows() == 0) return 0.0;
  return diff.jacobiSvd().singularValues().sum();
}

struct W2Report {
  double w2_squared = 0.0;
  double trace_bound = 0.0;
  std::optional<double> column_bound;  // empty when the spectral hypothesis fails
  bool column_hypothesis_met = false;
};

/// Column-norm bound on the trace distance: requires
/// ||L_hat - L||_2 <= ||Sigma||_2^{-1/2} / 2 and then returns
/// 8 n ||Sigma||_2^2 (2 max_i||l_i|| max_i||l_i - l_hat_i|| + max_i||l_i - l_hat_i||^2).
inline std::optional<double> w2_column_bound(const SparseFactor& exact, const SparseFactor& approx,
                                             const Matrix& cov) {
  if (exact.size() != approx.size() || cov.rows() != exact.size())
    throw Error("metrics", "ordering mismatch in w2_column_bound");
  const int n = exact.size();
  Matrix L = exact.dense_L();
  Matrix Lh = approx.dense_L();
  Matrix diff = Lh - L;
  double diff_2 = n == 0 ? 0.0 : diff.jacobiSvd().singularValues().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
  double sigma_2 = es.eigenvalues().maxCoeff();
  if (!(diff_2 <= 1.0 / (2.0 * std::sqrt(sigma_2)))) return std::nullopt;
  double max_l = 0.0, max_diff = 0.0;
  for (int i = 0; i < n; ++i) {
    max_l = std::max(max_l, L.col(i).norm());
    max_diff = std::max(max_diff, diff.col(i).norm());
  }
  return 8.0 * n * sigma_2 * sigma_2 * (2.0 * max_l * max_diff + max_diff * max_diff);
}

/// Full diagnostic report between an exact factor and a RadGP factor of the
/// same ordering.
inline W2Report w2_report(const SparseFactor& exact, const SparseFactor& approx, const Matrix& cov,
                          int cap = 2000) {
  W2Report rep;
  Matrix cov_hat = dense_radgp_covariance(approx, cap);
  Vector zero = Vector::Zero(cov.rows());
  rep.w2_squared = w2_gaussian(zero, cov, zero, cov_hat);
  rep.trace_bound = w2_trace_bound(cov, cov_hat);
  rep.column_bound = w2_column_bound(exact, approx, cov);
  rep.column_hypothesis_met = rep.column_bound.has_value();
  return rep;
}

/// Sliced Wasserstein-2 between two equal-size sample clouds (rows are
/// samples): the squared 1-D W2 of the projections, averaged over
/// `n_projections` uniformly random unit directions, square-rooted.
/// Deterministic given the seed.
inline double sliced_w2(const Matrix& samples_a, const Matrix& samples_b, int n_projections,
                        std::uint64_t seed) {
  if (samples_a.rows() == 0 || samples_b.rows() == 0)
    throw Error("metrics", "empty sample sets in sliced_w2");
  if (samples_a.cols() != samples_b.cols()) throw Error("metrics", "dimension mismatch in sliced_w2");
  if (samples_a.rows() != samples_b.rows())
    throw Error("metrics", "sliced_w2 requires equal sample counts; resample the larger cloud");
  if (n_projections < 1) throw Error("metrics", "n_projections must be >= 1");
  const Eigen::Index m = samples_a.rows();
  const Eigen::Index dim = samples_a.cols();
  Rng master(seed);

  // per-projection results land in a vector and are summed sequentially, so
  // the value does not depend on the thread schedule
  std::vector<double> per_projection(n_projections, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int p = 0; p < n_projections; ++p) {
    Rng rng = master.substream(static_cast<std::uint64_t>(p));
    Vector u(dim);
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index k = 0; k < dim; ++k) u[k] = rng.normal();
      norm = u.norm();
    }
    u /= norm;
    std::vector<double> pa(m), pb(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      pa[i] = samples_a.row(i).dot(u);
      pb[i] = samples_b.row(i).dot(u);
    }
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    double w2sq = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      double dd = pa[i] - pb[i];
      w2sq += dd * dd;
    }
    per_projection[p] = w2sq / static_cast<double>(m);
  }
  double total = 0.0;
  for (double v : per_projection) total += v;
  return std::sqrt(total / n_projections);
}

/// Mean squared error of posterior means against the truth, and the fraction
/// of truth values falling inside the per-location credible intervals.
inline std::pair<double, double> mse_and_coverage(const Vector& truth, const Vector& post_mean,
                                                  const Vector& lower, const Vector& upper) {
  const Eigen::Index n = truth.size();
  if (post_mean.size() != n || lower.size() != n || upper.size() != n)
    throw Error("metrics", "misaligned inputs in mse_and_coverage");
  if (n == 0) throw Error("metrics", "empty inputs in mse_and_coverage");
  double mse = (post_mean - truth).squaredNorm() / static_cast<double>(n);
  double covered = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (truth[i] >= lower[i] && truth[i] <= upper[i]) covered += 1.0;
  return {mse, covered / static_cast<double>(n)};
}

}  // namespace radgp
