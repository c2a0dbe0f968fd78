#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "radgp/dag.hpp"
#include "radgp/error.hpp"
#include "radgp/kernels.hpp"

namespace radgp {

// Sparse factorization Phi = (I - B^T) D^{-1} (I - B) of a DAG Gaussian
// precision matrix, in ordered positions. Row i of B is supported on the
// node's parent set and holds the conditional regression coefficients; D is
// the diagonal of conditional variances. L = (I - B^T) D^{-1/2} satisfies
// Phi = L L^T.
struct SparseFactor {
  std::vector<int> offsets;      // size n+1, shared layout with the DAG
  std::vector<int> cols;         // parent positions, ascending per row
  std::vector<double> b;         // coefficients aligned with cols
  Vector d;                      // conditional variances, all > 0
  double nugget = 0.0;           // diagonal added to the kernel when built

  int size() const { return static_cast<int>(d.size()); }

  // y = (I - B) x
  Vector apply_unit_lower(const Vector& x) const {
    Vector y = x;
    for (int i = 0; i < size(); ++i)
      for (int k = offsets[i]; k < offsets[i + 1]; ++k) y[i] -= b[k] * x[cols[k]];
    return y;
  }

  // y = (I - B^T) x
  Vector apply_unit_upper(const Vector& x) const {
    Vector y = x;
    for (int i = 0; i < size(); ++i)
      for (int k = offsets[i]; k < offsets[i + 1]; ++k) y[cols[k]] -= b[k] * x[i];
    return y;
  }

  double log_det_precision() const { return -d.array().log().sum(); }

  // diag(Phi)[j] = 1/d_j + sum over rows i with parent j of b_ij^2 / d_i
  Vector precision_diagonal() const {
    Vector diag = d.cwiseInverse();
    for (int i = 0; i < size(); ++i)
      for (int k = offsets[i]; k < offsets[i + 1]; ++k) diag[cols[k]] += b[k] * b[k] / d[i];
    return diag;
  }

  Matrix dense_B() const {
    Matrix out = Matrix::Zero(size(), size());
    for (int i = 0; i < size(); ++i)
      for (int k = offsets[i]; k < offsets[i + 1]; ++k) out(i, cols[k]) = b[k];
    return out;
  }

  // L = (I - B^T) D^{-1/2}, columns l_i supported on {i} ∪ parents(i)
  Matrix dense_L() const {
    const int n = size();
    Matrix L = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const double s = 1.0 / std::sqrt(d[i]);
      L(i, i) = s;
      for (int k = offsets[i]; k < offsets[i + 1]; ++k) L(cols[k], i) = -b[k] * s;
    }
    return L;
  }

  Matrix dense_precision() const {
    Matrix L = dense_L();
    return L * L.transpose();
  }
};

/// Phi x without materializing Phi: two sparse triangular products and a
/// diagonal scale.
inline Vector apply_precision(const SparseFactor& f, const Vector& x) {
  if (x.size() != f.size()) throw Error("precision", "dimension mismatch in apply_precision");
  Vector y = f.apply_unit_lower(x);
  y.array() /= f.d.array();
  return f.apply_unit_upper(y);
}

/// L w; for standard-normal w the result has covariance Phi.
inline Vector apply_sqrt_factor(const SparseFactor& f, const Vector& w) {
  if (w.size() != f.size()) throw Error("precision", "dimension mismatch in apply_sqrt_factor");
  Vector y = w.array() / f.d.array().sqrt();
  return f.apply_unit_upper(y);
}

/// Per-row construction of the RadGP factor: solve the parent-block SPD
/// system for the regression coefficients and keep the conditional variance.
/// Rows are independent, so construction runs in parallel. `jitter` is an
/// absolute ridge added to the parent block only if its Cholesky fails; the
/// default 0 keeps the parent blocks exact. `nugget` adds observation-noise
/// variance to the kernel diagonal (response-model use).
inline SparseFactor build_sparse_factor(const RadialDag& dag, const KernelSpec& k,
                                        const LocationSet& locations, double jitter = 0.0,
                                        double nugget = 0.0) {
  const int n = dag.size();
  SparseFactor f;
  f.offsets = dag.parent_offsets;
  f.cols = dag.parent_index;
  f.b.assign(f.cols.size(), 0.0);
  f.d = Vector::Zero(n);
  f.nugget = nugget;
  const double k0 = k.variance() + nugget;

  std::vector<std::string> row_errors;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (int i = 0; i < n; ++i) {
    const int np = dag.n_parents(i);
    if (np == 0) {
      f.d[i] = k0;
      continue;
    }
    const Eigen::RowVectorXd wi = locations.point(dag.order[i]);
    Matrix cpp(np, np);
    Vector cpi(np);
    const int off = f.offsets[i];
    for (int a = 0; a < np; ++a) {
      const Eigen::RowVectorXd wa = locations.point(dag.order[f.cols[off + a]]);
      cpi[a] = kernel_value(k, (wa - wi).norm());
      cpp(a, a) = k0;
      for (int c = 0; c < a; ++c) {
        const Eigen::RowVectorXd wc = locations.point(dag.order[f.cols[off + c]]);
        double v = kernel_value(k, (wa - wc).norm());
        cpp(a, c) = v;
        cpp(c, a) = v;
      }
    }
    Eigen::LLT<Matrix> llt(cpp);
    if (llt.info() != Eigen::Success && jitter > 0.0) {
      llt.compute(cpp + jitter * Matrix::Identity(np, np));
      if (llt.info() == Eigen::Success) {
#ifdef _OPENMP
#pragma omp critical
#endif
        std::fprintf(stderr, "[radgp] warning: jitter %g applied to parent block of row %d\n",
                     jitter, i);
      }
    }
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(cpp, Eigen::EigenvaluesOnly);
#ifdef _OPENMP
#pragma omp critical
#endif
      row_errors.push_back("row " + std::to_string(i) + " parent block singular (min eigenvalue ~" +
                           std::to_string(es.eigenvalues().minCoeff()) + ")");
      continue;
    }
    Vector coef = llt.solve(cpi);
    for (int a = 0; a < np; ++a) f.b[off + a] = coef[a];
    f.d[i] = k0 - cpi.dot(coef);
  }
  if (!row_errors.empty()) throw Error("precision", row_errors.front());
  if ((f.d.array() <= 0.0).any())
    throw Error("precision", "nonpositive conditional variance; increase jitter or check q > 0");
  return f;
}

/// Exact-GP counterpart with full parent sets nu(i) = {j < i}, derived from
/// one Cholesky of the dense covariance in the same ordering. Diagnostic
/// sizes only.
inline SparseFactor build_exact_factor(const LocationSet& locations, const KernelSpec& k,
                                       const std::vector<int>& order, double nugget = 0.0,
                                       int cap = 2000) {
  const int n = static_cast<int>(order.size());
  if (n > cap)
    throw Error("precision", "n=" + std::to_string(n) + " above diagnostic cap " +
                                 std::to_string(cap) + "; dense factor is diagnostics-only");
  Matrix sigma(n, n);
  for (int i = 0; i < n; ++i) {
    sigma(i, i) = k.variance() + nugget;
    for (int j = 0; j < i; ++j) {
      double v = kernel_value(k, locations.distance(order[i], order[j]));
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error("precision", "dense covariance not positive definite (duplicate or near-duplicate points?)");
  Matrix Lc = llt.matrixL();
  // with U = Lc^{-1} (lower, positive diagonal), Sigma^{-1} = U^T U, so
  // D[i,i] = Lc[i,i]^2 and B = I - D^{1/2} U
  Matrix U = Lc.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  SparseFactor f;
  f.nugget = nugget;
  f.d = Vector::Zero(n);
  f.offsets.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) f.offsets[i + 1] = f.offsets[i] + i;
  f.cols.resize(f.offsets[n]);
  f.b.resize(f.offsets[n]);
  for (int i = 0; i < n; ++i) {
    f.d[i] = Lc(i, i) * Lc(i, i);
    for (int j = 0; j < i; ++j) {
      f.cols[f.offsets[i] + j] = j;
      f.b[f.offsets[i] + j] = -Lc(i, i) * U(i, j);
    }
  }
  return f;
}

inline SparseFactor build_exact_factor(const LocationSet& locations, const KernelSpec& k,
                                       double nugget = 0.0, int cap = 2000) {
  std::vector<int> order(locations.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  return build_exact_factor(locations, k, order, nugget, cap);
}

/// Sigma_hat = Phi^{-1} by dense solve; diagnostics only (default cap 2000).
inline Matrix dense_radgp_covariance(const SparseFactor& f, int cap = 2000) {
  const int n = f.size();
  if (n > cap)
    throw Error("precision", "n=" + std::to_string(n) + " above diagnostic cap " +
                                 std::to_string(cap) + "; use the operator form instead");
  // Phi = L L^T with L = (I - B^T) D^{-1/2}; solving the two triangular
  // systems column-wise inverts Phi without forming it
  Matrix L = f.dense_L();
  Matrix inv_l = L.triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
  Matrix out = inv_l.transpose() * inv_l;
  return 0.5 * (out + out.transpose());
}

}  // namespace radgp
