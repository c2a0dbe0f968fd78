#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "radgp/dag.hpp"
#include "radgp/draws.hpp"
#include "radgp/error.hpp"
#include "radgp/kernels.hpp"
#include "radgp/partition.hpp"
#include "radgp/precision.hpp"
#include "radgp/rng.hpp"

namespace radgp {

// Joint-prediction plan over T_1 ∪ T_2: the alternating partition extended by
// the test locations and the radial DAG rebuilt over the union. Extension
// never reorders or reparents the training prefix, so the training factor
// stays valid. Test nodes appear in extended order; a test node's parents may
// include earlier test nodes, which is what carries between-test dependence.
struct PredictionPlan {
  LocationSet combined;           // training rows first, then test rows
  AlternatingPartition partition; // over the combined set
  RadialDag dag;                  // over the combined set
  int n_train = 0;
  int n_test = 0;
  std::vector<int> test_positions;  // extended-order positions of test nodes, ascending
};

/// Extend the partition/DAG of the training set by a test set. The training
/// structures are rebuilt over the combined set and are bit-identical to the
/// originals on the training prefix.
inline PredictionPlan build_prediction_plan(const AlternatingPartition& training_partition,
                                            const LocationSet& training, const LocationSet& tests,
                                            double rho, std::uint64_t seed) {
  if (tests.size() > 0 && tests.dim() != training.dim())
    throw Error("predict", "test dimension does not match training dimension");
  PredictionPlan plan;
  plan.n_train = static_cast<int>(training.size());
  plan.n_test = static_cast<int>(tests.size());

  Matrix all(plan.n_train + plan.n_test, training.dim());
  all.topRows(plan.n_train) = training.coords();
  if (plan.n_test > 0) all.bottomRows(plan.n_test) = tests.coords();
  plan.combined = LocationSet(all);  // rejects test points duplicating training points

  std::vector<int> new_ids(plan.n_test);
  for (int i = 0; i < plan.n_test; ++i) new_ids[i] = plan.n_train + i;
  plan.partition = extend_partition(training_partition, plan.combined, new_ids, rho, seed);
  plan.dag = build_dag(plan.partition, plan.combined);

  for (int pos = 0; pos < plan.dag.size(); ++pos)
    if (plan.dag.order[pos] >= plan.n_train) plan.test_positions.push_back(pos);
  return plan;
}

namespace detail {

// conditional coefficients and standard deviation for one node given its
// parents, under the true kernel (optionally with a nugget on the diagonal)
struct NodeConditional {
  std::vector<int> parents;  // extended positions
  Vector coef;
  double sd = 0.0;
};

inline NodeConditional node_conditional(const PredictionPlan& plan, const KernelSpec& k, int pos,
                                        double nugget = 0.0) {
  NodeConditional nc;
  auto [b, e] = plan.dag.parents(pos);
  nc.parents.assign(b, e);
  const int np = static_cast<int>(nc.parents.size());
  const double k0 = k.variance() + nugget;
  if (np == 0) {
    nc.sd = std::sqrt(k0);
    return nc;
  }
  const Eigen::RowVectorXd wi = plan.combined.point(plan.dag.order[pos]);
  Matrix cpp(np, np);
  Vector cpi(np);
  for (int a = 0; a < np; ++a) {
    const Eigen::RowVectorXd wa = plan.combined.point(plan.dag.order[nc.parents[a]]);
    cpi[a] = kernel_value(k, (wa - wi).norm());
    cpp(a, a) = k0;
    for (int c = 0; c < a; ++c) {
      const Eigen::RowVectorXd wc = plan.combined.point(plan.dag.order[nc.parents[c]]);
      double v = kernel_value(k, (wa - wc).norm());
      cpp(a, c) = v;
      cpp(c, a) = v;
    }
  }
  Eigen::LLT<Matrix> llt(cpp);
  if (llt.info() != Eigen::Success)
    throw Error("predict", "parent block factorization failed at extended position " +
                               std::to_string(pos));
  nc.coef = llt.solve(cpi);
  double var = k0 - cpi.dot(nc.coef);
  nc.sd = std::sqrt(std::max(var, 0.0));
  return nc;
}

}  // namespace detail

/// Joint posterior prediction for the latent model: for each retained
/// iteration traverse the test nodes in extended order, sampling each from
/// its parent conditional under that iteration's theta. Fills draws.z_test
/// (latent process) and draws.y_test (plus X beta and nugget noise when
/// requested). Iterations use independent RNG substreams, so appending a
/// later test set never changes earlier draws.
inline void sample_prediction(const PredictionPlan& plan, PosteriorDraws& draws,
                              const KernelSpec& kernel_template, const Rng& master,
                              const Matrix& x_test = Matrix(), bool include_nugget = true) {
  const int n_ret = draws.n_retained();
  const int nt = plan.n_test;
  draws.z_test = Matrix::Zero(n_ret, nt);
  draws.y_test = Matrix::Zero(n_ret, nt);
  if (nt == 0 || n_ret == 0) return;
  if (draws.z_train.cols() != plan.n_train)
    throw Error("predict", "draws carry no training latent field of matching size");

  // per-theta conditional cache; consecutive iterations share theta whenever
  // the MH step rejected, which is the common case
  std::vector<detail::NodeConditional> cache;
  std::vector<double> cache_theta;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) firstprivate(cache, cache_theta)
#endif
  for (int r = 0; r < n_ret; ++r) {
    const int iter = draws.retained[r];
    std::vector<double> theta(draws.theta.cols());
    for (Eigen::Index j = 0; j < draws.theta.cols(); ++j) theta[j] = draws.theta(iter - 1, j);
    if (theta != cache_theta) {
      KernelSpec k = kernel_template.with_params(theta);
      cache.resize(plan.test_positions.size());
      for (std::size_t t = 0; t < plan.test_positions.size(); ++t)
        cache[t] = detail::node_conditional(plan, k, plan.test_positions[t]);
      cache_theta = theta;
    }

    Rng rng = master.substream(0x9e77u + static_cast<std::uint64_t>(iter));
    Vector values = Vector::Zero(plan.dag.size());
    // the training prefix holds this iteration's latent field
    for (int pos = 0; pos < plan.n_train; ++pos)
      values[pos] = draws.z_train(r, plan.dag.order[pos]);
    for (std::size_t t = 0; t < plan.test_positions.size(); ++t) {
      const auto& nc = cache[t];
      double mean = 0.0;
      for (std::size_t a = 0; a < nc.parents.size(); ++a)
        mean += nc.coef[a] * values[nc.parents[a]];
      double zval = mean + nc.sd * rng.normal();
      int pos = plan.test_positions[t];
      values[pos] = zval;
      int test_id = plan.dag.order[pos] - plan.n_train;
      draws.z_test(r, test_id) = zval;
      double y = zval;
      if (x_test.size() > 0 && draws.beta.cols() > 0)
        y += x_test.row(test_id).dot(draws.beta.row(iter - 1));
      if (include_nugget) y += std::sqrt(draws.sigma2[iter - 1]) * rng.normal();
      draws.y_test(r, test_id) = y;
    }
  }
}

/// Response-model joint prediction, Z~_{T2} drawn from
///   N(Sigma_{T2,T1} Phi~ r, Sigma_{T2,T2} - Sigma_{T2,T1} Phi~ Sigma_{T1,T2})
/// with r = Y - X beta and Phi~ the nugget-augmented RadGP precision on the
/// training set; X_{T2} beta is added afterwards. Dense in |T2|, so capped.
inline void sample_prediction_response(const PredictionPlan& plan, PosteriorDraws& draws,
                                       const KernelSpec& kernel_template, const RadialDag& train_dag,
                                       const LocationSet& training, const Vector& y_train,
                                       const Matrix& x_train, const Rng& master,
                                       const Matrix& x_test = Matrix(), int cap = 500) {
  const int n_ret = draws.n_retained();
  const int nt = plan.n_test;
  draws.z_test = Matrix::Zero(n_ret, nt);
  draws.y_test = Matrix::Zero(n_ret, nt);
  if (nt == 0 || n_ret == 0) return;
  if (nt > cap)
    throw Error("predict", "response-model joint prediction is dense in |T2|; " +
                               std::to_string(nt) + " exceeds cap " + std::to_string(cap));
  const int n = static_cast<int>(training.size());

  // cross covariance in training order once; kernel params scale it per draw
  Matrix dist_cross(nt, n);
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < n; ++i)
      dist_cross(j, i) =
          (plan.combined.point(plan.n_train + j) - training.point(train_dag.order[i])).norm();
  Matrix dist_test(nt, nt);
  for (int a = 0; a < nt; ++a)
    for (int b = 0; b < nt; ++b)
      dist_test(a, b) = (plan.combined.point(plan.n_train + a) - plan.combined.point(plan.n_train + b)).norm();

  std::vector<double> cache_key;
  SparseFactor factor;
  Eigen::LLT<Matrix> cond_llt;
  Matrix cross;  // Sigma_{T2,T1} in training order

  for (int r = 0; r < n_ret; ++r) {
    const int iter = draws.retained[r];
    std::vector<double> key(draws.theta.cols() + 1);
    for (Eigen::Index j = 0; j < draws.theta.cols(); ++j) key[j] = draws.theta(iter - 1, j);
    key.back() = draws.sigma2[iter - 1];
    if (key != cache_key) {
      std::vector<double> tp(key.begin(), key.end() - 1);
      KernelSpec k = kernel_template.with_params(tp);
      factor = build_sparse_factor(train_dag, k, training, 0.0, key.back());
      cross = Matrix(nt, n);
      for (int j = 0; j < nt; ++j)
        for (int i = 0; i < n; ++i) cross(j, i) = kernel_value(k, dist_cross(j, i));
      Matrix ctt(nt, nt);
      for (int a = 0; a < nt; ++a)
        for (int b = 0; b < nt; ++b)
          ctt(a, b) = a == b ? k.variance() : kernel_value(k, dist_test(a, b));
      Matrix phic(n, nt);
      for (int j = 0; j < nt; ++j) phic.col(j) = apply_precision(factor, cross.row(j).transpose());
      Matrix cond = ctt - cross * phic;
      cond_llt.compute(0.5 * (cond + cond.transpose()) + 1e-12 * Matrix::Identity(nt, nt));
      if (cond_llt.info() != Eigen::Success)
        throw Error("predict", "response predictive covariance not positive definite");
      cache_key = key;
    }

    Vector r_vec(n);
    for (int i = 0; i < n; ++i) {
      int loc = train_dag.order[i];
      double xb = 0.0;
      if (x_train.size() > 0 && draws.beta.cols() > 0)
        xb = x_train.row(loc).dot(draws.beta.row(iter - 1));
      r_vec[i] = y_train[loc] - xb;
    }
    Vector mean = cross * apply_precision(factor, r_vec);

    Rng rng = master.substream(0x7e55u + static_cast<std::uint64_t>(iter));
    Vector w(nt);
    for (int j = 0; j < nt; ++j) w[j] = rng.normal();
    Vector z = mean + Matrix(cond_llt.matrixL()) * w;
    for (int j = 0; j < nt; ++j) {
      draws.z_test(r, j) = z[j];
      double y = z[j];
      if (x_test.size() > 0 && draws.beta.cols() > 0) y += x_test.row(j).dot(draws.beta.row(iter - 1));
      draws.y_test(r, j) = y;
    }
  }
}

}  // namespace radgp
