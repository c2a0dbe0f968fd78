#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "radgp/dag.hpp"
#include "radgp/draws.hpp"
#include "radgp/error.hpp"
#include "radgp/kernels.hpp"
#include "radgp/partition.hpp"
#include "radgp/precision.hpp"
#include "radgp/predict.hpp"
#include "radgp/rng.hpp"

namespace radgp {

struct RegressionData {
  Matrix X;  // n x p covariates, p may be 0
  Vector y;
  LocationSet locations;

  void validate() const {
    if (y.size() != locations.size()) throw Error("inference", "response/location row mismatch");
    if (X.size() > 0 && X.rows() != y.size())
      throw Error("inference", "covariate/response row mismatch");
    if (!y.allFinite() || (X.size() > 0 && !X.allFinite()))
      throw Error("inference", "nonfinite entries in data");
  }

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.size() > 0 ? X.cols() : 0; }
};

// Prior for one kernel parameter. `fixed` keeps the initial value out of the
// MH block; `flat` is p() ∝ 1 restricted to [lo, hi].
struct ThetaPrior {
  enum class Kind { fixed, flat, inverse_gamma };
  Kind kind = Kind::flat;
  double a = 2.0, b = 1.0;
  double lo = 1e-8, hi = 1e8;

  bool sampled() const { return kind != Kind::fixed; }

  double log_density(double v) const {
    if (v < lo || v > hi || v <= 0.0) return -std::numeric_limits<double>::infinity();
    switch (kind) {
      case Kind::fixed: return 0.0;
      case Kind::flat: return 0.0;
      case Kind::inverse_gamma: return -(a + 1.0) * std::log(v) - b / v;
    }
    return 0.0;
  }
};

struct PriorSpec {
  // normal prior N(beta0, Phi0^{-1}); zero precision rows mean flat
  Vector beta_mean;
  Matrix beta_precision;
  double sigma2_a = 2.0, sigma2_b = 0.01;
  std::vector<ThetaPrior> theta;

  static PriorSpec defaults(Eigen::Index p, std::size_t n_theta) {
    PriorSpec pr;
    pr.beta_mean = Vector::Zero(p);
    pr.beta_precision = Matrix::Zero(p, p);
    pr.theta.resize(n_theta);
    return pr;
  }

  double sigma2_mean() const { return sigma2_a > 1.0 ? sigma2_b / (sigma2_a - 1.0) : sigma2_b; }

  void validate() const {
    if (!(sigma2_a > 0.0) || !(sigma2_b > 0.0))
      throw Error("inference", "sigma2 prior needs a0 > 0 and b0 > 0");
    if (beta_precision.size() > 0 &&
        (beta_precision - beta_precision.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error("inference", "beta prior precision must be symmetric");
    for (const auto& t : theta)
      if (!(t.lo > 0.0) || !(t.hi > t.lo) || (t.kind == ThetaPrior::Kind::inverse_gamma &&
                                              (!(t.a > 0.0) || !(t.b > 0.0))))
        throw Error("inference", "invalid theta prior (need 0 < lo < hi, positive IG parameters)");
  }
};

struct CgConfig {
  double tol = 1e-8;       // relative residual
  int max_iter = 0;        // 0 -> 10 n
  bool jacobi = true;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradient for (Phi + c I) x = rhs with Phi applied
/// through the sparse factor. Jacobi preconditioner uses diag(Phi) + c.
inline CgResult solve_shifted_cg(const SparseFactor& f, double shift, const Vector& rhs,
                                 const CgConfig& cfg) {
  const int n = f.size();
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : 10 * n;
  CgResult res;
  res.x = Vector::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    res.converged = true;
    return res;
  }
  Vector inv_precond;
  if (cfg.jacobi) inv_precond = (f.precision_diagonal().array() + shift).inverse();

  auto apply = [&](const Vector& v) -> Vector { return apply_precision(f, v) + shift * v; };

  Vector r = rhs;  // x0 = 0
  Vector z = cfg.jacobi ? Vector(inv_precond.cwiseProduct(r)) : r;
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    Vector ap = apply(p);
    double alpha = rz / p.dot(ap);
    res.x += alpha * p;
    r -= alpha * ap;
    res.iterations = it;
    res.rel_residual = r.norm() / rhs_norm;
    if (res.rel_residual <= cfg.tol) {
      res.converged = true;
      return res;
    }
    Vector z_new = cfg.jacobi ? Vector(inv_precond.cwiseProduct(r)) : r;
    double rz_new = r.dot(z_new);
    p = z_new + (rz_new / rz) * p;
    z = z_new;
    rz = rz_new;
  }
  return res;
}

/// Exact draw from the conjugate normal full conditional of beta given the
/// current latent field.
inline Vector sample_beta(const RegressionData& data, const PriorSpec& prior, const Vector& z_loc,
                          double sigma2, Rng& rng) {
  const Eigen::Index p = data.p();
  if (p == 0) return Vector();
  Matrix post_prec = prior.beta_precision + data.X.transpose() * data.X / sigma2;
  Eigen::LLT<Matrix> llt(post_prec);
  if (llt.info() != Eigen::Success)
    throw Error("inference", "singular posterior precision for beta; supply a proper prior");
  Vector rhs = prior.beta_precision * prior.beta_mean +
               data.X.transpose() * (data.y - z_loc) / sigma2;
  Vector mean = llt.solve(rhs);
  Vector w(p);
  for (Eigen::Index i = 0; i < p; ++i) w[i] = rng.normal();
  // beta = mean + U^{-1} w with post_prec = U^T U
  return mean + Matrix(llt.matrixU()).triangularView<Eigen::Upper>().solve(w);
}

/// IG(a0 + n/2, b0 + ||Y - X beta - Z||^2 / 2) draw.
inline double sample_sigma2(const RegressionData& data, const PriorSpec& prior, const Vector& beta,
                            const Vector& z_loc, Rng& rng) {
  Vector resid = data.y - z_loc;
  if (data.p() > 0) resid -= data.X * beta;
  return rng.inverse_gamma(prior.sigma2_a + 0.5 * static_cast<double>(data.n()),
                           prior.sigma2_b + 0.5 * resid.squaredNorm());
}

/// One draw of the latent field from N(xi, (Phi + I/sigma^2)^{-1}) following
/// the rhs-perturbation scheme: W = (Y - X beta)/sigma^2 + L W1 + W2/sigma,
/// then solve (Phi + I/sigma^2) Z = W by CG. Inputs and output live in DAG
/// position order.
inline Vector sample_latent_cg(const SparseFactor& factor, const Vector& y_pos,
                               const Matrix& x_pos, const Vector& beta, double sigma2,
                               const CgConfig& cfg, Rng& rng, CgResult* stats = nullptr) {
  const int n = factor.size();
  Vector resid = y_pos;
  if (x_pos.size() > 0 && beta.size() > 0) resid -= x_pos * beta;
  Vector w1(n), w2(n);
  for (int i = 0; i < n; ++i) w1[i] = rng.normal();
  for (int i = 0; i < n; ++i) w2[i] = rng.normal();
  Vector rhs = resid / sigma2 + apply_sqrt_factor(factor, w1) + w2 / std::sqrt(sigma2);
  CgResult res = solve_shifted_cg(factor, 1.0 / sigma2, rhs, cfg);
  if (!res.converged)
    throw Error("inference", "conjugate gradient failed to converge (relative residual " +
                                 std::to_string(res.rel_residual) + " after " +
                                 std::to_string(res.iterations) + " iterations)");
  if (stats) *stats = res;
  return res.x;
}

/// log p(z | theta) under the factor: the sum of the n parent-conditional
/// log densities, computed through one (I - B) sweep.
inline double loglik_given_factor(const SparseFactor& f, const Vector& z_pos) {
  const int n = f.size();
  Vector u = f.apply_unit_lower(z_pos);
  double quad = (u.array().square() / f.d.array()).sum();
  double logdet = f.d.array().log().sum();
  return -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI);
}

inline double loglik_latent_given_theta(const Vector& z_pos, const RadialDag& dag,
                                        const KernelSpec& k, const LocationSet& locations,
                                        double jitter = 0.0) {
  return loglik_given_factor(build_sparse_factor(dag, k, locations, jitter), z_pos);
}

struct MhThetaConfig {
  double step = 0.1;   // log-scale random-walk sd per sampled component
  double jitter = 0.0;
};

struct MhThetaResult {
  std::vector<double> theta;
  bool accepted = false;
  bool rebuilt = false;
};

namespace detail {

inline double theta_log_prior(const std::vector<ThetaPrior>& priors,
                              const std::vector<double>& theta) {
  double lp = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    double v = priors[j].log_density(theta[j]);
    if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
    lp += v;
  }
  return lp;
}

}  // namespace detail

/// Random-walk Metropolis step for the kernel parameters on the log scale,
/// with the log-scale Jacobian in the ratio. `factor` and `current_loglik`
/// hold the state for the current theta and are replaced on acceptance.
inline MhThetaResult mh_step_theta(std::vector<double> theta, const Vector& z_pos,
                                   const RadialDag& dag, const LocationSet& locations,
                                   const KernelSpec& kernel_template,
                                   const std::vector<ThetaPrior>& priors, const MhThetaConfig& cfg,
                                   SparseFactor& factor, double& current_loglik, Rng& rng) {
  MhThetaResult out;
  std::vector<double> prop = theta;
  bool any = false;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (!priors[j].sampled()) continue;
    prop[j] = theta[j] * std::exp(cfg.step * rng.normal());
    any = true;
  }
  out.theta = theta;
  if (!any) return out;

  double lp_prop = detail::theta_log_prior(priors, prop);
  if (!std::isfinite(lp_prop)) return out;  // outside support: auto-reject
  double lp_cur = detail::theta_log_prior(priors, theta);

  double jac = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j)
    if (priors[j].sampled()) jac += std::log(prop[j]) - std::log(theta[j]);

  SparseFactor f_prop = build_sparse_factor(dag, kernel_template.with_params(prop), locations,
                                            cfg.jitter);
  double ll_prop = loglik_given_factor(f_prop, z_pos);
  double log_ratio = ll_prop + lp_prop - current_loglik - lp_cur + jac;
  if (std::log(rng.uniform()) < log_ratio) {
    out.theta = prop;
    out.accepted = true;
    out.rebuilt = true;
    factor = std::move(f_prop);
    current_loglik = ll_prop;
  }
  return out;
}

// gather a position-ordered vector back to location order
inline Vector unpermute(const RadialDag& dag, const Vector& v_pos) {
  Vector v(v_pos.size());
  for (int i = 0; i < static_cast<int>(v_pos.size()); ++i) v[dag.order[i]] = v_pos[i];
  return v;
}

struct LatentMcmcConfig {
  double rho = 0.0;
  int L1 = 1000;
  int L2 = 500;
  std::uint64_t seed = 1;
  CgConfig cg;
  MhThetaConfig mh;
  int thin = 1;                    // keep every thin-th iteration >= L2
  std::vector<double> theta_init;  // empty -> variogram method of moments
  bool store_latent = true;
  // optional joint prediction interleaved with fitting
  const LocationSet* test_locations = nullptr;
  Matrix x_test;
  bool predict_nugget = true;
};

namespace detail {

// Two-lag empirical-variogram initializer: matches the family's correlation
// shape at h1 and h2 = 3 h1 with zero nugget, then clamps into the prior
// support. Initializer-grade only.
inline std::vector<double> variogram_init(const RegressionData& data, const KernelSpec& k,
                                          const std::vector<ThetaPrior>& priors) {
  const Eigen::Index n = data.n();
  double var_y = (data.y.array() - data.y.mean()).square().sum() / std::max<double>(1.0, n - 1);
  if (var_y <= 0.0) var_y = 1.0;

  // mean nearest-neighbor distance from a subsample
  double mean_nn = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < n; i += std::max<Eigen::Index>(1, n / 200)) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) best = std::min(best, data.locations.distance(i, j));
    mean_nn += best;
    ++count;
  }
  mean_nn = count > 0 ? mean_nn / count : 0.1;
  double h1 = 1.5 * mean_nn, h2 = 4.5 * mean_nn;

  auto gamma_hat = [&](double h, double tol) {
    double acc = 0.0;
    int m = 0;
    for (Eigen::Index i = 0; i < n && m < 20000; ++i)
      for (Eigen::Index j = i + 1; j < n && m < 20000; ++j) {
        double d = data.locations.distance(i, j);
        if (std::abs(d - h) < tol) {
          double dy = data.y[i] - data.y[j];
          acc += 0.5 * dy * dy;
          ++m;
        }
      }
    return m > 0 ? acc / m : var_y;
  };
  double g1 = gamma_hat(h1, 0.5 * mean_nn), g2 = gamma_hat(h2, 0.75 * mean_nn);
  g1 = std::min(g1, 0.95 * var_y);
  g2 = std::clamp(g2, g1 * 1.0001, var_y);

  // correlation shape c(h; s) at unit variance for the family's range
  // parameter s, solved so that (1-c(h1))/(1-c(h2)) matches the data
  auto corr = [&](double s, double h) {
    switch (k.family) {
      case KernelFamily::exponential: return std::exp(-s * h);
      case KernelFamily::matern: {
        KernelSpec tmp = KernelSpec::matern(1.0, s, k.params[2]);
        return kernel_value(tmp, h);
      }
      case KernelFamily::gaussian: return std::exp(-s * h * h);
      case KernelFamily::generalized_cauchy: {
        KernelSpec tmp = KernelSpec::generalized_cauchy(1.0, s, k.params[2], k.params[3]);
        return kernel_value(tmp, h);
      }
    }
    return std::exp(-s * h);
  };
  double target = g1 / g2;
  double lo = 1e-4, hi = 1e4;
  for (int it = 0; it < 200; ++it) {
    double mid = std::sqrt(lo * hi);
    double ratio = (1.0 - corr(mid, h1)) / (1.0 - corr(mid, h2));
    if (ratio < target) lo = mid;
    else hi = mid;
  }
  double s = std::sqrt(lo * hi);
  double sill = g2 / std::max(1e-6, 1.0 - corr(s, h2));
  sill = std::clamp(sill, 0.05 * var_y, 5.0 * var_y);

  // variance leads and the decay parameter is second in every family; fixed
  // parameters keep their template values
  std::vector<double> theta = k.params;
  if (priors[0].sampled()) theta[0] = std::clamp(sill, priors[0].lo, priors[0].hi);
  if (priors[1].sampled()) theta[1] = std::clamp(s, priors[1].lo, priors[1].hi);
  return theta;
}

}  // namespace detail

/// Algorithm: partition -> DAG -> per-iteration {beta, sigma2, latent CG
/// draw, theta MH} with joint test prediction for iterations >= L2.
/// Reproducible given the seed.
inline PosteriorDraws run_latent_mcmc(const RegressionData& data, const PriorSpec& prior,
                                      const KernelSpec& kernel_template,
                                      const LatentMcmcConfig& cfg) {
  data.validate();
  prior.validate();
  if (!(cfg.rho > 0.0)) throw Error("inference", "rho must be positive");
  if (cfg.L2 > cfg.L1 + 1) throw Error("inference", "L2 must be at most L1+1");
  if (prior.theta.size() != kernel_template.n_params())
    throw Error("inference", "theta prior count does not match kernel parameters");

  const int n = static_cast<int>(data.n());
  Rng rng(cfg.seed);

  auto partition = make_partition(data.locations, cfg.rho, cfg.seed);
  auto dag = build_dag(partition, data.locations);

  // optional prediction plan; the training prefix of the extended DAG is
  // bit-identical to the training DAG
  std::optional<PredictionPlan> plan;
  if (cfg.test_locations && cfg.test_locations->size() > 0) {
    if (!cfg.store_latent)
      throw Error("inference", "interleaved prediction needs store_latent = true");
    plan = build_prediction_plan(partition, data.locations, *cfg.test_locations, cfg.rho, cfg.seed);
  }

  // data in DAG position order
  Vector y_pos(n);
  Matrix x_pos(data.p() > 0 ? n : 0, data.p());
  for (int i = 0; i < n; ++i) {
    y_pos[i] = data.y[dag.order[i]];
    if (data.p() > 0) x_pos.row(i) = data.X.row(dag.order[i]);
  }

  std::vector<double> theta = cfg.theta_init.empty()
                                  ? detail::variogram_init(data, kernel_template, prior.theta)
                                  : cfg.theta_init;
  if (theta.size() != kernel_template.n_params())
    throw Error("inference", "theta initial value count does not match kernel parameters");

  SparseFactor factor =
      build_sparse_factor(dag, kernel_template.with_params(theta), data.locations, cfg.mh.jitter);
  Vector beta = Vector::Zero(data.p());
  double sigma2 = prior.sigma2_mean();
  Vector z_pos = Vector::Zero(n);
  double cur_ll = loglik_given_factor(factor, z_pos);

  PosteriorDraws out;
  out.L1 = cfg.L1;
  out.L2 = cfg.L2;
  out.seed = cfg.seed;
  out.beta = Matrix::Zero(cfg.L1, data.p());
  out.sigma2 = Vector::Zero(cfg.L1);
  out.theta = Matrix::Zero(cfg.L1, static_cast<Eigen::Index>(theta.size()));
  out.theta_names = kernel_template.param_names();
  const int thin = std::max(1, cfg.thin);
  const int n_ret = cfg.L1 < cfg.L2 ? 0 : (cfg.L1 - cfg.L2) / thin + 1;
  if (cfg.store_latent) out.z_train = Matrix::Zero(n_ret, n);
  out.retained.reserve(n_ret);

  std::uint64_t cg_total = 0;
  int accepts = 0, post_burn_steps = 0;

  for (int l = 1; l <= cfg.L1; ++l) {
    Vector z_loc = unpermute(dag, z_pos);
    if (data.p() > 0) beta = sample_beta(data, prior, z_loc, sigma2, rng);
    sigma2 = sample_sigma2(data, prior, beta, z_loc, rng);

    CgResult cg_stats;
    z_pos = sample_latent_cg(factor, y_pos, x_pos, beta, sigma2, cfg.cg, rng, &cg_stats);
    cg_total += static_cast<std::uint64_t>(cg_stats.iterations);
    out.cg_iterations_max = std::max(out.cg_iterations_max, cg_stats.iterations);

    cur_ll = loglik_given_factor(factor, z_pos);
    auto mh = mh_step_theta(theta, z_pos, dag, data.locations, kernel_template, prior.theta,
                            cfg.mh, factor, cur_ll, rng);
    theta = mh.theta;
    if (l >= cfg.L2) {
      ++post_burn_steps;
      if (mh.accepted) ++accepts;
    }

    if (data.p() > 0) out.beta.row(l - 1) = beta;
    out.sigma2[l - 1] = sigma2;
    for (std::size_t j = 0; j < theta.size(); ++j) out.theta(l - 1, static_cast<Eigen::Index>(j)) = theta[j];
    if (l >= cfg.L2 && (l - cfg.L2) % thin == 0) {
      out.retained.push_back(l);
      if (cfg.store_latent) {
        const int r = static_cast<int>(out.retained.size()) - 1;
        for (int i = 0; i < n; ++i) out.z_train(r, dag.order[i]) = z_pos[i];
      }
    }
  }
  out.theta_accept_rate = post_burn_steps > 0 ? double(accepts) / post_burn_steps : 0.0;
  out.cg_iterations_mean = cfg.L1 > 0 ? double(cg_total) / cfg.L1 : 0.0;

  if (plan)
    sample_prediction(*plan, out, kernel_template, rng.substream(0xfeedULL), cfg.x_test,
                      cfg.predict_nugget);
  return out;
}

struct ResponseMcmcConfig {
  double rho = 0.0;
  int L1 = 1000;
  int L2 = 500;
  std::uint64_t seed = 1;
  double target_accept = 0.24;
  double ram_gamma = 2.0 / 3.0;
  double step_init = 0.1;
  bool adapt = true;
  double jitter = 0.0;
  int thin = 1;
  std::vector<double> theta_init;
  double sigma2_init = 0.0;  // 0 -> prior mean
  const LocationSet* test_locations = nullptr;
  Matrix x_test;
  int response_predict_cap = 500;
};

/// Marginalized response model: beta stays conjugate under the sparse
/// precision; (sigma2, theta) move jointly by a robust adaptive Metropolis
/// step on the log scale targeting the configured acceptance rate, with
/// adaptation frozen from L2 on.
inline PosteriorDraws run_response_mcmc(const RegressionData& data, const PriorSpec& prior,
                                        const KernelSpec& kernel_template,
                                        const ResponseMcmcConfig& cfg) {
  data.validate();
  prior.validate();
  if (!(cfg.rho > 0.0)) throw Error("inference", "rho must be positive");
  if (prior.theta.size() != kernel_template.n_params())
    throw Error("inference", "theta prior count does not match kernel parameters");
  const int n = static_cast<int>(data.n());
  Rng rng(cfg.seed);

  auto partition = make_partition(data.locations, cfg.rho, cfg.seed);
  auto dag = build_dag(partition, data.locations);

  std::vector<double> theta = cfg.theta_init.empty()
                                  ? detail::variogram_init(data, kernel_template, prior.theta)
                                  : cfg.theta_init;
  double sigma2 = cfg.sigma2_init > 0.0 ? cfg.sigma2_init : prior.sigma2_mean();

  // sampled block: sampled kernel params then sigma2, all on log scale
  std::vector<int> block;  // indices into theta; -1 marks sigma2
  for (std::size_t j = 0; j < theta.size(); ++j)
    if (prior.theta[j].sampled()) block.push_back(static_cast<int>(j));
  block.push_back(-1);
  const int bd = static_cast<int>(block.size());

  auto residual_pos = [&](const Vector& beta) {
    Vector r(n);
    for (int i = 0; i < n; ++i) {
      int loc = dag.order[i];
      double xb = data.p() > 0 ? data.X.row(loc).dot(beta) : 0.0;
      r[i] = data.y[loc] - xb;
    }
    return r;
  };

  // det(Phi~)^{1/2} exp(-r' Phi~ r / 2) p(theta) p(sigma2), log scale
  auto eval_target = [&](const SparseFactor& f, const std::vector<double>& th, double s2,
                         const Vector& beta) -> double {
    Vector r = residual_pos(beta);
    double quad = r.dot(apply_precision(f, r));
    double ll = 0.5 * f.log_det_precision() - 0.5 * quad;
    double lp = detail::theta_log_prior(prior.theta, th);
    double lps2 = -(prior.sigma2_a + 1.0) * std::log(s2) - prior.sigma2_b / s2;
    return ll + lp + lps2;
  };

  Vector beta = Vector::Zero(data.p());
  SparseFactor factor =
      build_sparse_factor(dag, kernel_template.with_params(theta), data.locations, cfg.jitter,
                          sigma2);
  double cur = eval_target(factor, theta, sigma2, beta);

  Matrix S = cfg.step_init * Matrix::Identity(bd, bd);

  PosteriorDraws out;
  out.L1 = cfg.L1;
  out.L2 = cfg.L2;
  out.seed = cfg.seed;
  out.beta = Matrix::Zero(cfg.L1, data.p());
  out.sigma2 = Vector::Zero(cfg.L1);
  out.theta = Matrix::Zero(cfg.L1, static_cast<Eigen::Index>(theta.size()));
  out.theta_names = kernel_template.param_names();
  const int thin = std::max(1, cfg.thin);
  out.retained.reserve(std::max(0, cfg.L1 - cfg.L2 + 1));

  int accepts_post = 0, post_steps = 0;

  for (int l = 1; l <= cfg.L1; ++l) {
    if (data.p() > 0) {
      // conjugate beta under the sparse marginal precision
      Matrix phix(n, data.p());
      Matrix x_pos(n, data.p());
      Vector y_pos(n);
      for (int i = 0; i < n; ++i) {
        x_pos.row(i) = data.X.row(dag.order[i]);
        y_pos[i] = data.y[dag.order[i]];
      }
      for (Eigen::Index j = 0; j < data.p(); ++j)
        phix.col(j) = apply_precision(factor, x_pos.col(j));
      Matrix post_prec = prior.beta_precision + x_pos.transpose() * phix;
      Eigen::LLT<Matrix> llt(post_prec);
      if (llt.info() != Eigen::Success)
        throw Error("inference", "singular posterior precision for beta (response model)");
      Vector rhs = prior.beta_precision * prior.beta_mean + phix.transpose() * y_pos;
      Vector mean = llt.solve(rhs);
      Vector w(data.p());
      for (Eigen::Index i = 0; i < data.p(); ++i) w[i] = rng.normal();
      beta = mean + Matrix(llt.matrixU()).triangularView<Eigen::Upper>().solve(w);
      cur = eval_target(factor, theta, sigma2, beta);
    }

    // joint RAM step on (sampled theta, sigma2)
    Vector u(bd);
    for (int i = 0; i < bd; ++i) u[i] = rng.normal();
    Vector delta = S * u;
    std::vector<double> th_prop = theta;
    double s2_prop = sigma2;
    for (int i = 0; i < bd; ++i) {
      if (block[i] >= 0) th_prop[block[i]] = theta[block[i]] * std::exp(delta[i]);
      else s2_prop = sigma2 * std::exp(delta[i]);
    }
    double alpha = 0.0;
    bool in_support = std::isfinite(detail::theta_log_prior(prior.theta, th_prop)) && s2_prop > 0.0;
    if (in_support) {
      SparseFactor f_prop = build_sparse_factor(dag, kernel_template.with_params(th_prop),
                                                data.locations, cfg.jitter, s2_prop);
      double prop = eval_target(f_prop, th_prop, s2_prop, beta);
      double jac = delta.sum();  // log-scale proposal Jacobian
      double log_ratio = prop - cur + jac;
      alpha = std::min(1.0, std::exp(std::min(0.0, log_ratio)));
      if (std::log(rng.uniform()) < log_ratio) {
        theta = th_prop;
        sigma2 = s2_prop;
        factor = std::move(f_prop);
        cur = prop;
        if (l >= cfg.L2) ++accepts_post;
      }
    }
    if (l >= cfg.L2) ++post_steps;

    if (cfg.adapt && l < cfg.L2 && u.norm() > 0.0) {
      double eta = std::min(1.0, bd * std::pow(static_cast<double>(l), -cfg.ram_gamma));
      Matrix m = S * (Matrix::Identity(bd, bd) +
                      eta * (alpha - cfg.target_accept) * (u * u.transpose()) / u.squaredNorm()) *
                 S.transpose();
      Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
      if (llt.info() == Eigen::Success) S = llt.matrixL();
    }

    if (data.p() > 0) out.beta.row(l - 1) = beta;
    out.sigma2[l - 1] = sigma2;
    for (std::size_t j = 0; j < theta.size(); ++j)
      out.theta(l - 1, static_cast<Eigen::Index>(j)) = theta[j];
    if (l >= cfg.L2 && (l - cfg.L2) % thin == 0) out.retained.push_back(l);
  }
  out.theta_accept_rate = post_steps > 0 ? double(accepts_post) / post_steps : 0.0;

  if (cfg.test_locations && cfg.test_locations->size() > 0) {
    auto plan = build_prediction_plan(partition, data.locations, *cfg.test_locations, cfg.rho,
                                      cfg.seed);
    sample_prediction_response(plan, out, kernel_template, dag, data.locations, data.y, data.X,
                               rng.substream(0xfeedULL), cfg.x_test, cfg.response_predict_cap);
  }
  return out;
}

}  // namespace radgp
