// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Criterion 6 runs the full 40x40 simulation study (about a minute). Set
// RADGP_REDUCED_ACCEPTANCE=1 for a quick 20x20 variant; note that the exact
// GP itself has test MSE ~0.41 on the coarser grid, so the reduced MSE gate
// is reported against that optimum.

#include <radgp/radgp.hpp>

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace radgp;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!pass) ++failures;
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(4) << v;
  return ss.str();
}

Matrix ordered_cov(const KernelSpec& k, const LocationSet& set, const std::vector<int>& order) {
  const int n = static_cast<int>(order.size());
  Matrix sigma(n, n);
  for (int i = 0; i < n; ++i) {
    sigma(i, i) = k.variance();
    for (int j = 0; j < i; ++j) {
      double v = kernel_value(k, set.distance(order[i], order[j]));
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  return sigma;
}

// random points with a controlled minimal separation (jittered grid), keeping
// dense covariance matrices invertible in double precision
LocationSet jittered_grid(int n, int d, Rng& rng) {
  int side = static_cast<int>(std::ceil(std::pow(double(n), 1.0 / d)));
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) {
    int rem = i;
    for (int k = 0; k < d; ++k) {
      int idx = rem % side;
      rem /= side;
      m(i, k) = (idx + 0.5 + 0.6 * (rng.uniform() - 0.5)) / side;
    }
  }
  return LocationSet(m);
}

// ---------------------------------------------------------------- criterion 1
void criterion_exact_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  Rng master(101);
  bool ok = true;
  std::vector<KernelSpec> kernels = {
      KernelSpec::exponential(1.0, 6.0), KernelSpec::matern(1.2, 4.0, 1.5),
      KernelSpec::gaussian(0.8, 100.0), KernelSpec::generalized_cauchy(1.0, 0.7, 1.0, 5.0)};
  double worst_cov = 0.0, worst_inv = 0.0;
  for (int t = 0; t < 10; ++t) {
    int n = 20 + static_cast<int>(master.uniform_int(181));
    Rng rng = master.substream(t);
    LocationSet set = jittered_grid(n, 2, rng);
    const KernelSpec& k = kernels[t % kernels.size()];
    double rho = set.diameter() * 1.0001;
    auto g = build_dag(make_partition(set, rho, 100 + t), set);
    auto f = build_sparse_factor(g, k, set);
    Matrix sigma = ordered_cov(k, set, g.order);
    Matrix sigma_hat = dense_radgp_covariance(f);
    double cov_err = (sigma_hat - sigma).norm() / sigma.norm();
    double inv_err = (f.dense_precision() * sigma - Matrix::Identity(n, n)).norm() / std::sqrt(n);
    worst_cov = std::max(worst_cov, cov_err);
    worst_inv = std::max(worst_inv, inv_err);
    if (cov_err > 1e-8 || inv_err > 1e-8) ok = false;
  }
  double secs = elapsed(t0);
  if (secs >= 10.0) ok = false;
  report(1, "exact-GP equivalence at rho > diameter", ok,
         "max cov err " + fmt(worst_cov) + ", max inverse err " + fmt(worst_inv) + ", " +
             fmt(secs) + " s");
}

// ---------------------------------------------------------------- criterion 2
void criterion_w2_bound_sandwich() {
  Rng master(202);
  bool ok = true;
  int hypothesis_met = 0;
  double worst_gap = -1e300;
  std::vector<KernelSpec> kernels = {KernelSpec::exponential(1.0, 8.0),
                                     KernelSpec::matern(1.0, 5.0, 0.5),
                                     KernelSpec::gaussian(1.0, 50.0)};
  for (int t = 0; t < 30; ++t) {
    int n = 15 + static_cast<int>(master.uniform_int(86));
    Rng rng = master.substream(t);
    LocationSet set = jittered_grid(n, 2, rng);
    const KernelSpec& k = kernels[t % kernels.size()];
    double q = min_separation(set);
    double rho = q + (set.diameter() - q) * (0.15 + 0.75 * master.uniform());
    auto g = build_dag(make_partition(set, rho, 200 + t), set);
    auto f = build_sparse_factor(g, k, set);
    auto ex = build_exact_factor(set, k, g.order);
    Matrix sigma = ordered_cov(k, set, g.order);
    auto rep = w2_report(ex, f, sigma);
    worst_gap = std::max(worst_gap, rep.w2_squared - rep.trace_bound);
    if (rep.w2_squared > rep.trace_bound + 1e-10) ok = false;
    if (rep.column_hypothesis_met) {
      ++hypothesis_met;
      if (rep.trace_bound > *rep.column_bound + 1e-8) ok = false;
    }
  }
  report(2, "W2 trace/column bound sandwich on 30 random triples", ok,
         "hypothesis met " + std::to_string(hypothesis_met) + "/30, max w2-trace gap " +
             fmt(worst_gap));
}

// ---------------------------------------------------------------- criterion 3
void criterion_radius_monotonicity() {
  auto t0 = std::chrono::steady_clock::now();
  LocationSet set = grid_locations(12, 2);
  auto k = KernelSpec::exponential(1.0, 19.97);
  double q = min_separation(set);
  double diam = set.diameter();
  std::vector<double> rhos;
  for (int i = 0; i < 6; ++i) rhos.push_back(q + (diam - q) * i / 5.0 + 1e-9);
  std::vector<double> w2s, traces;
  for (double rho : rhos) {
    auto g = build_dag(make_partition(set, rho, 33), set);
    auto f = build_sparse_factor(g, k, set);
    Matrix sigma = ordered_cov(k, set, g.order);
    Matrix sigma_hat = dense_radgp_covariance(f);
    Vector zero = Vector::Zero(set.size());
    w2s.push_back(w2_gaussian(zero, sigma, zero, sigma_hat));
    traces.push_back(w2_trace_bound(sigma, sigma_hat));
  }
  bool ok = w2s.back() <= w2s.front();
  for (std::size_t i = 1; i < traces.size(); ++i)
    if (traces[i] > traces[i - 1] + 1e-10) ok = false;
  double tr_sigma = static_cast<double>(set.size());  // K0(0) = 1
  if (w2s.back() > 1e-8 * tr_sigma) ok = false;
  double secs = elapsed(t0);
  if (secs >= 30.0) ok = false;
  report(3, "radius monotonicity of W2 on a 12x12 grid", ok,
         "W2^2 " + fmt(w2s.front()) + " -> " + fmt(w2s.back()) + ", " + fmt(secs) + " s");
}

// ---------------------------------------------------------------- criterion 4
// joint Gaussian implied by the construction on an ancestor-closed prefix,
// optionally extended by an out-of-D point conditioned on its T1 parents
Matrix construct_joint(const PredictionPlan& plan, const SparseFactor& factor, const KernelSpec& k,
                       int max_position, const Eigen::RowVectorXd* extra) {
  const int n_train = plan.n_train;
  int prefix = std::max(max_position + 1, n_train);
  SparseFactor sub;
  sub.offsets.assign(factor.offsets.begin(), factor.offsets.begin() + prefix + 1);
  sub.cols.assign(factor.cols.begin(), factor.cols.begin() + sub.offsets[prefix]);
  sub.b.assign(factor.b.begin(), factor.b.begin() + sub.offsets[prefix]);
  sub.d = factor.d.head(prefix);
  Matrix cov = dense_radgp_covariance(sub);
  if (!extra) return cov;

  // out-of-D point: parents are the training locations within rho
  std::vector<int> pa;
  for (int i = 0; i < n_train; ++i) {
    double dist = (plan.combined.point(plan.dag.order[i]) - *extra).norm();
    if (dist > 0.0 && dist < plan.dag.rho) pa.push_back(i);
  }
  const int np = static_cast<int>(pa.size());
  Vector b = Vector::Zero(np);
  double v = k.variance();
  if (np > 0) {
    Matrix cpp(np, np);
    Vector cpi(np);
    for (int a = 0; a < np; ++a) {
      cpi[a] = kernel_value(k, (plan.combined.point(plan.dag.order[pa[a]]) - *extra).norm());
      for (int c = 0; c < np; ++c)
        cpp(a, c) = kernel_value(k, (plan.combined.point(plan.dag.order[pa[a]]) -
                                     plan.combined.point(plan.dag.order[pa[c]]))
                                        .norm());
    }
    b = cpp.llt().solve(cpi);
    v = k.variance() - cpi.dot(b);
  }
  Matrix full = Matrix::Zero(prefix + 1, prefix + 1);
  full.topLeftCorner(prefix, prefix) = cov;
  Vector cross = Vector::Zero(prefix);
  for (int a = 0; a < np; ++a) cross += b[a] * cov.col(pa[a]);
  full.topRightCorner(prefix, 1) = cross;
  full.bottomLeftCorner(1, prefix) = cross.transpose();
  double var = v;
  for (int a = 0; a < np; ++a) var += b[a] * cross[pa[a]];
  full(prefix, prefix) = var;
  return full;
}

void criterion_kolmogorov_consistency() {
  Rng master(404);
  auto k = KernelSpec::exponential(1.0, 6.0);
  bool ok = true;
  double worst = 0.0;
  int cases[3] = {0, 0, 0};
  for (int t = 0; t < 20; ++t) {
    Rng rng = master.substream(t);
    LocationSet train = uniform_locations(14, 2, rng);
    Matrix tc(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) tc(i, j) = rng.uniform();
    LocationSet tests(tc);
    const double rho = 0.35;
    auto part = make_partition(train, rho, 400 + t);
    auto plan = build_prediction_plan(part, train, tests, rho, 500 + t);
    auto factor = build_sparse_factor(plan.dag, k, plan.combined);
    const int n_all = plan.dag.size();

    std::vector<int> a_pos;
    for (int i = 0; i < n_all; ++i)
      if (rng.uniform() < 0.4) a_pos.push_back(i);
    if (a_pos.empty()) a_pos.push_back(static_cast<int>(rng.uniform_int(n_all)));
    int max_a = *std::max_element(a_pos.begin(), a_pos.end());

    int mode = t % 3;
    if (mode == 0) {
      // x inside the parent closure: the construction set is unchanged
      ++cases[0];
      int x = static_cast<int>(rng.uniform_int(std::max(1, max_a)));
      Matrix with = construct_joint(plan, factor, k, std::max(max_a, x), nullptr);
      Matrix without = construct_joint(plan, factor, k, max_a, nullptr);
      for (int i : a_pos)
        for (int j : a_pos) worst = std::max(worst, std::abs(with(i, j) - without(i, j)));
    } else if (mode == 1) {
      // x in D beyond the closure: marginalizing the larger prefix must give
      // the smaller construction back
      ++cases[1];
      if (max_a >= n_all - 1) max_a = n_all - 2;
      int x = max_a + 1 + static_cast<int>(rng.uniform_int(n_all - max_a - 1));
      std::vector<int> a_trim;
      for (int i : a_pos)
        if (i <= max_a) a_trim.push_back(i);
      if (a_trim.empty()) a_trim.push_back(0);
      Matrix with = construct_joint(plan, factor, k, x, nullptr);
      Matrix without = construct_joint(plan, factor, k, max_a, nullptr);
      for (int i : a_trim)
        for (int j : a_trim) worst = std::max(worst, std::abs(with(i, j) - without(i, j)));
    } else {
      // x outside D: append via its T1-parent conditional, then marginalize
      ++cases[2];
      Eigen::RowVectorXd x(2);
      x << rng.uniform(), rng.uniform();
      Matrix with = construct_joint(plan, factor, k, max_a, &x);
      Matrix without = construct_joint(plan, factor, k, max_a, nullptr);
      const int p = static_cast<int>(without.rows());
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) worst = std::max(worst, std::abs(with(i, j) - without(i, j)));
    }
  }
  if (worst > 1e-8) ok = false;
  report(4, "Kolmogorov-consistency numeric check", ok,
         "cases " + std::to_string(cases[0]) + "/" + std::to_string(cases[1]) + "/" +
             std::to_string(cases[2]) + ", max deviation " + fmt(worst));
}

// ---------------------------------------------------------------- criterion 5
void criterion_sampler_laws() {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string notes;

  {  // beta conjugate moments
    const int n = 20;
    const double ybar = 0.7;
    RegressionData d;
    Rng loc_rng(3);
    d.locations = uniform_locations(n, 2, loc_rng);
    d.X = Matrix::Ones(n, 1);
    d.y = Vector::Constant(n, ybar);
    PriorSpec prior = PriorSpec::defaults(1, 2);
    prior.beta_precision = Matrix::Identity(1, 1);
    Rng rng(51);
    const int m = 100000;
    double acc = 0.0;
    for (int t = 0; t < m; ++t) acc += sample_beta(d, prior, Vector::Zero(n), 1.0, rng)[0];
    double want = n * ybar / (1.0 + n);
    double se = std::sqrt(1.0 / (1.0 + n) / m);
    if (std::abs(acc / m - want) >= 3.0 * se) {
      ok = false;
      notes += " beta-mean";
    }
  }

  {  // sigma2 conjugate moments
    const int n = 30;
    Rng rng(52);
    RegressionData d;
    d.locations = uniform_locations(n, 2, rng);
    d.y = Vector(n);
    for (int i = 0; i < n; ++i) d.y[i] = rng.normal();
    PriorSpec prior = PriorSpec::defaults(0, 2);
    prior.sigma2_a = 3.0;
    prior.sigma2_b = 2.0;
    double shape = prior.sigma2_a + 0.5 * n;
    double rate = prior.sigma2_b + 0.5 * d.y.squaredNorm();
    const int m = 100000;
    double acc = 0.0;
    for (int t = 0; t < m; ++t) acc += sample_sigma2(d, prior, Vector(), Vector::Zero(n), rng);
    double want = rate / (shape - 1.0);
    double se = std::sqrt(want * want / (shape - 2.0) / m);
    if (std::abs(acc / m - want) >= 3.0 * se) {
      ok = false;
      notes += " sigma2-mean";
    }
  }

  {  // CG sampler law at n=25, 5e4 draws
    auto k = KernelSpec::exponential(1.0, 8.0);
    LocationSet set = grid_locations(5, 2);
    auto g = build_dag(make_partition(set, 0.3, 2), set);
    auto f = build_sparse_factor(g, k, set);
    const int n = 25;
    const double sigma2 = 0.25;
    Matrix a = f.dense_precision() + Matrix::Identity(n, n) / sigma2;
    Matrix cov_want = a.llt().solve(Matrix::Identity(n, n));
    CgConfig cfg;
    Rng rng(53);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal();
    Vector mean_want = cov_want * y / sigma2;
    const int m = 50000;
    Vector mean_acc = Vector::Zero(n);
    Matrix cov_acc = Matrix::Zero(n, n);
    for (int t = 0; t < m; ++t) {
      Vector z = sample_latent_cg(f, y, Matrix(), Vector(), sigma2, cfg, rng);
      mean_acc += z;
      cov_acc += z * z.transpose();
    }
    mean_acc /= m;
    Matrix cov_emp = cov_acc / m - mean_acc * mean_acc.transpose();
    if ((cov_emp - cov_want).norm() / cov_want.norm() >= 0.05) {
      ok = false;
      notes += " cg-cov";
    }
    if ((mean_acc - mean_want).cwiseAbs().maxCoeff() >= 0.05) {
      ok = false;
      notes += " cg-mean";
    }
  }

  double secs = elapsed(t0);
  if (secs >= 60.0) ok = false;
  report(5, "conjugate and CG sampler laws", ok,
         notes.empty() ? fmt(secs) + " s" : "failed:" + notes);
}

// ---------------------------------------------------------------- criterion 6
struct StudyResult {
  double phi_mean = 0.0, tau2_mean = 0.0, mse = 0.0, coverage = 0.0, accept = 0.0;
};

StudyResult run_study_replicate(int side, std::uint64_t seed, bool latent) {
  auto truth = KernelSpec::exponential(1.0, 19.97);
  Rng rng(seed);
  LocationSet train = grid_locations(side, 2);
  LocationSet tests = uniform_locations(1000, 2, rng);

  Matrix all(train.size() + tests.size(), 2);
  all.topRows(train.size()) = train.coords();
  all.bottomRows(tests.size()) = tests.coords();
  LocationSet combined(all);
  auto field = simulate_gp(combined, truth, 0.01, rng, 4096);

  RegressionData data;
  data.locations = train;
  data.y = field.y.head(train.size());
  Vector y_test = field.y.tail(tests.size());

  PriorSpec prior = PriorSpec::defaults(0, 2);
  prior.sigma2_a = 2.0;
  prior.sigma2_b = 0.01;
  prior.theta[0].kind = ThetaPrior::Kind::inverse_gamma;  // tau2 ~ IG(2, 1)
  prior.theta[0].a = 2.0;
  prior.theta[0].b = 1.0;
  prior.theta[1].kind = ThetaPrior::Kind::flat;  // p(phi) ∝ 1 on [1, 100]
  prior.theta[1].lo = 1.0;
  prior.theta[1].hi = 100.0;

  StudyResult res;
  PosteriorDraws draws;
  if (latent) {
    LatentMcmcConfig cfg;
    cfg.rho = 0.055;
    cfg.L1 = 4000;
    cfg.L2 = 2000;
    cfg.seed = seed;
    cfg.mh.step = 0.07;
    cfg.test_locations = &tests;
    draws = run_latent_mcmc(data, prior, truth, cfg);
    auto s = summarize_draws(draws.y_test, 0.95);
    auto [mse, cover] = mse_and_coverage(y_test, s.post_mean, s.lower, s.upper);
    res.mse = mse;
    res.coverage = cover;
  } else {
    ResponseMcmcConfig cfg;
    cfg.rho = 0.055;
    cfg.L1 = 4000;
    cfg.L2 = 2000;
    cfg.seed = seed;
    draws = run_response_mcmc(data, prior, truth, cfg);
  }
  res.accept = draws.theta_accept_rate;
  res.tau2_mean = retained_mean(draws, draws.theta.col(0));
  res.phi_mean = retained_mean(draws, draws.theta.col(1));
  return res;
}

void criterion_simulation_study(bool full) {
  auto t0 = std::chrono::steady_clock::now();
  const int side = full ? 40 : 20;
  const double mse_lo = full ? 0.17 : 0.12;
  const double mse_hi = full ? 0.27 : 0.35;
  double phi = 0.0, tau2 = 0.0, mse = 0.0, cover = 0.0;
  std::string per_rep;
  for (int r = 0; r < 3; ++r) {
    auto res = run_study_replicate(side, 600 + r, true);
    phi += res.phi_mean / 3.0;
    tau2 += res.tau2_mean / 3.0;
    mse += res.mse / 3.0;
    cover += res.coverage / 3.0;
    per_rep += (r ? " | " : "") + fmt(res.phi_mean) + "/" + fmt(res.tau2_mean) + "/" +
               fmt(res.mse) + "/" + fmt(res.coverage);
  }
  bool ok = phi >= 15.0 && phi <= 26.0 && tau2 >= 0.80 && tau2 <= 1.25 && mse >= mse_lo &&
            mse <= mse_hi && cover >= 0.92 && cover <= 0.98;
  double secs = elapsed(t0);
  report(6,
         std::string("simulation study, ") + (full ? "40x40" : "20x20 reduced") +
             " grid, 3 replicates",
         ok,
         "mean phi " + fmt(phi) + ", tau2 " + fmt(tau2) + ", mse " + fmt(mse) + ", coverage " +
             fmt(cover) + ", " + fmt(secs) + " s [per-rep phi/tau2/mse/cov: " + per_rep + "]");
}

// ---------------------------------------------------------------- criterion 7
void criterion_joint_prediction() {
  auto truth = KernelSpec::exponential(1.0, 19.97);
  const double sigma2 = 0.01;
  const double rho = 3.0 / 19.97 + 1e-4;
  Rng rng(707);
  LocationSet train = grid_locations(10, 2);
  const int n = 100;
  Matrix tc(5, 2);
  tc << 0.47, 0.47, 0.49, 0.53, 0.52, 0.44, 0.53, 0.51, 0.55, 0.47;
  LocationSet tests(tc);

  auto field = simulate_gp(train, truth, sigma2, rng);
  Vector y = field.y;

  auto part = make_partition(train, rho, 7);
  auto dag = build_dag(part, train);
  auto factor = build_sparse_factor(dag, truth, train);
  auto plan = build_prediction_plan(part, train, tests, rho, 8);

  // RadGP side: z | y by CG, then joint test draws plus nugget noise
  const int m = 20000;
  Vector y_pos(n);
  for (int i = 0; i < n; ++i) y_pos[i] = y[dag.order[i]];
  PosteriorDraws draws;
  draws.L1 = m;
  draws.L2 = 1;
  draws.beta = Matrix::Zero(m, 0);
  draws.sigma2 = Vector::Constant(m, sigma2);
  draws.theta = Matrix(m, 2);
  draws.theta.col(0).setConstant(1.0);
  draws.theta.col(1).setConstant(19.97);
  draws.theta_names = {"tau2", "phi"};
  draws.z_train = Matrix(m, n);
  CgConfig cg;
  for (int t = 0; t < m; ++t) {
    draws.retained.push_back(t + 1);
    Vector z_pos = sample_latent_cg(factor, y_pos, Matrix(), Vector(), sigma2, cg, rng);
    for (int i = 0; i < n; ++i) draws.z_train(t, dag.order[i]) = z_pos[i];
  }
  sample_prediction(plan, draws, truth, Rng(909), Matrix(), true);

  // exact side: p(Y_T2 | Y_T1) under the true GP
  Matrix sigma_tt = cov_matrix(truth, train);
  sigma_tt.diagonal().array() += sigma2;
  Eigen::LLT<Matrix> llt(sigma_tt);
  Matrix cross(5, n);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < n; ++i)
      cross(j, i) = kernel_value(truth, (tests.point(j) - train.point(i)).norm());
  Matrix ctt = cov_matrix(truth, tests);
  ctt.diagonal().array() += sigma2;
  Vector mean = cross * llt.solve(y);
  Matrix cond = ctt - cross * llt.solve(cross.transpose());
  Eigen::LLT<Matrix> cllt(0.5 * (cond + cond.transpose()));
  Matrix cl = cllt.matrixL();
  Matrix exact(m, 5);
  Rng er(808);
  for (int t = 0; t < m; ++t) {
    Vector u(5);
    for (int q = 0; q < 5; ++q) u[q] = er.normal();
    exact.row(t) = (mean + cl * u).transpose();
  }

  double sw2 = sliced_w2(draws.y_test, exact, 200, 4242);
  double gate = 0.05 * std::sqrt(1.01);
  report(7, "joint-prediction fidelity vs exact conditional", sw2 <= gate,
         "sliced W2 " + fmt(sw2) + " <= " + fmt(gate) + " at rho " + fmt(rho));
}

// ---------------------------------------------------------------- criterion 8
void criterion_sliced_w2_validity() {
  Rng rng(88);
  bool ok = true;

  Matrix x(2000, 1), yv(2000, 1);
  for (int i = 0; i < 2000; ++i) {
    x(i, 0) = rng.normal();
    yv(i, 0) = 0.3 + 1.4 * rng.normal();
  }
  std::vector<double> xs(x.data(), x.data() + 2000), ys(yv.data(), yv.data() + 2000);
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double w2sq = 0.0;
  for (int i = 0; i < 2000; ++i) w2sq += (xs[i] - ys[i]) * (xs[i] - ys[i]) / 2000.0;
  double exact = std::sqrt(w2sq);
  double got1 = sliced_w2(x, yv, 17, 5);
  if (std::abs(got1 - exact) > 1e-12) ok = false;

  const int n = 10000;
  Matrix p(n, 2), q(n, 2);
  for (int i = 0; i < n; ++i) {
    p(i, 0) = rng.normal();
    p(i, 1) = rng.normal();
    q(i, 0) = 2.0 + rng.normal();
    q(i, 1) = rng.normal();
  }
  double got2 = sliced_w2(p, q, 500, 6);
  double want2 = std::sqrt(2.0);
  if (std::abs(got2 - want2) / want2 > 0.05) ok = false;

  report(8, "sliced-W2 estimator validity", ok,
         "1-D dev " + fmt(std::abs(got1 - exact)) + ", mean-shift rel dev " +
             fmt(std::abs(got2 - want2) / want2));
}

// ---------------------------------------------------------------- criterion 9
void criterion_partition_validity() {
  Rng master(909);
  bool ok = true;
  for (int t = 0; t < 100; ++t) {
    int d = 1 + t % 3;
    int n = 30 + static_cast<int>(master.uniform_int(171));
    Rng rng = master.substream(t);
    LocationSet set = uniform_locations(n, d, rng);
    double q = min_separation(set);
    double rho = q + (set.diameter() - q) * (0.05 + 0.5 * master.uniform());
    auto p1 = make_partition(set, rho, 900 + t);
    auto p2 = make_partition(set, rho, 900 + t);
    if (p1.subsets != p2.subsets) ok = false;
    auto rep = validate_partition(p1, set);
    if (!rep.valid() || !rep.subset_count_ok) ok = false;
  }
  report(9, "partition validity, subset-count bound, determinism", ok,
         "100 random configurations over d in {1,2,3}");
}

// --------------------------------------------------------------- criterion 10
void criterion_response_acceptance() {
  auto res = run_study_replicate(20, 1001, false);
  bool ok = res.accept >= 0.15 && res.accept <= 0.35;
  report(10, "response-model adaptive MH acceptance targeting", ok,
         "post burn-in acceptance " + fmt(res.accept) + ", phi mean " + fmt(res.phi_mean));
}

}  // namespace

int main() {
  const char* env = std::getenv("RADGP_REDUCED_ACCEPTANCE");
  const bool full = !(env && std::string(env) == "1");
  auto t0 = std::chrono::steady_clock::now();

  criterion_exact_equivalence();
  criterion_w2_bound_sandwich();
  criterion_radius_monotonicity();
  criterion_kolmogorov_consistency();
  criterion_sampler_laws();
  criterion_simulation_study(full);
  criterion_joint_prediction();
  criterion_sliced_w2_validity();
  criterion_partition_validity();
  criterion_response_acceptance();

  std::cout << (failures == 0 ? "ALL CRITERIA PASSED"
                              : std::to_string(failures) + " CRITERIA FAILED")
            << " in " << fmt(elapsed(t0)) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
