// radgp command line: simulate / fit-latent / fit-response / predict /
// diagnose / partition. Batch oriented: everything comes from an INI config
// plus dotted command-line overrides, outputs are CSV files under --out.

#include <CLI11.hpp>

#include <radgp/radgp.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace radgp;

namespace {

int log_level() {
  const char* env = std::getenv("RADGP_LOG");
  if (!env) return 1;
  std::string v(env);
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[radgp] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[radgp:debug] " << msg << "\n";
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string rho = "";
  std::int64_t seed = -1;
  int threads = 0;
  std::vector<std::string> extras;
};

// leftover tokens of the form --a.b=v or --a.b v become config overrides
void apply_extras(Config& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string tok = extras[i];
    if (tok.rfind("--", 0) != 0) throw Error("cli", "unrecognized argument '" + tok + "'");
    tok = tok.substr(2);
    auto eq = tok.find('=');
    if (eq != std::string::npos) {
      cfg.set(tok.substr(0, eq), tok.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw Error("cli", "option --" + tok + " expects a value");
      cfg.set(tok, extras[++i]);
    }
  }
}

Config make_config(const CommonArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = Config::load(args.config_path);
  apply_extras(cfg, args.extras);
  if (args.seed >= 0) cfg.set("run.seed", std::to_string(args.seed));
  if (!args.rho.empty()) cfg.set("model.rho", args.rho);
  if (args.threads > 0) cfg.set("run.threads", std::to_string(args.threads));
  cfg.set("run.out", args.out_dir);

  int threads = static_cast<int>(cfg.get_int("run.threads", 0));
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
  Eigen::setNbThreads(threads > 0 ? threads : 0);
  return cfg;
}

std::string out_path(const Config& cfg, const std::string& name) {
  fs::path dir(cfg.get("run.out", "."));
  fs::create_directories(dir);
  return (dir / name).string();
}

std::uint64_t seed_of(const Config& cfg) {
  return static_cast<std::uint64_t>(cfg.get_int("run.seed", 1));
}

double resolve_rho(const Config& cfg, const LocationSet& training) {
  std::string rho = cfg.get("model.rho", "auto");
  if (rho != "auto") {
    double v = detail::parse_double(rho, "model.rho");
    if (!(v > 0.0)) throw Error("cli", "model.rho must be positive");
    return v;
  }
  KernelSpec k = kernel_from_config(cfg);
  double q = min_separation(training);
  double v = recommend_radius(k, q, training.size(), static_cast<int>(training.dim()));
  log_info("model.rho = auto resolved to " + format_value(v) + " (q = " + format_value(q) + ")");
  return v;
}

// per-parameter theta priors from config keys priors.theta_<name>_*
std::vector<ThetaPrior> theta_priors_from_config(const Config& cfg, const KernelSpec& k) {
  std::vector<ThetaPrior> out;
  for (const std::string& name : k.param_names()) {
    ThetaPrior p;
    std::string base = "priors.theta_" + name;
    std::string kind = cfg.get(base + "_prior", "flat");
    if (kind == "flat") p.kind = ThetaPrior::Kind::flat;
    else if (kind == "inverse_gamma") p.kind = ThetaPrior::Kind::inverse_gamma;
    else if (kind == "fixed") p.kind = ThetaPrior::Kind::fixed;
    else throw Error("cli", base + "_prior must be flat, inverse_gamma or fixed");
    p.a = cfg.get_double(base + "_a", 2.0);
    p.b = cfg.get_double(base + "_b", 1.0);
    p.lo = cfg.get_double(base + "_lo", 1e-8);
    p.hi = cfg.get_double(base + "_hi", 1e8);
    out.push_back(p);
  }
  return out;
}

PriorSpec priors_from_config(const Config& cfg, Eigen::Index p, const KernelSpec& k) {
  PriorSpec prior = PriorSpec::defaults(p, k.n_params());
  prior.sigma2_a = cfg.get_double("priors.sigma2_a", 2.0);
  prior.sigma2_b = cfg.get_double("priors.sigma2_b", 0.01);
  if (p > 0) {
    double prec = cfg.get_double("priors.beta_precision", 0.0);
    double mean = cfg.get_double("priors.beta_mean", 0.0);
    prior.beta_precision = prec * Matrix::Identity(p, p);
    prior.beta_mean = Vector::Constant(p, mean);
  }
  prior.theta = theta_priors_from_config(cfg, k);
  return prior;
}

void write_run_metadata(const Config& cfg, const PosteriorDraws& d, double rho,
                        const std::string& model, double seconds) {
  std::vector<std::pair<std::string, std::string>> meta = {
      {"model", model},
      {"seed", std::to_string(d.seed)},
      {"config_hash", std::to_string(cfg.hash())},
      {"rho", format_value(rho)},
      {"L1", std::to_string(d.L1)},
      {"L2", std::to_string(d.L2)},
      {"theta_accept_rate", format_value(d.theta_accept_rate)},
      {"cg_iterations_mean", format_value(d.cg_iterations_mean)},
      {"cg_iterations_max", std::to_string(d.cg_iterations_max)},
      {"runtime_seconds", format_value(seconds)},
  };
  write_metadata(out_path(cfg, "meta.txt"), meta);
}

int cmd_simulate(const Config& cfg) {
  KernelSpec k = kernel_from_config(cfg);
  const int d = static_cast<int>(cfg.get_int("simulate.d", 2));
  const std::string layout = cfg.get("simulate.layout", "grid");
  const int n = static_cast<int>(cfg.get_int("simulate.n", 1600));
  const int n_test = static_cast<int>(cfg.get_int("simulate.n_test", 1000));
  const double sigma = cfg.get_double("simulate.sigma", 0.1);
  const int cap = static_cast<int>(cfg.get_int("simulate.max_dense_n", 4096));
  Rng rng(seed_of(cfg));

  LocationSet train;
  if (layout == "grid") {
    int side = static_cast<int>(std::llround(std::pow(double(n), 1.0 / d)));
    train = grid_locations(side, d);
    if (train.size() != n) log_info("grid layout rounded n to " + std::to_string(train.size()));
  } else if (layout == "uniform") {
    train = uniform_locations(n, d, rng);
  } else {
    throw Error("cli", "simulate.layout must be grid or uniform");
  }
  LocationSet tests = n_test > 0 ? uniform_locations(n_test, d, rng) : LocationSet();

  // one joint field over train ∪ test so the test truths share the surface
  Matrix all(train.size() + tests.size(), d);
  all.topRows(train.size()) = train.coords();
  if (tests.size() > 0) all.bottomRows(tests.size()) = tests.coords();
  LocationSet combined(all);
  auto field = simulate_gp(combined, k, sigma * sigma, rng, cap);

  Vector y_train = field.y.head(train.size());
  Vector y_test = field.y.tail(tests.size());
  write_locations_csv(out_path(cfg, "train.csv"), train, &y_train);
  write_locations_csv(out_path(cfg, "test.csv"), tests);
  write_locations_csv(out_path(cfg, "test_truth.csv"), tests, &y_test);
  log_info("simulated " + std::to_string(train.size()) + " training and " +
           std::to_string(tests.size()) + " test observations");
  return 0;
}

int cmd_fit(const Config& cfg, bool latent) {
  TrainingFile tf = read_training_csv(cfg.get("paths.train", out_path(cfg, "train.csv")));
  RegressionData data{tf.X, tf.y, tf.locations};
  KernelSpec k = kernel_from_config(cfg);
  PriorSpec prior = priors_from_config(cfg, data.p(), k);
  double rho = resolve_rho(cfg, data.locations);

  auto t0 = std::chrono::steady_clock::now();
  PosteriorDraws draws;
  if (latent) {
    LatentMcmcConfig mc;
    mc.rho = rho;
    mc.L1 = static_cast<int>(cfg.get_int("mcmc.L1", 4000));
    mc.L2 = static_cast<int>(cfg.get_int("mcmc.L2", 2000));
    mc.seed = seed_of(cfg);
    mc.thin = static_cast<int>(cfg.get_int("mcmc.thin", 1));
    mc.cg.tol = cfg.get_double("cg.tol", 1e-8);
    mc.cg.max_iter = static_cast<int>(cfg.get_int("cg.max_iter", 0));
    mc.cg.jacobi = cfg.get("cg.precond", "jacobi") == "jacobi";
    mc.mh.step = cfg.get_double("mcmc.theta_step", 0.1);
    mc.mh.jitter = cfg.get_double("model.jitter", 0.0);
    mc.theta_init = cfg.get_list("mcmc.theta_init");
    mc.store_latent = cfg.get_bool("output.save_latent", true);
    draws = run_latent_mcmc(data, prior, k, mc);
  } else {
    ResponseMcmcConfig mc;
    mc.rho = rho;
    mc.L1 = static_cast<int>(cfg.get_int("mcmc.L1", 4000));
    mc.L2 = static_cast<int>(cfg.get_int("mcmc.L2", 2000));
    mc.seed = seed_of(cfg);
    mc.thin = static_cast<int>(cfg.get_int("mcmc.thin", 1));
    mc.target_accept = cfg.get_double("mcmc.target_accept", 0.24);
    mc.step_init = cfg.get_double("mcmc.ram_step_init", 0.1);
    mc.adapt = cfg.get_bool("mcmc.adapt", true);
    mc.jitter = cfg.get_double("model.jitter", 0.0);
    mc.theta_init = cfg.get_list("mcmc.theta_init");
    mc.sigma2_init = cfg.get_double("mcmc.sigma2_init", 0.0);
    draws = run_response_mcmc(data, prior, k, mc);
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_draws_csv(out_path(cfg, "draws.csv"), draws);
  if (latent && draws.z_train.size() > 0)
    write_field_draws_csv(out_path(cfg, "latent.csv"), draws.retained, draws.z_train);
  write_run_metadata(cfg, draws, rho, latent ? "latent" : "response", seconds);
  log_info("fit finished: theta acceptance " + format_value(draws.theta_accept_rate) +
           ", mean CG iterations " + format_value(draws.cg_iterations_mean));
  return 0;
}

int cmd_predict(const Config& cfg) {
  TrainingFile tf = read_training_csv(cfg.get("paths.train", out_path(cfg, "train.csv")));
  LocationSet tests = read_test_csv(cfg.get("paths.test", out_path(cfg, "test.csv")));
  KernelSpec k = kernel_from_config(cfg);
  const std::string model = cfg.get("predict.model", "latent");
  const double level = cfg.get_double("predict.level", 0.95);
  double rho = resolve_rho(cfg, tf.locations);

  // reconstruct the stored chain
  CsvTable dt = read_csv(cfg.get("paths.draws", out_path(cfg, "draws.csv")));
  PosteriorDraws draws;
  draws.L1 = static_cast<int>(dt.values.rows());
  draws.L2 = static_cast<int>(cfg.get_int("mcmc.L2", 2000));
  draws.seed = seed_of(cfg);
  int sc = dt.column("sigma2");
  if (sc < 0) throw Error("cli", "draws file lacks column sigma2");
  draws.sigma2 = dt.values.col(sc);
  std::vector<int> beta_cols;
  for (int j = 0;; ++j) {
    int c = dt.column("beta_" + std::to_string(j));
    if (c < 0) break;
    beta_cols.push_back(c);
  }
  draws.beta = Matrix(draws.L1, static_cast<Eigen::Index>(beta_cols.size()));
  for (std::size_t j = 0; j < beta_cols.size(); ++j)
    draws.beta.col(static_cast<Eigen::Index>(j)) = dt.values.col(beta_cols[j]);
  draws.theta_names = k.param_names();
  draws.theta = Matrix(draws.L1, static_cast<Eigen::Index>(draws.theta_names.size()));
  for (std::size_t j = 0; j < draws.theta_names.size(); ++j) {
    int c = dt.column("theta_" + draws.theta_names[j]);
    if (c < 0) throw Error("cli", "draws file lacks column theta_" + draws.theta_names[j]);
    draws.theta.col(static_cast<Eigen::Index>(j)) = dt.values.col(c);
  }

  if (tests.size() == 0) {
    write_csv(out_path(cfg, "predictions.csv"), {"iteration", "location_index", "value"},
              Matrix(0, 3));
    write_csv(out_path(cfg, "summary.csv"),
              {"location_index", "post_mean", "post_sd", "q025", "q975"}, Matrix(0, 5));
    log_info("empty test set: wrote header-only prediction files");
    return 0;
  }

  Matrix x_test;
  if (!beta_cols.empty()) {
    // the test schema carries coordinates only; covariate effects at test
    // locations are not reconstructable, so they enter as zero
    x_test = Matrix::Zero(tests.size(), static_cast<Eigen::Index>(beta_cols.size()));
  }

  auto partition = make_partition(tf.locations, rho, seed_of(cfg));
  auto plan = build_prediction_plan(partition, tf.locations, tests, rho, seed_of(cfg));

  if (model == "latent") {
    auto [iters, z_train] =
        read_field_draws_csv(cfg.get("paths.latent", out_path(cfg, "latent.csv")));
    draws.retained = iters;
    draws.z_train = z_train;
    if (z_train.cols() != tf.locations.size())
      throw Error("cli", "latent draws do not match the training set size");
    sample_prediction(plan, draws, k, Rng(seed_of(cfg)).substream(0xfeedULL), x_test,
                      cfg.get_bool("predict.include_nugget", true));
  } else if (model == "response") {
    for (int l = draws.L2; l <= draws.L1; ++l) draws.retained.push_back(l);
    auto dag = build_dag(partition, tf.locations);
    sample_prediction_response(plan, draws, k, dag, tf.locations, tf.y, tf.X,
                               Rng(seed_of(cfg)).substream(0xfeedULL), x_test,
                               static_cast<int>(cfg.get_int("predict.response_cap", 500)));
  } else {
    throw Error("cli", "predict.model must be latent or response");
  }

  write_field_draws_csv(out_path(cfg, "predictions.csv"), draws.retained, draws.y_test);
  write_summary_csv(out_path(cfg, "summary.csv"), summarize_draws(draws.y_test, level));
  log_info("predicted " + std::to_string(tests.size()) + " locations over " +
           std::to_string(draws.n_retained()) + " retained draws");
  return 0;
}

int cmd_diagnose(const Config& cfg) {
  KernelSpec k = kernel_from_config(cfg);
  TrainingFile tf = read_training_csv(cfg.get("paths.train", out_path(cfg, "train.csv")));
  const int cap = static_cast<int>(cfg.get_int("diagnose.cap", 2000));
  const std::uint64_t seed = seed_of(cfg);
  double rho = resolve_rho(cfg, tf.locations);

  // approximation diagnostics on the training set under the configured kernel
  if (tf.locations.size() <= cap) {
    auto partition = make_partition(tf.locations, rho, seed);
    auto dag = build_dag(partition, tf.locations);
    auto f = build_sparse_factor(dag, k, tf.locations);
    auto ex = build_exact_factor(tf.locations, k, dag.order, 0.0, cap);
    const int n = dag.size();
    Matrix sigma(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        sigma(i, j) = kernel_value(k, tf.locations.distance(dag.order[i], dag.order[j]));
    auto rep = w2_report(ex, f, sigma, cap);
    std::ofstream out(out_path(cfg, "w2_report.csv"));
    out << "metric,value\n";
    out << "w2_squared," << format_value(rep.w2_squared) << "\n";
    out << "trace_bound," << format_value(rep.trace_bound) << "\n";
    out << "column_hypothesis_met," << (rep.column_hypothesis_met ? 1 : 0) << "\n";
    if (rep.column_bound) out << "column_bound," << format_value(*rep.column_bound) << "\n";
  } else {
    log_info("training set above diagnose.cap: skipping dense W2 report");
  }

  // predictive accuracy against held-out truth
  const std::string truth_path = cfg.get("paths.test_truth", out_path(cfg, "test_truth.csv"));
  const std::string pred_path = cfg.get("paths.predictions", out_path(cfg, "predictions.csv"));
  if (fs::exists(truth_path) && fs::exists(pred_path)) {
    TrainingFile truth = read_training_csv(truth_path);
    auto [iters, y_draws] = read_field_draws_csv(pred_path);
    if (y_draws.cols() != truth.y.size())
      throw Error("cli", "prediction draws do not match the truth file");
    auto s = summarize_draws(y_draws, cfg.get_double("predict.level", 0.95));
    auto [mse, cover] = mse_and_coverage(truth.y, s.post_mean, s.lower, s.upper);
    std::ofstream out(out_path(cfg, "accuracy.csv"));
    out << "metric,value\n";
    out << "mse," << format_value(mse) << "\n";
    out << "coverage," << format_value(cover) << "\n";
    log_info("mse = " + format_value(mse) + ", coverage = " + format_value(cover));

    // sliced W2 between posterior predictive draws and true-model predictive
    // draws on the configured local regions
    auto anchors = cfg.get_list("diagnose.region_anchors");
    if (anchors.empty()) anchors = {0.15, 0.45, 0.75};
    const double size = cfg.get_double("diagnose.region_size", 0.1);
    const int n_proj = static_cast<int>(cfg.get_int("diagnose.n_projections", 200));
    const double sigma_truth = cfg.get_double("simulate.sigma", 0.1);
    const int d = static_cast<int>(tf.locations.dim());

    if (tf.locations.size() <= cap && d == 2) {
      Matrix sigma_tt = cov_matrix(k, tf.locations);
      sigma_tt.diagonal().array() += sigma_truth * sigma_truth;
      Eigen::LLT<Matrix> llt(sigma_tt);
      std::ofstream out2(out_path(cfg, "sliced_w2.csv"));
      out2 << "region,method,value\n";
      Rng rng(seed ^ 0xabcdULL);
      for (double ax : anchors) {
        for (double ay : anchors) {
          std::vector<int> inside;
          for (Eigen::Index j = 0; j < truth.locations.size(); ++j) {
            auto pt = truth.locations.point(j);
            if (pt[0] >= ax && pt[0] <= ax + size && pt[1] >= ay && pt[1] <= ay + size)
              inside.push_back(static_cast<int>(j));
          }
          if (inside.empty()) continue;
          const Eigen::Index nr = static_cast<Eigen::Index>(inside.size());
          const int m = static_cast<int>(y_draws.rows());
          Matrix ours(m, nr);
          for (Eigen::Index c = 0; c < nr; ++c) ours.col(c) = y_draws.col(inside[c]);

          Matrix cross(nr, tf.locations.size());
          for (Eigen::Index c = 0; c < nr; ++c)
            for (Eigen::Index i = 0; i < tf.locations.size(); ++i)
              cross(c, i) =
                  kernel_value(k, (truth.locations.point(inside[c]) - tf.locations.point(i)).norm());
          Matrix crr(nr, nr);
          for (Eigen::Index a = 0; a < nr; ++a)
            for (Eigen::Index b = 0; b < nr; ++b)
              crr(a, b) = kernel_value(
                  k, (truth.locations.point(inside[a]) - truth.locations.point(inside[b])).norm());
          crr.diagonal().array() += sigma_truth * sigma_truth;
          Vector mean = cross * llt.solve(tf.y);
          Matrix cond = crr - cross * llt.solve(cross.transpose());
          Eigen::LLT<Matrix> cllt(0.5 * (cond + cond.transpose()) +
                                  1e-12 * Matrix::Identity(nr, nr));
          Matrix cl = cllt.matrixL();
          Matrix exact(m, nr);
          for (int t = 0; t < m; ++t) {
            Vector u(nr);
            for (Eigen::Index q = 0; q < nr; ++q) u[q] = rng.normal();
            exact.row(t) = (mean + cl * u).transpose();
          }
          double sw2 = sliced_w2(ours, exact, n_proj, seed ^ 0x5117ULL);
          out2 << format_value(ax) << "x" << format_value(ay) << ",radgp," << format_value(sw2)
               << "\n";
        }
      }
    }
  } else {
    log_info("prediction or truth files missing: skipping accuracy diagnostics");
  }
  return 0;
}

int cmd_partition(const Config& cfg) {
  TrainingFile tf = read_training_csv(cfg.get("paths.train", out_path(cfg, "train.csv")));
  double rho = resolve_rho(cfg, tf.locations);
  auto partition = make_partition(tf.locations, rho, seed_of(cfg));
  auto report = validate_partition(partition, tf.locations);
  auto dag = build_dag(partition, tf.locations);
  write_partition_csv(out_path(cfg, "partition.csv"), partition);
  write_dag_csv(out_path(cfg, "dag.csv"), dag);
  if (cfg.get_bool("output.dump_factor", false)) {
    auto f = build_sparse_factor(dag, kernel_from_config(cfg), tf.locations,
                                 cfg.get_double("model.jitter", 0.0));
    write_factor_csv(out_path(cfg, "factor_b.csv"), out_path(cfg, "factor_d.csv"), f);
  }
  log_info("partition: M = " + std::to_string(report.M) + ", subset-count bound " +
           std::to_string(report.subset_count_bound) + ", violations " +
           std::to_string(report.violations.size()));
  return report.valid() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial neighbors Gaussian process regression"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "INI configuration file");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--seed", args.seed, "master RNG seed");
    sub->add_option("--rho", args.rho, "approximation radius (number or 'auto')");
    sub->add_option("--threads", args.threads, "worker threads (0 = hardware)");
    sub->allow_extras();
  };

  CLI::App* c_sim = app.add_subcommand("simulate", "draw synthetic data from the exact GP");
  CLI::App* c_fitl = app.add_subcommand("fit-latent", "latent-effects Gibbs sampler");
  CLI::App* c_fitr = app.add_subcommand("fit-response", "marginalized response-model sampler");
  CLI::App* c_pred = app.add_subcommand("predict", "joint prediction at test locations");
  CLI::App* c_diag = app.add_subcommand("diagnose", "approximation and accuracy diagnostics");
  CLI::App* c_part = app.add_subcommand("partition", "dump partition / DAG / factor");
  for (auto* sub : {c_sim, c_fitl, c_fitr, c_pred, c_diag, c_part}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    args.extras = sub->remaining();
    Config cfg = make_config(args);
    log_debug("config hash " + std::to_string(cfg.hash()));
    if (sub == c_sim) return cmd_simulate(cfg);
    if (sub == c_fitl) return cmd_fit(cfg, true);
    if (sub == c_fitr) return cmd_fit(cfg, false);
    if (sub == c_pred) return cmd_predict(cfg);
    if (sub == c_diag) return cmd_diagnose(cfg);
    if (sub == c_part) return cmd_partition(cfg);
    throw Error("cli", "no subcommand");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: cli: " << e.what() << "\n";
    return 1;
  }
}
