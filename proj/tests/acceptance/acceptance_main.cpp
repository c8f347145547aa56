// Acceptance gate for the library: each check exercises one shipped claim
// end to end and prints a single [PASS]/[FAIL] line with the measured
// numbers. The exit status is the number of failed checks. Everything is
// seeded, so the gate is deterministic run to run.
#include "hrmsbo/acquisition.hpp"
#include "hrmsbo/csv.hpp"
#include "hrmsbo/gp.hpp"
#include "hrmsbo/ground_truth.hpp"
#include "hrmsbo/harness.hpp"
#include "hrmsbo/kernel.hpp"
#include "hrmsbo/objectives.hpp"
#include "hrmsbo/optimizer.hpp"
#include "hrmsbo/rng.hpp"
#include "hrmsbo/types.hpp"

#include <Eigen/Eigenvalues>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace {

using hrmsbo::Bounds;
using hrmsbo::Dataset;
using hrmsbo::Rng;
using hrmsbo::Vec;
using hrmsbo::gp::GPModel;
using hrmsbo::gp::Hyperparameters;
namespace acq = hrmsbo::acq;
namespace bench = hrmsbo::bench;
namespace csv = hrmsbo::csv;
namespace gp = hrmsbo::gp;
namespace harness = hrmsbo::harness;
namespace opt = hrmsbo::opt;

// Upper 5% point of the variance-ratio (F) distribution with (19, 19)
// degrees of freedom, and the standard normal 95th percentile. Fixed to
// full double precision so the gate needs no stats dependency.
constexpr double kFCrit19 = 2.1682516014062609;
constexpr double kZCrit05 = 1.6448536269514722;

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(const Check& c, double elapsed_s) {
  std::printf("[%s] %s: %s (%.1f s)\n", c.pass ? "PASS" : "FAIL",
              c.name.c_str(), c.detail.c_str(), elapsed_s);
  std::fflush(stdout);
}

void progress(const std::string& line) {
  std::printf("  .. %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof buffer, format, args);
  va_end(args);
  return buffer;
}

double sample_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// Standardized rank-sum statistic for the hypothesis that `a` is
// stochastically larger than `b`: mid-ranks for ties, normal approximation
// (no continuity or tie correction; the scored quantities are continuous, so
// exact ties essentially never occur at these sample sizes).
double rank_sum_z(const std::vector<double>& a, const std::vector<double>& b) {
  struct Tagged {
    double value;
    bool from_a;
  };
  std::vector<Tagged> all;
  all.reserve(a.size() + b.size());
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(),
            [](const Tagged& x, const Tagged& y) { return x.value < y.value; });

  double rank_sum_a = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].value == all[i].value) ++j;
    const double mid_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (all[k].from_a) rank_sum_a += mid_rank;
    }
    i = j + 1;
  }

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double mu = na * (na + nb + 1.0) / 2.0;
  const double sigma = std::sqrt(na * nb * (na + nb + 1.0) / 12.0);
  return (rank_sum_a - mu) / sigma;
}

// ---------------------------------------------------------------------------
// Check 1: GP regression correctness.
// ---------------------------------------------------------------------------

Check check_gp_correctness() {
  Check c{"1/7 gp regression", false, ""};

  // a) Analytic log-marginal gradient against central finite differences on
  //    randomized instances spanning 1-3 input dimensions.
  const double step = 1e-5;
  double max_rel = 0.0;
  bool all_factorized = true;
  for (int instance = 0; instance < 100; ++instance) {
    Rng rng = Rng::keyed(0xACC1, {static_cast<std::uint64_t>(instance)});
    const int d = 1 + instance % 3;
    const int n = 4 + static_cast<int>(rng.uniform() * 20.0);
    Dataset data;
    for (int i = 0; i < n; ++i) {
      Vec x(d);
      for (int j = 0; j < d; ++j) x(j) = rng.uniform();
      data.add(std::move(x), 1.5 * rng.normal());
    }
    Hyperparameters h;
    h.log_lengthscales = Vec(d);
    for (int j = 0; j < d; ++j) {
      h.log_lengthscales(j) = std::log(0.2) + 0.5 * rng.normal();
    }
    h.log_signal_sd = 0.3 * rng.normal();
    h.log_noise_sd = std::log(0.3) + 0.3 * rng.normal();
    if (h.noise_sd() < 0.05) h.log_noise_sd = std::log(0.05);

    const auto res = gp::log_marginal_likelihood(data, h);
    if (!std::holds_alternative<gp::LogMarginal>(res)) {
      all_factorized = false;
      continue;
    }
    const Vec grad = std::get<gp::LogMarginal>(res).gradient;
    const Vec theta = h.to_vector();
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Vec tp = theta, tm = theta;
      tp(k) += step;
      tm(k) -= step;
      const auto vp =
          gp::log_marginal_value(data, Hyperparameters::from_vector(tp));
      const auto vm =
          gp::log_marginal_value(data, Hyperparameters::from_vector(tm));
      if (!std::holds_alternative<double>(vp) ||
          !std::holds_alternative<double>(vm)) {
        all_factorized = false;
        continue;
      }
      const double fd =
          (std::get<double>(vp) - std::get<double>(vm)) / (2.0 * step);
      const double scale = std::max({1.0, std::abs(fd), std::abs(grad(k))});
      max_rel = std::max(max_rel, std::abs(grad(k) - fd) / scale);
    }
  }
  const bool grad_ok = all_factorized && max_rel < 1e-4;

  // b) Near-noise-free fits interpolate their data.
  double max_interp_err = 0.0;
  {
    Dataset d1;
    const double xs[] = {0.05, 0.18, 0.33, 0.47, 0.61, 0.74, 0.88, 0.97};
    for (double x : xs) {
      d1.add(Vec::Constant(1, x), std::sin(3.0 * x) + 0.5 * x * x);
    }
    const auto r1 = gp::fit(d1, Hyperparameters::isotropic(1, 0.3, 1.0, 1e-6));
    if (std::holds_alternative<GPModel>(r1)) {
      const auto& m = std::get<GPModel>(r1);
      for (int i = 0; i < d1.n(); ++i) {
        max_interp_err =
            std::max(max_interp_err,
                     std::abs(m.predict_one(d1.points[i]).first - d1.targets[i]));
      }
    } else {
      max_interp_err = std::numeric_limits<double>::infinity();
    }

    Dataset d2;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        Vec x(2);
        x << 0.1 + 0.4 * i, 0.15 + 0.35 * j;
        d2.add(std::move(x), std::sin(3.0 * x(0)) + std::cos(2.0 * x(1)));
      }
    }
    const auto r2 = gp::fit(d2, Hyperparameters::isotropic(2, 0.4, 1.0, 1e-6));
    if (std::holds_alternative<GPModel>(r2)) {
      const auto& m = std::get<GPModel>(r2);
      for (int i = 0; i < d2.n(); ++i) {
        max_interp_err =
            std::max(max_interp_err,
                     std::abs(m.predict_one(d2.points[i]).first - d2.targets[i]));
      }
    } else {
      max_interp_err = std::numeric_limits<double>::infinity();
    }
  }
  const bool interp_ok = max_interp_err < 1e-5;

  // c) Gram matrices are symmetric positive semidefinite, and the escalating
  //    regularization ladder behaves: untouched for separated data, engaged
  //    at its top level by a near-duplicate pair with small noise, and
  //    reported as a failure (not a bogus factorization) when even the top
  //    level cannot condition heavily replicated noise-free data.
  bool psd_ok = true;
  {
    Rng rng = Rng::keyed(0xACC1, {999});
    std::vector<Vec> pts;
    for (int i = 0; i < 60; ++i) {
      Vec x(2);
      x << rng.uniform(), rng.uniform();
      pts.push_back(std::move(x));
    }
    const auto h = Hyperparameters::isotropic(2, 0.3, 1.1, 0.1);
    const hrmsbo::Mat gram = gp::kernel_gram(pts, h);
    psd_ok = psd_ok && (gram.array() == gram.transpose().array()).all();
    Eigen::SelfAdjointEigenSolver<hrmsbo::Mat> eig(gram);
    psd_ok = psd_ok && eig.eigenvalues().minCoeff() >= -1e-10;
  }
  double ladder_jitter = -1.0;
  bool ladder_ok = true;
  {
    Dataset dup;
    dup.add(Vec::Constant(1, 0.3), 1.0);
    dup.add(Vec::Constant(1, 0.3), 1.1);
    const auto h = Hyperparameters::isotropic(1, 0.5, 1.0, 0.012);
    const auto r = gp::fit(dup, h);
    if (std::holds_alternative<GPModel>(r)) {
      ladder_jitter = std::get<GPModel>(r).jitter_used();
      ladder_ok = ladder_ok && std::abs(ladder_jitter - 1e-4) < 1e-12;
    } else {
      ladder_ok = false;
    }

    Dataset apart;
    apart.add(Vec::Constant(1, 0.2), 1.0);
    apart.add(Vec::Constant(1, 0.8), 1.1);
    const auto r2 = gp::fit(apart, h);
    ladder_ok = ladder_ok && std::holds_alternative<GPModel>(r2) &&
                std::get<GPModel>(r2).jitter_used() == 0.0;

    Dataset many;
    for (int i = 0; i < 10; ++i) many.add(Vec::Constant(1, 0.5), 0.7);
    const auto r3 =
        gp::fit(many, Hyperparameters::isotropic(1, 0.5, 1.0, 1e-9));
    ladder_ok = ladder_ok &&
                std::holds_alternative<gp::IllConditioned>(r3) &&
                std::get<gp::IllConditioned>(r3).last_jitter > 0.0;
  }

  c.pass = grad_ok && interp_ok && psd_ok && ladder_ok;
  c.detail = fmt(
      "grad max rel err %.2e (tol 1e-4); interp max err %.2e (tol 1e-5); "
      "gram psd %s; jitter ladder %s (top level %.1e)",
      max_rel, max_interp_err, psd_ok ? "ok" : "VIOLATED",
      ladder_ok ? "ok" : "BROKEN", ladder_jitter);
  return c;
}

// ---------------------------------------------------------------------------
// Check 2: acquisition oracles and proposal optimality.
// ---------------------------------------------------------------------------

GPModel audit_model() {
  Dataset d;
  Rng rng(42);
  for (int i = 0; i < 12; ++i) {
    Vec x(2);
    x << rng.uniform(), rng.uniform();
    const double y =
        2.0 * ((x(0) - 0.3) * (x(0) - 0.3) + (x(1) - 0.6) * (x(1) - 0.6)) +
        0.05 * rng.normal();
    d.add(std::move(x), y);
  }
  auto r = gp::fit_standardized(d, Bounds::unit(2),
                                Hyperparameters::isotropic(2, 0.25, 1.0, 0.2));
  return std::get<GPModel>(std::move(r));
}

double incumbent_of(const GPModel& m) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& x : m.data().points) {
    const Vec raw = m.input_bounds() ? m.input_bounds()->from_unit(x) : x;
    best = std::min(best, m.predict_one(raw).first);
  }
  return best;
}

Check check_acquisition() {
  Check c{"2/7 acquisition oracles", false, ""};

  // a) Closed-form expected improvement against plain Monte Carlo on random
  //    (mean, sd, incumbent) triples. The floor term covers what the MC
  //    reference is blind to: zero hits in 1e6 samples is plausible only
  //    once the hit probability drops below ~7e-6, where the true value is
  //    at most ~1.5e-6 * sd and the estimated standard error is 0, so a
  //    1e-5 * sd allowance admits those triples without loosening the test
  //    anywhere the MC actually resolves the value.
  int mc_disagreements = 0;
  double worst_z = 0.0;
  const int kSamples = 1000000;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng = Rng::keyed(0xACC2, {static_cast<std::uint64_t>(trial)});
    const double mean = rng.uniform(-1.5, 1.5);
    const double sd = rng.uniform(0.05, 2.0);
    const double best = rng.uniform(-1.5, 1.5);
    const double closed = acq::expected_improvement(mean, sd, best);

    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      const double y = mean + sd * rng.normal();
      const double imp = std::max(best - y, 0.0);
      sum += imp;
      sum_sq += imp * imp;
    }
    const double mc = sum / kSamples;
    const double var =
        std::max(0.0, (sum_sq - kSamples * mc * mc) / (kSamples - 1.0));
    const double se = std::sqrt(var / kSamples);
    const double err = std::abs(closed - mc);
    if (err > 3.0 * se + 1e-5 * sd) ++mc_disagreements;
    if (se > 0.0) worst_z = std::max(worst_z, err / se);
  }
  const bool mc_ok = mc_disagreements == 0;

  // b) Proposals beat a dense grid of the acquisition they optimize.
  const GPModel model = audit_model();
  const double incumbent = incumbent_of(model);
  const Bounds box = Bounds::unit(2);
  const int t = 4;
  const acq::ProposalOptions options;
  const double beta = acq::beta_schedule(t, 2, options.delta);

  std::vector<Vec> grid;
  grid.reserve(201 * 201);
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 200; ++j) {
      Vec x(2);
      x << i / 200.0, j / 200.0;
      grid.push_back(std::move(x));
    }
  }
  Vec grid_mean, grid_var;
  model.predict(grid, grid_mean, grid_var);
  double grid_best_ei = -std::numeric_limits<double>::infinity();
  double grid_best_ucb = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < grid_mean.size(); ++i) {
    const double sd = std::sqrt(grid_var[i]);
    grid_best_ei = std::max(
        grid_best_ei, acq::expected_improvement(grid_mean[i], sd, incumbent));
    grid_best_ucb = std::max(
        grid_best_ucb, -acq::lower_confidence_bound(grid_mean[i], sd, beta));
  }

  Rng r_ei = Rng::keyed(0xACC3, {1});
  const Vec p_ei =
      acq::propose_single(model, acq::Kind::ei, box, incumbent, t, r_ei);
  const auto [m_ei, v_ei] = model.predict_one(p_ei);
  const double ei_at_proposal =
      acq::expected_improvement(m_ei, std::sqrt(v_ei), incumbent);

  Rng r_ucb = Rng::keyed(0xACC3, {2});
  const Vec p_ucb =
      acq::propose_single(model, acq::Kind::ucb, box, incumbent, t, r_ucb);
  const auto [m_ucb, v_ucb] = model.predict_one(p_ucb);
  const double ucb_at_proposal =
      -acq::lower_confidence_bound(m_ucb, std::sqrt(v_ucb), beta);

  const double ei_margin = ei_at_proposal - (grid_best_ei - 1e-6);
  const double ucb_margin = ucb_at_proposal - (grid_best_ucb - 1e-6);
  const bool audit_ok = ei_margin >= 0.0 && ucb_margin >= 0.0;

  // c) A batch of one is the single proposal, bit for bit.
  bool batch_ok = true;
  for (acq::Kind kind : {acq::Kind::ei, acq::Kind::ucb, acq::Kind::ts}) {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
      Rng a = Rng::keyed(0xACC3, {3, static_cast<std::uint64_t>(kind), seed});
      Rng b = Rng::keyed(0xACC3, {3, static_cast<std::uint64_t>(kind), seed});
      const Vec single = acq::propose_single(model, kind, box, incumbent, t, a);
      const auto batch =
          acq::propose_batch(model, kind, box, incumbent, 1, t, b);
      batch_ok = batch_ok && batch.complete && batch.locations.size() == 1 &&
                 (single.array() == batch.locations[0].array()).all();
    }
  }

  c.pass = mc_ok && audit_ok && batch_ok;
  c.detail = fmt(
      "ei vs 1e6-sample mc: %d/100 outside 3 se (worst %.2f se); grid audit "
      "margins ei %.2e ucb %.2e; batch(1) == single %s",
      mc_disagreements, worst_z, ei_margin, ucb_margin,
      batch_ok ? "bitwise" : "MISMATCH");
  return c;
}

// ---------------------------------------------------------------------------
// Check 3: evaluation accounting across the repeat/batch grid.
// ---------------------------------------------------------------------------

Check check_accounting() {
  Check c{"3/7 evaluation accounting", false, ""};
  const auto objective = bench::find_objective("bowl");
  int cells_ok = 0;
  std::string first_failure;

  int cell_index = 0;
  for (int rs : {1, 3, 5, 10}) {
    for (int ms : {1, 3, 5}) {
      opt::HRMSConfig config;
      config.kind = acq::Kind::ucb;
      config.rs = rs;
      config.ms = ms;
      config.bounds = objective.bounds;
      config.seed = 0xB000 + static_cast<std::uint64_t>(cell_index);
      config.n_seed = 20;
      config.budget_evals = 500;
      ++cell_index;

      bench::SyntheticHandle handle(objective);
      const auto result = opt::run(config, handle);

      const int q = rs * ms;
      const int expected_iters = (500 - 20 + q - 1) / q;
      int trace_evals = 0;
      int trace_missing = 0;
      bool per_iter_ok = true;
      for (const auto& rec : result.trace) {
        trace_evals += rec.evaluations;
        trace_missing += rec.missing;
        per_iter_ok = per_iter_ok && rec.evaluations + rec.missing == q;
      }

      const bool ok =
          result.reason == opt::TerminationReason::budget &&
          result.iterations == expected_iters &&
          result.evals_used == 20 + result.iterations * q - trace_missing &&
          result.evals_used == 20 + trace_evals && trace_missing == 0 &&
          per_iter_ok && result.evals_used >= 500 &&
          result.evals_used - q < 500 &&
          (rs != 3 || ms != 3 ||
           (result.evals_used == 506 && result.iterations == 54));
      if (ok) {
        ++cells_ok;
      } else if (first_failure.empty()) {
        first_failure = fmt(
            "rs=%d ms=%d: reason=%s iters=%d (want %d) evals=%d", rs, ms,
            opt::to_string(result.reason).c_str(), result.iterations,
            expected_iters, result.evals_used);
      }
      progress(fmt("accounting rs=%d ms=%d: iters=%d evals=%d %s", rs, ms,
                   result.iterations, result.evals_used, ok ? "ok" : "BAD"));
    }
  }

  c.pass = cells_ok == 12;
  c.detail = fmt("%d/12 cells exact (seeds 20 + iters*rs*ms - missing; "
                 "budget crossed once)%s%s",
                 cells_ok, first_failure.empty() ? "" : "; first failure: ",
                 first_failure.c_str());
  return c;
}

// ---------------------------------------------------------------------------
// Checks 4 and 5 share one study: 20 repeats of single-sample runs and of
// repeat/batch runs on the volatile objective, scored for recommendation
// spread and for surrogate fidelity against a dense ground-truth reference.
// ---------------------------------------------------------------------------

struct RepeatStudy {
  std::vector<double> x_err_ss, x_err_rb;
  std::vector<double> rmse_ss, rmse_rb;
  std::vector<double> nlpd_ss, nlpd_rb;
};

RepeatStudy run_repeat_study() {
  const auto objective = bench::find_objective("volatile-ttk");
  progress("building ground-truth reference (dense replicated grid fit)");
  const auto t0 = std::chrono::steady_clock::now();
  const bench::GroundTruthModel truth = bench::build_ground_truth(objective, 42);
  progress(fmt("ground truth ready: %d points (%.0f s)", truth.points_used,
               seconds_since(t0)));

  RepeatStudy study;
  for (const auto [rs, ms] : {std::pair{1, 1}, std::pair{3, 3}}) {
    for (int rep = 0; rep < 20; ++rep) {
      opt::HRMSConfig config;
      config.kind = acq::Kind::ucb;
      config.rs = rs;
      config.ms = ms;
      config.bounds = objective.bounds;
      config.seed = harness::derive_run_seed(7, acq::Kind::ucb, rs, ms, rep);
      config.n_seed = 20;
      config.budget_evals = 500;

      bench::SyntheticHandle handle(objective);
      const auto t1 = std::chrono::steady_clock::now();
      const auto result = opt::run(config, handle);
      const double x_err = (result.x_hat - objective.true_min_x).norm();
      const auto fidelity = bench::fidelity(
          result.model, truth, hrmsbo::mix_key(config.seed, {0xD3}));

      auto& x_errs = rs == 1 ? study.x_err_ss : study.x_err_rb;
      auto& rmses = rs == 1 ? study.rmse_ss : study.rmse_rb;
      auto& nlpds = rs == 1 ? study.nlpd_ss : study.nlpd_rb;
      x_errs.push_back(x_err);
      rmses.push_back(fidelity.rmse_mean);
      nlpds.push_back(fidelity.nlpd);

      progress(fmt(
          "study rs=%d ms=%d rep=%02d: x_err=%.4f rmse=%.3f nlpd=%.3f "
          "evals=%d reason=%s (%.0f s)",
          rs, ms, rep, x_err, fidelity.rmse_mean, fidelity.nlpd,
          result.evals_used, opt::to_string(result.reason).c_str(),
          seconds_since(t1)));
    }
  }
  return study;
}

Check check_repeatability(const RepeatStudy& study) {
  Check c{"4/7 recommendation repeatability", false, ""};
  const double sd_ss = sample_sd(study.x_err_ss);
  const double sd_rb = sample_sd(study.x_err_rb);
  const double var_ratio =
      sd_rb > 0.0 ? (sd_ss * sd_ss) / (sd_rb * sd_rb)
                  : std::numeric_limits<double>::infinity();
  c.pass = sd_rb < sd_ss && var_ratio > kFCrit19;
  c.detail = fmt(
      "sd(x_err) single-sample %.4f vs repeat/batch %.4f; variance ratio "
      "%.3f vs one-sided F crit %.3f (19,19 df) => %s",
      sd_ss, sd_rb, var_ratio, kFCrit19,
      c.pass ? "tighter with repeats" : "NOT significantly tighter");
  return c;
}

Check check_fidelity(const RepeatStudy& study) {
  Check c{"5/7 surrogate fidelity", false, ""};
  const double rmse_ss = mean_of(study.rmse_ss);
  const double rmse_rb = mean_of(study.rmse_rb);
  const double nlpd_ss = mean_of(study.nlpd_ss);
  const double nlpd_rb = mean_of(study.nlpd_rb);
  const double z_rmse = rank_sum_z(study.rmse_ss, study.rmse_rb);
  const double z_nlpd = rank_sum_z(study.nlpd_ss, study.nlpd_rb);
  const bool rmse_ok = rmse_rb < rmse_ss && z_rmse > kZCrit05;
  const bool nlpd_ok = nlpd_rb < nlpd_ss && z_nlpd > kZCrit05;
  c.pass = rmse_ok && nlpd_ok;
  c.detail = fmt(
      "mean rmse %.3f->%.3f (rank-sum z %.2f), mean nlpd %.3f->%.3f "
      "(z %.2f), crit %.3f => %s",
      rmse_ss, rmse_rb, z_rmse, nlpd_ss, nlpd_rb, z_nlpd, kZCrit05,
      c.pass ? "repeat/batch models closer to truth"
             : "NOT significantly closer");
  return c;
}

// ---------------------------------------------------------------------------
// Check 6: heavy repeat sampling on a near-noiseless objective terminates
// early with an ill-conditioned covariance; single sampling does not.
// ---------------------------------------------------------------------------

bench::SyntheticObjective near_noiseless_fixture() {
  auto objective = bench::find_objective("volatile-ttk");
  objective.name = "near-noiseless";
  const auto base = objective.mean;
  // Fine-grained deterministic texture far below the fitted lengthscales:
  // the surrogate cannot resolve it, so single-sample runs keep reading it
  // as apparent noise and stay well conditioned, while exact repeat samples
  // agree to the true 0.02 noise floor and the replicated rows defeat the
  // regularization ladder.
  objective.mean = [base](const Vec& x) {
    return base(x) + 2.0 * std::sin(193.7 * x(0) + 77.3 * x(1)) *
                         std::sin(141.1 * x(1) - 31.7 * x(0));
  };
  objective.noise_sd = [](const Vec&) { return 0.02; };
  return objective;
}

Check check_ill_conditioning() {
  Check c{"6/7 repeat-driven ill-conditioning", false, ""};
  const auto objective = near_noiseless_fixture();
  int early[2] = {0, 0};
  int min_evals[2] = {INT32_MAX, INT32_MAX};
  const int arms[2] = {1, 10};
  for (int a = 0; a < 2; ++a) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      opt::HRMSConfig config;
      config.kind = acq::Kind::ucb;
      config.rs = arms[a];
      config.ms = 1;
      config.bounds = objective.bounds;
      config.seed = seed;
      config.budget_evals = 150;

      bench::SyntheticHandle handle(objective);
      const auto result = opt::run(config, handle);
      if (result.reason == opt::TerminationReason::ill_conditioned) {
        ++early[a];
        min_evals[a] = std::min(min_evals[a], result.evals_used);
      }
    }
    progress(fmt("near-noiseless rs=%d: %d/20 terminated early%s", arms[a],
                 early[a],
                 early[a] > 0
                     ? fmt(" (earliest at %d evals)", min_evals[a]).c_str()
                     : ""));
  }
  c.pass = early[1] > early[0];
  c.detail = fmt(
      "early-termination rate rs=10: %d/20 vs rs=1: %d/20 => %s", early[1],
      early[0],
      c.pass ? "repeats induce ill-conditioning" : "NO separation");
  return c;
}

// ---------------------------------------------------------------------------
// Check 7: determinism of runs and grids.
// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Drop one named column from CSV text (wall-clock fields are the single
// permitted run-to-run difference).
std::string drop_column(const std::string& text, const std::string& column) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  std::ptrdiff_t drop = -1;
  bool first = true;
  while (std::getline(in, line)) {
    auto fields = csv::split_row(line);
    if (first) {
      const auto it = std::find(fields.begin(), fields.end(), column);
      drop = it == fields.end() ? -1 : it - fields.begin();
      first = false;
    }
    if (drop >= 0 && drop < static_cast<std::ptrdiff_t>(fields.size())) {
      fields.erase(fields.begin() + drop);
    }
    out << csv::join_row(fields) << '\n';
  }
  return out.str();
}

Check check_determinism() {
  Check c{"7/7 determinism", false, ""};

  // a) The same configuration replays bit-identically in process.
  const auto objective = bench::find_objective("volatile-ttk");
  opt::HRMSConfig config;
  config.kind = acq::Kind::ei;
  config.rs = 2;
  config.ms = 2;
  config.bounds = objective.bounds;
  config.seed = 5;
  config.budget_evals = 40;

  bench::SyntheticHandle h1(objective), h2(objective);
  const auto r1 = opt::run(config, h1);
  const auto r2 = opt::run(config, h2);
  bool run_ok = (r1.x_hat.array() == r2.x_hat.array()).all() &&
                r1.y_hat == r2.y_hat && r1.evals_used == r2.evals_used &&
                r1.iterations == r2.iterations &&
                r1.trace.size() == r2.trace.size();
  for (std::size_t i = 0; run_ok && i < r1.trace.size(); ++i) {
    const auto& a = r1.trace[i];
    const auto& b = r2.trace[i];
    run_ok = a.proposals.size() == b.proposals.size();
    for (std::size_t j = 0; run_ok && j < a.proposals.size(); ++j) {
      run_ok = (a.proposals[j].array() == b.proposals[j].array()).all();
    }
  }

  // b) The same plan, run twice into fresh directories, produces
  //    byte-identical records apart from wall-clock timings.
  harness::ExperimentPlan plan;
  plan.objective = "bowl";
  plan.acquisitions = {acq::Kind::ucb};
  plan.rs_levels = {1, 2};
  plan.ms_levels = {1};
  plan.repeats = 2;
  plan.budget_evals = 40;
  plan.base_seed = 3;
  plan.n_seed = 10;

  const auto root = std::filesystem::temp_directory_path() /
                    ("hrmsbo-acceptance-" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  bool grid_ok = false;
  std::size_t bytes = 0;
  try {
    harness::GridOptions options;
    options.truth.grid_per_dim = 9;
    options.truth.reps = 2;
    options.truth.map_points = 100;
    options.truth.map_restarts = 2;
    options.fidelity.audit_per_dim = 21;
    options.fidelity.holdout = 64;

    options.out_dir = root / "a";
    harness::run_grid(plan, options);
    options.out_dir = root / "b";
    harness::run_grid(plan, options);

    const std::string a =
        drop_column(read_file(root / "a" / "records.csv"), "wall_ms");
    const std::string b =
        drop_column(read_file(root / "b" / "records.csv"), "wall_ms");
    bytes = a.size();
    grid_ok = !a.empty() && a == b;
  } catch (const std::exception& e) {
    c.detail = fmt("grid replay threw: %s", e.what());
    std::filesystem::remove_all(root);
    return c;
  }
  std::filesystem::remove_all(root);

  c.pass = run_ok && grid_ok;
  c.detail = fmt(
      "replayed run bitwise %s; grid records byte-identical modulo wall_ms "
      "%s (%zu bytes)",
      run_ok ? "equal" : "DIFFERENT", grid_ok ? "yes" : "NO", bytes);
  return c;
}

}  // namespace

int main() {
  std::printf("acceptance gate: 7 checks\n");
  std::fflush(stdout);
  const auto t_total = std::chrono::steady_clock::now();

  int failures = 0;
  auto run_check = [&](auto&& make) {
    const auto t0 = std::chrono::steady_clock::now();
    const Check c = make();
    report(c, seconds_since(t0));
    if (!c.pass) ++failures;
  };

  run_check(check_gp_correctness);
  run_check(check_acquisition);
  run_check(check_accounting);

  const auto t_study = std::chrono::steady_clock::now();
  const RepeatStudy study = run_repeat_study();
  const double study_s = seconds_since(t_study);
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Check c4 = check_repeatability(study);
    report(c4, study_s + seconds_since(t0));
    if (!c4.pass) ++failures;
    const Check c5 = check_fidelity(study);
    report(c5, seconds_since(t0));
    if (!c5.pass) ++failures;
  }

  run_check(check_ill_conditioning);
  run_check(check_determinism);

  std::printf("acceptance gate: %d/7 passed (%.0f s total)\n", 7 - failures,
              seconds_since(t_total));
  return failures;
}
