// Acceptance checks. Each criterion prints one PASS/FAIL line with the
// measured quantities; `postsel_acceptance <id>` runs a single criterion.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "postsel/cli.hpp"
#include "postsel/estimators.hpp"
#include "postsel/intervals.hpp"
#include "postsel/normal.hpp"
#include "postsel/rng.hpp"
#include "postsel/selection.hpp"
#include "postsel/simlab.hpp"
#include "postsel/stats.hpp"
#include "postsel/truncnorm.hpp"

using namespace postsel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds; 0 for none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Step-up rule straight from the definition, O(n log n) only for the sort.
std::size_t brute_force_bh(std::span<const double> y, double q) {
  const std::size_t n = y.size();
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = std::abs(y[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  for (std::size_t k = n; k >= 1; --k) {
    const double t = std_quantile(1.0 - q * static_cast<double>(k) / (2.0 * static_cast<double>(n)));
    if (a[k - 1] >= t) return k;
  }
  return 0;
}

std::vector<double> sparse_draw(Rng& r, std::size_t n, std::size_t signals, double nu) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (i < signals ? nu : 0.0) + r.normal();
  return y;
}

// Grid maximum likelihood on [-10, 10]: coarse step 1e-2, then 1e-5.
double grid_mle(double y, double t) {
  const auto ll = [&](double m) { return -0.5 * (y - m) * (y - m) - std_log_tail_mass(m, t); };
  double best = -10.0;
  double best_ll = ll(best);
  for (int j = 1; j <= 2000; ++j) {
    const double m = -10.0 + 1e-2 * j;
    const double v = ll(m);
    if (v > best_ll) best = m, best_ll = v;
  }
  const double lo = best - 1e-2;
  double fine = lo;
  double fine_ll = ll(fine);
  for (int j = 1; j <= 2000; ++j) {
    const double m = lo + 1e-5 * j;
    const double v = ll(m);
    if (v > fine_ll) fine = m, fine_ll = v;
  }
  return fine;
}

Outcome squeeze() {
  const auto r = squeeze_audit(500, 500, -12.0, 12.0, 10.0, 1e-9);
  return {r.violations == 0, fmt("%zu points, %zu with |y|>=t, violations=%zu, max excess=%.3g",
                                 r.points, r.evaluated, r.violations, r.max_violation)};
}

Outcome solver_contract() {
  Rng rng(2);
  double worst = 0.0;
  std::size_t bad = 0;
  for (int it = 0; it < 10000; ++it) {
    const double t = 8.0 * rng.uniform();
    const double y = std::copysign(t + 6.0 * rng.uniform(), rng.uniform() - 0.5);
    const double m = est_tn(y, t);
    const TruncatedGaussian g(m, 1.0, TruncRegion::two_sided(t));
    const double rel = std::abs(trunc_mean(g) - y) / std::max(1.0, std::abs(y));
    worst = std::max(worst, rel);
    if (rel > 1e-8) ++bad;
  }
  double worst_grid = 0.0;
  std::size_t grid_bad = 0;
  Rng spot(3);
  for (int it = 0; it < 100; ++it) {
    const double t = 5.0 * spot.uniform();
    const double y = std::copysign(t + 4.0 * spot.uniform(), spot.uniform() - 0.5);
    const double d = std::abs(est_tn(y, t) - grid_mle(y, t));
    worst_grid = std::max(worst_grid, d);
    if (d > 1e-4) ++grid_bad;
  }
  return {bad == 0 && grid_bad == 0,
          fmt("max scaled residual %.3g over 1e4 draws (%zu > 1e-8); max |mle - grid| %.3g over 100 (%zu > 1e-4)",
              worst, bad, worst_grid, grid_bad)};
}

Outcome tn_ordering() {
  const double a = est_tn(6.0, 5.8), b = est_tn(6.0, 5.5), c = est_tn(6.0, 4.5);
  return {a > 0.0 && a < b && b < c && c < 6.0,
          fmt("mu(5.8)=%.15g mu(5.5)=%.15g mu(4.5)=%.15g", a, b, c)};
}

Outcome pivot() {
  PivotConfig cfg;
  cfg.n = 100;
  cfg.procedure = Procedure::TopK;
  cfg.K = 10;
  cfg.S = 1000;
  cfg.seed = 4;
  const auto r = pivot_uniformity(cfg);
  return {r.pooled >= 10000 && r.ks.p_value > 0.01 && r.naive.p_value < 1e-6,
          fmt("%zu pooled pivots, KS D=%.4f p=%.4f; untruncated control D=%.4f p=%.3g", r.pooled,
              r.ks.statistic, r.ks.p_value, r.naive.statistic, r.naive.p_value)};
}

Outcome bh_equivalence() {
  Rng rng(5);
  std::size_t step_up_mismatch = 0;
  std::array<std::size_t, 3> left_mismatch{}, right_mismatch{};
  const std::array<double, 3> rs{0.5, 1.0, 2.0};
  for (int it = 0; it < 1000; ++it) {
    const std::size_t n = 2 + rng.below(199);
    const std::size_t signals = rng.below(n / 4 + 1);
    const auto y = sparse_draw(rng, n, signals, 1.0 + 4.0 * rng.uniform());
    const double q = 0.02 + 0.4 * rng.uniform();
    const auto out = select_bh(y, q);
    if (out.k_hat != brute_force_bh(y, q)) ++step_up_mismatch;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      const auto s = sk_profile(y, q, rs[j]);
      if (leftmost_local_min(s) != out.k_hat) ++left_mismatch[j];
      if (rightmost_local_min(s) != out.k_hat) ++right_mismatch[j];
    }
  }
  const bool left_ok = left_mismatch[0] == 0 && left_mismatch[1] == 0 && left_mismatch[2] == 0;
  return {step_up_mismatch == 0 && left_ok,
          fmt("step-up mismatches %zu/1000; leftmost local min != k_hat on %zu/%zu/%zu (r=0.5/1/2); "
              "rightmost local min != k_hat on %zu/%zu/%zu",
              step_up_mismatch, left_mismatch[0], left_mismatch[1], left_mismatch[2],
              right_mismatch[0], right_mismatch[1], right_mismatch[2])};
}

Outcome affine_equivalence() {
  Rng rng(6);
  const std::array<double, 4> scales{0.05, 0.2, 0.5, 1.0};
  std::size_t discrepancies = 0, probes = 0, inside = 0, strict_differ = 0;
  std::array<std::size_t, 3> outcomes{};
  for (int proc = 0; proc < 3; ++proc) {
    for (int g = 0; g < 20; ++g) {
      const auto y = sparse_draw(rng, 40, 5, 3.0);
      SelectionOutcome o;
      try {
        o = proc == 0 ? select_fixed(y, 2.0) : proc == 1 ? select_topk(y, 6) : select_bh(y, 0.2);
      } catch (const TieAtBoundary&) {
        continue;
      }
      ++outcomes[static_cast<std::size_t>(proc)];
      const auto c = affine_build(o, y);
      std::vector<double> z(y.size());
      for (int p = 0; p < 1000; ++p) {
        const double s = scales[static_cast<std::size_t>(p) % scales.size()];
        for (std::size_t i = 0; i < y.size(); ++i) z[i] = y[i] + s * rng.normal();
        const bool a = affine_verify(c, z);
        const bool e = same_event(o, z);
        ++probes;
        inside += a;
        if (a != e) ++discrepancies;
        if (proc == 2 && a != same_event_strict_order(o, z)) ++strict_differ;
      }
    }
  }
  return {discrepancies == 0,
          fmt("%zu probes over %zu/%zu/%zu fixed/topk/bh outcomes, %zu inside, discrepancies %zu "
              "(BH with strict null order would differ on %zu)",
              probes, outcomes[0], outcomes[1], outcomes[2], inside, discrepancies, strict_differ)};
}

Outcome winners_curse() {
  const auto w = winners_curse_demo(100, 1000, 7);
  const std::size_t n = w.mean_raw.size();
  std::size_t js_bad = 0, bc_bad = 0;
  for (std::size_t k = 0; k < n; ++k) {
    js_bad += !(w.median_js[k] < w.median_raw[k]);
    bc_bad += !(w.median_bc[k] < w.median_raw[k]);
  }
  const double mse_n = w.mean_raw[n - 1];
  const double mse_1 = w.mean_raw[0];
  return {std::abs(mse_n - 1.0) <= 0.05 && mse_1 > 2.0 && js_bad == 0 && bc_bad == 0,
          fmt("raw MSE(n)=%.4f MSE(1)=%.3f; K with median JS >= raw: %zu, BC >= raw: %zu", mse_n,
              mse_1, js_bad, bc_bad)};
}

Outcome bh_mse_ordering() {
  SimConfig cfg;
  cfg.n = 1000;
  cfg.nu = 6.0;
  cfg.alpha = 0.15;
  cfg.S = 55;
  cfg.q_grid = {0.1};
  cfg.seed = 8;
  cfg.methods = {Method::TN, Method::HT, Method::ST};
  const auto r = run_bh_experiment(cfg);
  const double tn = r.median[0][0], ht = r.median[0][1], st = r.median[0][2];
  return {tn < ht && tn < st,
          fmt("median MSE(k_hat): TN %.4f, HT %.4f, ST %.4f (%zu empty of %zu)", tn, ht, st,
              r.empty[0], r.replications)};
}

Outcome coverage() {
  const double p = 0.1;
  const std::size_t reps = 10000;
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
  bool ok = true;
  std::string detail;
  std::uint64_t cell = 0;
  for (double mu : {0.0, 1.0, 3.0}) {
    for (double t : {1.0, 2.0}) {
      Rng rng = Rng::substream(9, {cell++});
      const TruncatedGaussian g(mu, 1.0, TruncRegion::two_sided(t));
      std::size_t hits = 0;
      for (std::size_t i = 0; i < reps; ++i) {
        const double y = trunc_sample(g, rng);
        const Ci ci = ci_tn(y, t, 1.0, p);
        hits += ci.lower <= mu && mu <= ci.upper;
      }
      const double cov = static_cast<double>(hits) / static_cast<double>(reps);
      ok = ok && std::abs(cov - (1.0 - p)) <= 3.0 * se;
      detail += fmt("%s(mu=%g,t=%g) %.4f", detail.empty() ? "" : "; ", mu, t, cov);
    }
  }
  return {ok, detail + fmt(" [band 0.9 +- %.4f]", 3.0 * se)};
}

Outcome efron_experiment() {
  EfronConfig cfg;
  cfg.seed = 10;
  const auto rep = run_efron_experiment(cfg);
  const auto idx = [&](CiMethod m) {
    return static_cast<std::size_t>(std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin());
  };
  const std::size_t tn = idx(CiMethod::TN), by = idx(CiMethod::BY);
  std::vector<double> fcp_tn, fcp_by, up_share;
  std::size_t wider = 0;
  for (const auto& r : rep.replicates) {
    fcp_tn.push_back(r.metrics[tn].fcp);
    fcp_by.push_back(r.metrics[by].fcp);
    if (r.metrics[by].mean_width > r.metrics[tn].mean_width) ++wider;
    if (r.metrics[tn].upward_miss_share) up_share.push_back(*r.metrics[tn].upward_miss_share);
  }
  const double S = static_cast<double>(rep.replicates.size());
  const double fcr_tn = mean(fcp_tn), fcr_by = mean(fcp_by);
  const double se_tn = sample_sd(fcp_tn) / std::sqrt(S), se_by = sample_sd(fcp_by) / std::sqrt(S);
  const double share = up_share.empty() ? std::nan("") : median(up_share);
  const bool ok = fcr_tn <= 0.1 + 3.0 * se_tn && fcr_by <= 0.1 + 3.0 * se_by && wider >= 28 &&
                  share >= 0.3 && share <= 0.7;
  return {ok, fmt("FCR TN %.4f (se %.4f), BY %.4f (se %.4f); BY wider in %zu/%zu; median TN upward-miss share %.3f",
                  fcr_tn, se_tn, fcr_by, se_by, wider, rep.replicates.size(), share)};
}

Outcome negative_var1() {
  EfronConfig cfg;
  cfg.S = 20;
  cfg.seed = 11;
  cfg.methods = {CiMethod::Efron};
  cfg.lindsay_df = 7;
  const auto rep = run_efron_experiment(cfg);
  std::size_t negative = 0, fit_failed = 0, invalid = 0, rows = 0;
  double lowest = INFINITY;
  for (const auto& r : rep.replicates) {
    negative += r.negative_var1;
    fit_failed += r.fit_failed;
    invalid += r.metrics[0].count - r.metrics[0].valid;
    rows += r.metrics[0].count;
    lowest = std::min(lowest, r.min_var1);
  }
  return {negative >= 1,
          fmt("%zu/20 replications with Var1 <= 0 (lowest %.3g); %zu/%zu Efron rows flagged invalid; %zu fit failures",
              negative, lowest, invalid, rows, fit_failed)};
}

Outcome risk_bound() {
  RiskBoundSpec spec;
  spec.space = SparsitySpace::L0;
  const std::size_t n = 10000;
  spec.eta = 1.0 / std::sqrt(static_cast<double>(n));
  spec.q = 0.1;
  spec.r = 2.0;
  const auto r = risk_bound_check(spec, n, 200, 12);
  return {r.ratio <= 1.25 && r.decomposition_violations == 0,
          fmt("risk TN %.2f, bound %.2f, ratio %.3f; decomposition violations %zu/200 (max ratio %.3f); "
              "mean k_hat %.2f, k(mu) %.2f",
              r.risk_tn, r.constants.bound, r.ratio, r.decomposition_violations,
              r.max_decomposition_ratio, r.mean_k_hat, r.k_mu)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "postsel_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  struct Run {
    const char* sub;
    const char* config;
  };
  const std::vector<Run> runs{
      {"topk", "n=300\nS=5\nK_grid=1,5,20\nmethods=tn,ht,st,js,sure,bc,boot1,gmleb,tweedie\nB=200\n"},
      {"bh", "n=300\nS=5\nq_grid=0.05,0.2\nmethods=tn,ht,st,boot2,oracle\nB2_outer=3\nB2_inner=100\nB=100\n"},
      {"efron", "n=2000\nsignals=200\nS=3\n"},
      {"winners-curse", "n=50\nS=20\n"},
      {"pivot", "n=50\nK=5\nS=1000\n"},
      {"risk", "n=2000\nmc=10\n"},
      {"squeeze", "ny=50\nnt=50\n"},
  };
  std::size_t files = 0, differ = 0, failed = 0;
  for (const Run& r : runs) {
    const fs::path cfg = root / (std::string(r.sub) + ".cfg");
    std::ofstream(cfg) << r.config;
    std::vector<fs::path> dirs;
    for (const char* threads : {"1", "3"}) {
      const fs::path out = root / (std::string(r.sub) + "_" + threads);
      std::ostringstream o, e;
      const int code = cli::run({"simulate", r.sub, "--config", cfg.string(), "--seed", "13", "-o",
                                 out.string(), "--threads", threads},
                                o, e);
      if (code != 0) {
        ++failed;
        std::cerr << r.sub << ": " << e.str();
      }
      dirs.push_back(out);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      if (slurp(entry.path()) != slurp(dirs[1] / entry.path().filename())) ++differ;
    }
  }
  fs::remove_all(root);
  return {failed == 0 && differ == 0 && files >= runs.size(),
          fmt("%zu subcommands run twice (1 and 3 threads), %zu CSVs compared, %zu differ, %zu runs failed",
              runs.size(), files, differ, failed)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "squeeze |ST| <= |TN| <= |HT|", 10, squeeze},
      {2, "TN solver contract", 30, solver_contract},
      {3, "TN ordering at y = 6", 0, tn_ordering},
      {4, "selective pivot uniformity", 60, pivot},
      {5, "BH step-up and S_k local minimum", 0, bh_equivalence},
      {6, "affine event equivalence", 0, affine_equivalence},
      {7, "winner's curse", 60, winners_curse},
      {8, "BH-threshold MSE ordering", 300, bh_mse_ordering},
      {9, "TN interval coverage", 120, coverage},
      {10, "FCR, width and miss balance", 600, efron_experiment},
      {11, "negative posterior variance flagged", 0, negative_var1},
      {12, "l0 risk bound sanity", 300, risk_bound},
      {13, "simulate determinism", 0, determinism},
  };
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  bool all_pass = true;
  bool ran = false;
  for (const Criterion& c : all) {
    if (only != 0 && c.id != only) continue;
    ran = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = fmt("%.2fs", secs);
    if (c.time_limit > 0) {
      timing += fmt(" of %.0fs", c.time_limit);
      pass = pass && secs < c.time_limit;
    }
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
              << " (" << timing << ")" << std::endl;
    all_pass = all_pass && pass;
  }
  if (!ran) {
    std::cerr << "unknown criterion " << only << '\n';
    return 2;
  }
  return all_pass ? 0 : 1;
}
