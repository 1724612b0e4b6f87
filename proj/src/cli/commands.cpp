#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "postsel/cli.hpp"
#include "postsel/ebayes.hpp"
#include "postsel/estimators.hpp"
#include "postsel/intervals.hpp"
#include "postsel/selection.hpp"
#include "postsel/simd/kernels.hpp"
#include "postsel/simlab.hpp"
#include "postsel/stats.hpp"

#ifndef POSTSEL_VERSION
#define POSTSEL_VERSION "dev"
#endif

namespace postsel::cli {
namespace {

namespace fs = std::filesystem;

// Key=value run record written next to every output.
class Manifest {
 public:
  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write manifest '" + path.string() + "'");
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Manifest base_manifest(const std::vector<std::string>& args, const std::string& command) {
  Manifest m;
  m.add("command", command);
  for (std::size_t i = 0; i < args.size(); ++i) m.add("arg." + std::to_string(i), args[i]);
  m.add("version", POSTSEL_VERSION);
  m.add("simd", simd::isa_name(simd::active().isa));
  m.add("timestamp", utc_timestamp());
  return m;
}

std::uint64_t parse_seed(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("--seed must be an unsigned 64-bit integer, got '" + s + "'");
  }
  return v;
}

// Writes text to `path` in one go so that partial files never appear.
void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw UsageError("write failed for '" + path.string() + "'");
}

struct SelectFlags {
  std::string procedure = "bh";
  std::size_t k = 0;
  double q = 0.1;
  double lambda = 0.0;
  double sigma = 1.0;
};

void add_select_flags(CLI::App* app, SelectFlags& f) {
  app->add_option("--procedure", f.procedure, "topk, bh or fixed")
      ->check(CLI::IsMember({"topk", "bh", "fixed"}));
  app->add_option("--k", f.k, "Selection size for topk");
  app->add_option("--q", f.q, "FDR level for bh");
  app->add_option("--lambda", f.lambda, "Threshold for fixed");
  app->add_option("--sigma", f.sigma, "Noise standard deviation");
}

SelectionOutcome run_selection(const std::vector<double>& y, const SelectFlags& f) {
  if (!(f.sigma > 0.0)) throw UsageError("--sigma must be positive");
  if (f.procedure == "topk") {
    if (f.k < 1 || f.k >= y.size()) throw UsageError("--k must lie in [1, n - 1] for topk");
    return select_topk(y, f.k);
  }
  if (f.procedure == "bh") {
    if (!(f.q > 0.0 && f.q < 1.0)) throw UsageError("--q must lie in (0, 1)");
    return select_bh(y, f.q, f.sigma);
  }
  if (!(f.lambda >= 0.0)) throw UsageError("--lambda must be non-negative");
  SelectionOutcome out = select_fixed(y, f.lambda);
  out.sigma = f.sigma;
  return out;
}

std::vector<std::size_t> ranks_of(const std::vector<double>& y) {
  const auto order = abs_order(y);
  std::vector<std::size_t> rank(y.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = k + 1;
  return rank;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// ---- select --------------------------------------------------------------

struct SelectCmd {
  std::string input;
  std::string output;
  SelectFlags sel;
};

int do_select(const SelectCmd& c, const std::vector<std::string>& args) {
  const InputData data = read_input_csv(c.input);
  const SelectionOutcome out = run_selection(data.y, c.sel);
  const auto rank = ranks_of(data.y);
  std::ostringstream ss;
  CsvWriter w(ss);
  w.header({"index", "y", "selected", "rank", "sign", "threshold"});
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    w.cell(i).cell(data.y[i]).cell(out.contains(i)).cell(rank[i]).cell(sign_of(data.y[i]));
    w.cell(out.threshold).end_row();
  }
  write_file(c.output, ss.str());
  Manifest m = base_manifest(args, "select");
  m.add("input", c.input);
  m.add("output.0", c.output);
  m.write(c.output + ".manifest");
  return kOk;
}

// ---- estimate ------------------------------------------------------------

struct EstimateCmd {
  std::string input;
  std::string output;
  SelectFlags sel;
  std::string methods = "tn";
  std::string seed;
  std::size_t B = 1000;
  std::size_t B2_outer = 200;
  std::size_t B2_inner = 200;
  bool signed_ranks = false;
  int lindsay_df = 7;
  int lindsay_nbins = 120;
  double gmleb_step = 0.2;
};

std::vector<Method> parse_methods(const std::string& s) {
  std::vector<Method> out;
  for (const std::string& name : split_list(s)) {
    try {
      const Method m = parse_method(name);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("method list is empty");
  return out;
}

bool is_bootstrap(Method m) {
  return m == Method::Boot1 || m == Method::Boot2 || m == Method::BootOracle;
}

int do_estimate(const EstimateCmd& c, const std::vector<std::string>& args) {
  const std::vector<Method> methods = parse_methods(c.methods);
  EstimateOptions opt;
  opt.sigma = c.sel.sigma;
  opt.B = c.B;
  opt.B2_outer = c.B2_outer;
  opt.B2_inner = c.B2_inner;
  opt.signed_ranks = c.signed_ranks;
  opt.lindsay_df = c.lindsay_df;
  opt.lindsay_nbins = c.lindsay_nbins;
  opt.gmleb_step = c.gmleb_step;
  if (!c.seed.empty()) opt.seed = parse_seed(c.seed);
  for (Method m : methods) {
    if (is_bootstrap(m) && !opt.seed) {
      throw UsageError(std::string("method '") + method_name(m) + "' needs --seed");
    }
  }
  const InputData data = read_input_csv(c.input);
  for (Method m : methods) {
    if (m == Method::BootOracle) {
      if (!data.mu) throw UsageError("method 'oracle' needs a 'mu' column in the input");
      opt.true_mu = *data.mu;
    }
  }
  const SelectionOutcome out = run_selection(data.y, c.sel);
  const auto rank = ranks_of(data.y);

  std::vector<EstimateReport> reps;
  for (Method m : methods) reps.push_back(estimate_selected(data.y, out, m, opt));

  std::vector<std::string> header{"index", "y", "rank"};
  for (Method m : methods) {
    header.emplace_back(method_name(m));
    if (m == Method::TN) header.emplace_back("tn_residual");
  }
  std::ostringstream ss;
  CsvWriter w(ss);
  w.header(header);
  for (std::size_t j = 0; j < out.selected.size(); ++j) {
    const std::size_t i = out.selected[j];
    w.cell(i).cell(data.y[i]).cell(rank[i]);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      w.cell(reps[k].estimates[j]);
      if (methods[k] == Method::TN) w.cell(reps[k].residuals[j]);
    }
    w.end_row();
  }
  write_file(c.output, ss.str());
  Manifest m = base_manifest(args, "estimate");
  m.add("input", c.input);
  if (opt.seed) m.add("seed", std::to_string(*opt.seed));
  m.add("output.0", c.output);
  m.write(c.output + ".manifest");
  return kOk;
}

// ---- ci ------------------------------------------------------------------

struct CiCmd {
  std::string input;
  std::string output;
  SelectFlags sel;
  std::string methods = "tn";
  double level = 0.1;
  bool sign_conditioned = false;
  double pi0 = 0.9;
  int lindsay_df = 7;
  int lindsay_nbins = 120;
};

int do_ci(const CiCmd& c, const std::vector<std::string>& args, std::ostream& err) {
  if (!(c.level > 0.0 && c.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  std::vector<CiMethod> methods;
  for (const std::string& name : split_list(c.methods)) {
    try {
      methods.push_back(parse_ci_method(name));
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
  if (methods.empty()) throw UsageError("method list is empty");
  const InputData data = read_input_csv(c.input);
  const SelectionOutcome out = run_selection(data.y, c.sel);

  std::optional<DensityFit> fit;
  std::string fit_error;
  if (std::find(methods.begin(), methods.end(), CiMethod::Efron) != methods.end()) {
    try {
      fit = fit_lindsay(data.y, c.lindsay_df, c.lindsay_nbins);
    } catch (const FitError& e) {
      fit_error = e.what();
      err << "warning: density fit failed, efron intervals are NA: " << e.what() << '\n';
    }
  }
  IntervalOptions io;
  io.sigma = c.sel.sigma;
  io.sign_conditioned = c.sign_conditioned;
  io.pi0 = c.pi0;
  io.row_errors = true;
  if (fit) io.marginal = &*fit;

  const std::size_t rows = out.selected.size();
  std::vector<IntervalReport> reps;
  std::size_t failed_cells = 0;
  for (CiMethod m : methods) {
    IntervalReport r;
    if (m == CiMethod::Efron && !fit) {
      r.lower.assign(rows, std::nan(""));
      r.upper.assign(rows, std::nan(""));
      r.valid.assign(rows, false);
      r.errors.assign(rows, fit_error);
      r.failures = rows;
    } else {
      r = intervals_selected(data.y, out, m, c.level, io);
    }
    for (std::size_t j = 0; j < rows; ++j) {
      if (!r.errors[j].empty() && !(m == CiMethod::Efron && !fit)) {
        err << "warning: " << ci_method_name(m) << " interval for index " << out.selected[j]
            << " is NA: " << r.errors[j] << '\n';
      }
    }
    failed_cells += r.failures;
    reps.push_back(std::move(r));
  }

  std::vector<std::string> header{"index", "y"};
  for (CiMethod m : methods) {
    const std::string n = ci_method_name(m);
    header.push_back(n + "_lower");
    header.push_back(n + "_upper");
    header.push_back(n + "_valid");
  }
  std::ostringstream ss;
  CsvWriter w(ss);
  w.header(header);
  for (std::size_t j = 0; j < rows; ++j) {
    const std::size_t i = out.selected[j];
    w.cell(i).cell(data.y[i]);
    for (const IntervalReport& r : reps) w.cell(r.lower[j]).cell(r.upper[j]).cell(bool(r.valid[j]));
    w.end_row();
  }
  write_file(c.output, ss.str());
  Manifest m = base_manifest(args, "ci");
  m.add("input", c.input);
  m.add("output.0", c.output);
  m.write(c.output + ".manifest");
  if (rows > 0 && failed_cells == rows * methods.size()) {
    err << "error: every interval failed\n";
    return kStatistical;
  }
  return kOk;
}

// ---- simulate ------------------------------------------------------------

struct SimulateCmd {
  std::string config;
  std::string seed;
  std::string out_dir;
  std::size_t threads = 0;
};

const std::set<std::string> kSparseKeys{"n",      "alpha",        "nu",         "sigma",
                                        "S",      "methods",      "global_null", "B",
                                        "B2_outer", "B2_inner",   "signed_ranks", "lindsay_df",
                                        "lindsay_nbins", "gmleb_step", "gmleb_max_iter"};

std::set<std::string> with(std::set<std::string> s, std::initializer_list<const char*> extra) {
  for (const char* k : extra) s.insert(k);
  return s;
}

std::set<std::string> allowed_keys(const std::string& sub) {
  if (sub == "topk") return with(kSparseKeys, {"K_grid"});
  if (sub == "bh") return with(kSparseKeys, {"q_grid"});
  if (sub == "efron") {
    return {"n", "signals", "nu", "S", "q", "p", "methods", "lindsay_df", "lindsay_nbins", "pi0",
            "var_grid"};
  }
  if (sub == "winners-curse") return {"n", "S"};
  if (sub == "pivot") return {"n", "procedure", "K", "q", "lambda", "sigma", "S"};
  if (sub == "risk") {
    return {"space", "p", "eta", "q", "r", "C", "slack", "enforce_window", "delta", "n", "mc"};
  }
  return {"ny", "nt", "y_lo", "y_hi", "t_hi", "slack"};
}

int to_int(std::size_t v, const char* key) {
  if (v > 1000000) throw UsageError(std::string("config key '") + key + "' is too large");
  return static_cast<int>(v);
}

SimConfig sparse_config(const Config& c, std::uint64_t seed, std::size_t threads) {
  SimConfig s;
  s.n = config_size(c, "n", 1000);
  s.alpha = config_double(c, "alpha", 0.15);
  s.nu = config_double(c, "nu", 6.0);
  s.sigma = config_double(c, "sigma", 1.0);
  s.S = config_size(c, "S", 55);
  s.seed = seed;
  s.threads = threads;
  s.global_null = config_bool(c, "global_null", false);
  if (c.contains("methods")) s.methods = parse_methods(c.at("methods"));
  s.estimate.B = config_size(c, "B", 1000);
  s.estimate.B2_outer = config_size(c, "B2_outer", 200);
  s.estimate.B2_inner = config_size(c, "B2_inner", 200);
  s.estimate.signed_ranks = config_bool(c, "signed_ranks", false);
  s.estimate.lindsay_df = to_int(config_size(c, "lindsay_df", 7), "lindsay_df");
  s.estimate.lindsay_nbins = to_int(config_size(c, "lindsay_nbins", 120), "lindsay_nbins");
  s.estimate.gmleb_step = config_double(c, "gmleb_step", 0.2);
  s.estimate.gmleb_max_iter = to_int(config_size(c, "gmleb_max_iter", 2000), "gmleb_max_iter");
  try {
    validate(s);
  } catch (const DomainError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return s;
}

template <typename T, typename Parse>
std::vector<T> parse_grid(const Config& c, const std::string& key, std::vector<T> fallback,
                          Parse parse) {
  if (!c.contains(key)) return fallback;
  std::vector<T> out;
  for (const std::string& item : split_list(c.at(key))) out.push_back(parse(item));
  if (out.empty()) throw UsageError("config key '" + key + "' is empty");
  return out;
}

void write_mse_report(const fs::path& dir, const std::string& stem, const MSEReport& r,
                      std::vector<std::string>& outputs) {
  std::ostringstream summary;
  CsvWriter w(summary);
  w.header({r.axis, "method", "median_mse", "mean_mse", "replications", "empty", "empty_rate"});
  for (std::size_t a = 0; a < r.axis_values.size(); ++a) {
    for (std::size_t m = 0; m < r.methods.size(); ++m) {
      w.cell(r.axis_values[a]).cell(std::string(method_name(r.methods[m])));
      w.cell(r.median[a][m]).cell(r.mean[a][m]).cell(r.replications).cell(r.empty[a]);
      w.cell(static_cast<double>(r.empty[a]) / static_cast<double>(r.replications)).end_row();
    }
  }
  write_file(dir / (stem + ".csv"), summary.str());
  outputs.push_back((dir / (stem + ".csv")).string());
}

int do_simulate(const std::string& sub, const SimulateCmd& c, const Config* override_cfg,
                const std::vector<std::string>& args, std::ostream& out) {
  const bool stochastic = sub != "squeeze";
  if (stochastic && c.seed.empty()) throw UsageError("simulate " + sub + " needs --seed");
  const std::uint64_t seed = c.seed.empty() ? 0 : parse_seed(c.seed);
  const std::set<std::string> allowed = allowed_keys(sub);
  Config cfg;
  if (override_cfg != nullptr) {
    for (const auto& [k, v] : *override_cfg) {
      if (!allowed.contains(k)) throw UsageError("unknown config key '" + k + "'");
    }
    cfg = *override_cfg;
  } else if (!c.config.empty()) {
    cfg = read_config(c.config, allowed);
  }
  const std::size_t threads = c.threads == 0 ? default_threads() : c.threads;
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + c.out_dir + "'");

  std::vector<std::string> outputs;
  const auto emit = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    outputs.push_back((dir / name).string());
  };

  if (sub == "topk" || sub == "bh") {
    SimConfig s = sparse_config(cfg, seed, threads);
    MSEReport r;
    if (sub == "topk") {
      std::vector<std::size_t> fallback;
      for (std::size_t K : {1, 2, 5, 10, 20, 50, 100, 200, 500}) {
        if (K < s.n) fallback.push_back(K);
      }
      s.K_grid = parse_grid<std::size_t>(cfg, "K_grid", fallback, [](const std::string& v) {
        return config_size({{"K_grid", v}}, "K_grid", 0);
      });
      r = run_topk_experiment(s);
    } else {
      s.q_grid = parse_grid<double>(cfg, "q_grid", {0.05, 0.1, 0.2, 0.3, 0.4, 0.5},
                                    [](const std::string& v) {
                                      return config_double({{"q_grid", v}}, "q_grid", 0.0);
                                    });
      r = run_bh_experiment(s);
    }
    write_mse_report(dir, sub, r, outputs);
    // Empty replicates were dropped from r.values; walk them in order.
    std::ostringstream rs;
    CsvWriter rw(rs);
    rw.header({r.axis, "replicate", "selected", "method", "mse"});
    for (std::size_t a = 0; a < r.axis_values.size(); ++a) {
      std::vector<std::size_t> cursor(r.methods.size(), 0);
      for (std::size_t rep = 0; rep < r.replications; ++rep) {
        for (std::size_t m = 0; m < r.methods.size(); ++m) {
          rw.cell(r.axis_values[a]).cell(rep).cell(r.selected[a][rep]);
          rw.cell(std::string(method_name(r.methods[m])));
          if (r.selected[a][rep] == 0) {
            rw.cell(std::nan(""));
          } else {
            rw.cell(r.values[a][m][cursor[m]++]);
          }
          rw.end_row();
        }
      }
    }
    emit(sub + "_replicates.csv", rs.str());
    out << sub << ": " << r.axis_values.size() << " grid points x " << r.methods.size()
        << " methods, S = " << r.replications << '\n';
  } else if (sub == "efron") {
    EfronConfig e;
    e.n = config_size(cfg, "n", 10000);
    e.signals = config_size(cfg, "signals", 1000);
    e.nu = config_double(cfg, "nu", -3.0);
    e.S = config_size(cfg, "S", 30);
    e.q = config_double(cfg, "q", 0.1);
    e.p = config_double(cfg, "p", 0.1);
    e.lindsay_df = to_int(config_size(cfg, "lindsay_df", 7), "lindsay_df");
    e.lindsay_nbins = to_int(config_size(cfg, "lindsay_nbins", 120), "lindsay_nbins");
    e.pi0 = config_double(cfg, "pi0", 0.9);
    e.var_grid = config_size(cfg, "var_grid", 200);
    e.seed = seed;
    e.threads = threads;
    if (cfg.contains("methods")) {
      e.methods.clear();
      for (const std::string& name : split_list(cfg.at("methods"))) {
        try {
          e.methods.push_back(parse_ci_method(name));
        } catch (const DomainError& err) {
          throw UsageError(std::string("config key 'methods': ") + err.what());
        }
      }
    }
    const EfronReport r = run_efron_experiment(e);
    std::ostringstream ss;
    CsvWriter w(ss);
    std::vector<std::string> header{"replicate", "method", "selected", "valid", "misses",
                                    "fcp", "invalid_rate", "mean_width", "upward_miss_share",
                                    "row_failures"};
    for (const char* stem : {"width", "skew"}) {
      for (const char* q : {"min", "q125", "q25", "q375", "median", "q625", "q75", "q875", "max"}) {
        header.push_back(std::string(stem) + "_" + q);
      }
    }
    w.header(header);
    for (std::size_t rep = 0; rep < r.replicates.size(); ++rep) {
      const EfronReplicate& x = r.replicates[rep];
      for (std::size_t m = 0; m < e.methods.size(); ++m) {
        const IntervalMetrics& im = x.metrics[m];
        w.cell(rep).cell(std::string(ci_method_name(e.methods[m]))).cell(x.selected);
        w.cell(im.valid).cell(im.misses).cell(im.fcp).cell(im.invalid_rate).cell(im.mean_width);
        w.cell(im.upward_miss_share.value_or(std::nan(""))).cell(x.row_failures[m]);
        for (double v : im.width_summary) w.cell(v);
        for (double v : im.skew_summary) w.cell(v);
        w.end_row();
      }
    }
    emit("efron.csv", ss.str());
    std::ostringstream vs;
    CsvWriter vw(vs);
    vw.header({"replicate", "selected", "fit_failed", "min_var1", "negative_var1", "var1_points",
               "fdr_one_points"});
    for (std::size_t rep = 0; rep < r.replicates.size(); ++rep) {
      const EfronReplicate& x = r.replicates[rep];
      vw.cell(rep).cell(x.selected).cell(x.fit_failed).cell(x.min_var1).cell(x.negative_var1);
      vw.cell(x.var1_points).cell(x.fdr_one_points).end_row();
    }
    emit("efron_var1.csv", vs.str());
    out << "efron: " << r.replicates.size() << " replicates\n";
  } else if (sub == "winners-curse") {
    const std::size_t n = config_size(cfg, "n", 100);
    const std::size_t S = config_size(cfg, "S", 1000);
    const WinnersCurseReport r = winners_curse_demo(n, S, seed, threads);
    std::ostringstream ss;
    CsvWriter w(ss);
    w.header({"K", "mse_raw", "mse_js", "mse_bc", "approx_mean", "median_raw", "median_js",
              "median_bc"});
    for (std::size_t k = 0; k < n; ++k) {
      w.cell(k + 1).cell(r.mean_raw[k]).cell(r.mean_js[k]).cell(r.mean_bc[k]);
      w.cell(r.approx_mean[k]).cell(r.median_raw[k]).cell(r.median_js[k]).cell(r.median_bc[k]);
      w.end_row();
    }
    emit("winners_curse.csv", ss.str());
    out << "winners-curse: MSE(1) = " << format_double(r.mean_raw.front())
        << ", MSE(n) = " << format_double(r.mean_raw.back()) << '\n';
  } else if (sub == "pivot") {
    PivotConfig p;
    p.n = config_size(cfg, "n", 100);
    const std::string proc = config_string(cfg, "procedure", "topk");
    if (proc == "topk") {
      p.procedure = Procedure::TopK;
    } else if (proc == "bh") {
      p.procedure = Procedure::BH;
    } else if (proc == "fixed") {
      p.procedure = Procedure::FixedThreshold;
    } else {
      throw UsageError("config key 'procedure': expected topk, bh or fixed, got '" + proc + "'");
    }
    p.K = config_size(cfg, "K", 10);
    p.q = config_double(cfg, "q", 0.1);
    p.lambda = config_double(cfg, "lambda", 2.0);
    p.sigma = config_double(cfg, "sigma", 1.0);
    p.S = config_size(cfg, "S", 1000);
    p.seed = seed;
    p.threads = threads;
    const PivotReport r = pivot_uniformity(p);
    std::ostringstream ss;
    CsvWriter w(ss);
    w.header({"pooled", "ks_statistic", "ks_p_value", "naive_statistic", "naive_p_value"});
    w.cell(r.pooled).cell(r.ks.statistic).cell(r.ks.p_value).cell(r.naive.statistic);
    w.cell(r.naive.p_value).end_row();
    emit("pivot.csv", ss.str());
    out << "pivot: " << r.pooled << " pivots, KS p = " << format_double(r.ks.p_value) << '\n';
  } else if (sub == "risk") {
    RiskBoundSpec s;
    const std::size_t n = config_size(cfg, "n", 10000);
    try {
      s.space = parse_space(config_string(cfg, "space", "l0"));
    } catch (const DomainError& e) {
      throw UsageError(std::string("config key 'space': ") + e.what());
    }
    s.p = config_double(cfg, "p", 0.0);
    s.eta = config_double(cfg, "eta", 1.0 / std::sqrt(static_cast<double>(n)));
    s.q = config_double(cfg, "q", 0.1);
    s.r = config_double(cfg, "r", 2.0);
    s.C = config_double(cfg, "C", 1.0);
    s.slack = config_double(cfg, "slack", 0.25);
    s.enforce_window = config_bool(cfg, "enforce_window", false);
    s.delta = config_double(cfg, "delta", 0.1);
    const std::size_t mc = config_size(cfg, "mc", 200);
    const RiskBoundReport r = risk_bound_check(s, n, mc, seed, threads);
    std::ostringstream ss;
    CsvWriter w(ss);
    w.header({"space", "n", "mc", "p", "eta", "q", "r", "tau", "k_n", "alpha_n", "minimax",
              "bound", "risk_tn", "risk_ht", "risk_st", "ratio", "pass",
              "decomposition_violations", "max_decomposition_ratio", "paired_violations",
              "k_mu", "k_minus", "k_plus", "sandwich_fraction", "mean_k_hat"});
    const RiskConstants& k = r.constants;
    w.cell(std::string(space_name(s.space))).cell(n).cell(mc).cell(s.p).cell(s.eta).cell(s.q);
    w.cell(s.r).cell(k.tau).cell(k.k_n).cell(k.alpha_n).cell(k.minimax).cell(k.bound);
    w.cell(r.risk_tn).cell(r.risk_ht).cell(r.risk_st).cell(r.ratio).cell(r.pass);
    w.cell(r.decomposition_violations).cell(r.max_decomposition_ratio).cell(r.paired_violations);
    w.cell(r.k_mu).cell(r.k_minus).cell(r.k_plus).cell(r.sandwich_fraction).cell(r.mean_k_hat);
    w.end_row();
    emit("risk.csv", ss.str());
    out << "risk: ratio = " << format_double(r.ratio) << (r.pass ? " (pass)\n" : " (fail)\n");
  } else {
    const SqueezeReport r = squeeze_audit(
        config_size(cfg, "ny", 500), config_size(cfg, "nt", 500), config_double(cfg, "y_lo", -12.0),
        config_double(cfg, "y_hi", 12.0), config_double(cfg, "t_hi", 10.0),
        config_double(cfg, "slack", 1e-9));
    std::ostringstream ss;
    CsvWriter w(ss);
    w.header({"points", "evaluated", "violations", "max_violation", "worst_y", "worst_t"});
    w.cell(r.points).cell(r.evaluated).cell(r.violations).cell(r.max_violation);
    w.cell(r.worst_y).cell(r.worst_t).end_row();
    emit("squeeze.csv", ss.str());
    out << "squeeze: " << r.violations << " violations over " << r.evaluated << " points\n";
  }

  Manifest m = base_manifest(args, "simulate");
  m.add("subcommand", sub);
  if (stochastic) m.add("seed", std::to_string(seed));
  m.add("threads", std::to_string(threads));
  for (const auto& [k, v] : cfg) m.add("config." + k, v);
  for (std::size_t i = 0; i < outputs.size(); ++i) m.add("output." + std::to_string(i), outputs[i]);
  m.write(dir / "manifest.txt");
  return kOk;
}

int classify(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kUsage;
  if (dynamic_cast<const TieAtBoundary*>(&e) || dynamic_cast<const DegenerateRegion*>(&e) ||
      dynamic_cast<const InsufficientData*>(&e) || dynamic_cast<const SolverError*>(&e) ||
      dynamic_cast<const FitError*>(&e) || dynamic_cast<const InstabilityError*>(&e) ||
      dynamic_cast<const ConsistencyError*>(&e)) {
    return kStatistical;
  }
  return kInternal;
}

int dispatch(const std::vector<std::string>& args, const Config* override_cfg, std::ostream& out,
             std::ostream& err);

struct ReplayCmd {
  std::string manifest;
  std::string out;
};

int do_replay(const ReplayCmd& c, std::ostream& out, std::ostream& err) {
  std::ifstream in(c.manifest);
  if (!in) throw UsageError("cannot open manifest '" + c.manifest + "'");
  std::map<std::size_t, std::string> argmap;
  Config cfg;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key.starts_with("arg.")) {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(key.data() + 4, key.data() + key.size(), idx);
      if (ec != std::errc() || ptr != key.data() + key.size()) {
        throw UsageError("manifest: bad key '" + key + "'");
      }
      argmap[idx] = value;
    } else if (key.starts_with("config.")) {
      cfg[key.substr(7)] = value;
    }
  }
  std::vector<std::string> args;
  for (const auto& [i, v] : argmap) args.push_back(v);
  if (args.empty()) throw UsageError("manifest has no recorded arguments");
  if (args.front() == "replay") throw UsageError("manifest records a replay");
  if (!c.out.empty()) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "-o" || args[i] == "--out") args[i + 1] = c.out;
    }
  }
  // Simulations replay from the recorded config snapshot, not the file.
  const bool simulate = args.front() == "simulate";
  return dispatch(args, simulate ? &cfg : nullptr, out, err);
}

int dispatch(const std::vector<std::string>& args, const Config* override_cfg, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Post-selection estimation and inference for Gaussian means", "postsel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", POSTSEL_VERSION);

  SelectCmd sel;
  auto* s = app.add_subcommand("select", "Apply a selection procedure");
  s->add_option("input", sel.input, "Input CSV with a y column")->required();
  s->add_option("-o,--out", sel.output, "Output CSV")->required();
  add_select_flags(s, sel.sel);

  EstimateCmd est;
  auto* e = app.add_subcommand("estimate", "Estimate the selected means");
  e->add_option("input", est.input, "Input CSV with a y column")->required();
  e->add_option("-o,--out", est.output, "Output CSV")->required();
  add_select_flags(e, est.sel);
  e->add_option("--methods", est.methods, "Comma-separated estimator names");
  e->add_option("--seed", est.seed, "Seed for bootstrap methods");
  e->add_option("--B", est.B, "First-order bootstrap replicates");
  e->add_option("--b2-outer", est.B2_outer, "Second-order outer replicates");
  e->add_option("--b2-inner", est.B2_inner, "Second-order inner replicates");
  e->add_flag("--signed-ranks", est.signed_ranks, "Rank by signed values in the bootstrap");
  e->add_option("--lindsay-df", est.lindsay_df, "Spline degrees of freedom for tweedie");
  e->add_option("--lindsay-nbins", est.lindsay_nbins, "Histogram bins for tweedie");
  e->add_option("--gmleb-step", est.gmleb_step, "GMLEB grid step in units of sigma");

  CiCmd ci;
  auto* c = app.add_subcommand("ci", "Confidence intervals for the selected means");
  c->add_option("input", ci.input, "Input CSV with a y column")->required();
  c->add_option("-o,--out", ci.output, "Output CSV")->required();
  add_select_flags(c, ci.sel);
  c->add_option("--methods", ci.methods, "Comma-separated interval methods");
  c->add_option("--level", ci.level, "Miscoverage level p");
  c->add_flag("--sign-conditioned", ci.sign_conditioned, "Condition TN intervals on the sign");
  c->add_option("--pi0", ci.pi0, "Null proportion for efron intervals");
  c->add_option("--lindsay-df", ci.lindsay_df, "Spline degrees of freedom for efron");
  c->add_option("--lindsay-nbins", ci.lindsay_nbins, "Histogram bins for efron");

  SimulateCmd sim;
  auto* sm = app.add_subcommand("simulate", "Run a seeded simulation experiment");
  sm->require_subcommand(1);
  sm->add_option("--config", sim.config, "Flat key=value config file");
  sm->add_option("--seed", sim.seed, "Master seed");
  sm->add_option("-o,--out", sim.out_dir, "Output directory")->required();
  sm->add_option("--threads", sim.threads, "Worker threads (default: POSTSEL_THREADS or all cores)");
  std::string sim_sub;
  const std::pair<const char*, const char*> experiments[] = {
      {"topk", "MSE over the top-K selection for each K"},
      {"bh", "MSE over the BH(q) selection for each q"},
      {"efron", "Interval FCR, width and skew after BH selection"},
      {"winners-curse", "Partial MSE of ranked estimates under the global null"},
      {"pivot", "Uniformity of pooled selective pivots"},
      {"risk", "Monte Carlo check of the TN risk bound"},
      {"squeeze", "Grid audit of |ST| <= |TN| <= |HT|"},
  };
  for (const auto& [name, desc] : experiments) {
    // Options after the experiment name belong to `simulate`.
    sm->add_subcommand(name, desc)->fallthrough()->callback([&sim_sub, name]() { sim_sub = name; });
  }

  ReplayCmd rp;
  auto* r = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  r->add_option("manifest", rp.manifest, "Manifest file")->required();
  r->add_option("-o,--out", rp.out, "Write outputs here instead of the recorded path");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) return do_select(sel, args);
    if (e->parsed()) return do_estimate(est, args);
    if (c->parsed()) return do_ci(ci, args, err);
    if (sm->parsed()) return do_simulate(sim_sub, sim, override_cfg, args, out);
    if (r->parsed()) return do_replay(rp, out, err);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return classify(ex);
  }
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, nullptr, out, err);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kInternal;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace postsel::cli
