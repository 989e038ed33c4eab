// dmm: command-line front end.
//
//   dmm generate --sequence A --dims 10 --seed 0 --out run/a0
//   dmm fit --input run/a0.tts --output run/a0_result.json
//   dmm eval --result run/a0_result.json --labels run/a0_labels.csv
//   dmm export --result run/a0_result.json --cluster 1 --mode 1 --format dot
//   dmm bench --vary T --values 800,1600,3200,6400 --dims 5,5
//
// Exit codes: 0 ok, 2 usage, 3 data/I-O, 4 numeric or internal failure.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dmm/dmm.hpp"

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };
Level g_level = Level::info;

template <class... Args>
void log(Level lv, const Args&... args) {
  if (lv > g_level) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::ostringstream os;
  os << "[" << names[static_cast<int>(lv)] << "] ";
  (os << ... << args);
  std::cerr << os.str() << '\n';
}

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw dmm::DataError("cannot write " + path);
  out << text;
  if (!out) throw dmm::DataError("write failed: " + path);
}

std::string join(const std::vector<std::size_t>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string sequence = "A";
  std::vector<std::size_t> dims{10};
  std::uint64_t seed = 0;
  std::string out = "synth";
  std::size_t segment_size = 100;
  std::size_t min_segment = 20;
  double edge_probability = 0.2;
};

void cmd_generate(const GenerateArgs& a) {
  dmm::SynthConfig cfg;
  cfg.observations_per_segment = a.segment_size;
  cfg.min_segment_length = a.min_segment;
  cfg.edge_probability = a.edge_probability;
  const auto syn = dmm::gen_tts(a.sequence, a.dims, a.seed, cfg);
  const std::string tts = a.out + ".tts", labels = a.out + "_labels.csv", truth = a.out + "_truth.json";
  dmm::write_tts_file(tts, syn.tensor);
  {
    std::ofstream out(labels);
    if (!out) throw dmm::DataError("cannot write " + labels);
    dmm::write_labels_csv(out, syn.truth.labels);
  }
  dmm::write_json_file(truth, dmm::truth_to_json(syn.truth, syn.tensor.shape()));
  log(Level::info, "wrote ", tts, " (shape ", join(syn.tensor.shape()), "), ", labels, ", ", truth);
}

// ---- fit --------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::size_t window = 4;
  std::vector<std::size_t> windows;
  std::vector<double> lambdas{0.5, 1.0, 2.0, 4.0};
  std::uint64_t seed = 0;
  int restarts = 1;
  dmm::AdmmConfig admm;
  std::size_t normalize_every = 0;
  std::vector<std::size_t> period_boundaries;
  bool interpolate = false;
  unsigned threads = 1;
  std::string output;
  std::string labels_out;
  std::string config;
};

dmm::Json fit_config_json(const FitArgs& a) {
  dmm::Json c;
  c["input"] = a.input;
  if (a.windows.empty()) {
    c["window"] = a.window;
  } else {
    c["windows"] = a.windows;
  }
  c["lambda_grid"] = a.lambdas;
  c["seed"] = a.seed;
  c["restarts"] = a.restarts;
  c["admm"] = dmm::Json{{"rho", a.admm.rho},
                        {"abs_tol", a.admm.abs_tol},
                        {"rel_tol", a.admm.rel_tol},
                        {"max_iter", a.admm.max_iter},
                        {"max_rho_updates", a.admm.max_rho_updates}};
  if (a.normalize_every) c["normalize_every"] = a.normalize_every;
  if (!a.period_boundaries.empty()) c["period_boundaries"] = a.period_boundaries;
  c["interpolate"] = a.interpolate;
  return c;
}

// Fills every option not given on the command line from a saved config (either
// a bare config object or a result document carrying one under "config").
void apply_config(FitArgs& a, const CLI::App& cmd) {
  const dmm::Json doc = dmm::read_json_file(a.config);
  const dmm::Json& c = doc.contains("config") ? doc.at("config") : doc;
  auto unset = [&](const char* opt) { return cmd.get_option(opt)->count() == 0; };
  try {
    if (unset("--input") && c.contains("input")) a.input = c.at("input").get<std::string>();
    if (unset("--window") && unset("--windows")) {
      if (c.contains("window")) a.window = c.at("window").get<std::size_t>();
      if (c.contains("windows")) a.windows = c.at("windows").get<std::vector<std::size_t>>();
    }
    if (unset("--lambda") && c.contains("lambda_grid")) a.lambdas = c.at("lambda_grid").get<std::vector<double>>();
    if (unset("--seed") && c.contains("seed")) a.seed = c.at("seed").get<std::uint64_t>();
    if (unset("--restarts") && c.contains("restarts")) a.restarts = c.at("restarts").get<int>();
    if (c.contains("admm")) {
      const auto& ad = c.at("admm");
      if (unset("--rho") && ad.contains("rho")) a.admm.rho = ad.at("rho").get<double>();
      if (unset("--abs-tol") && ad.contains("abs_tol")) a.admm.abs_tol = ad.at("abs_tol").get<double>();
      if (unset("--rel-tol") && ad.contains("rel_tol")) a.admm.rel_tol = ad.at("rel_tol").get<double>();
      if (unset("--max-iter") && ad.contains("max_iter")) a.admm.max_iter = ad.at("max_iter").get<int>();
      if (unset("--rho-updates") && ad.contains("max_rho_updates"))
        a.admm.max_rho_updates = ad.at("max_rho_updates").get<int>();
    }
    if (unset("--normalize-every") && unset("--period-boundaries")) {
      if (c.contains("normalize_every")) a.normalize_every = c.at("normalize_every").get<std::size_t>();
      if (c.contains("period_boundaries")) {
        a.period_boundaries = c.at("period_boundaries").get<std::vector<std::size_t>>();
      }
    }
    if (unset("--interpolate") && c.contains("interpolate")) a.interpolate = c.at("interpolate").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw dmm::DataError(a.config + ": bad config: " + e.what());
  }
}

void validate_fit_args(const FitArgs& a) {
  if (a.input.empty()) throw dmm::InvalidArgument("fit: --input is required (directly or via --config)");
  if (a.windows.empty() && a.window == 0) throw dmm::InvalidArgument("fit: --window must be >= 1");
  if (a.lambdas.empty()) throw dmm::InvalidArgument("fit: --lambda needs at least one value");
  for (double l : a.lambdas) {
    if (!(l >= 0.0)) throw dmm::InvalidArgument("fit: lambda values must be >= 0");
  }
  if (a.restarts < 1) throw dmm::InvalidArgument("fit: --restarts must be >= 1");
  if (a.threads < 1) throw dmm::InvalidArgument("fit: --threads must be >= 1");
  if (a.normalize_every && !a.period_boundaries.empty()) {
    throw dmm::InvalidArgument("fit: --normalize-every and --period-boundaries are exclusive");
  }
  a.admm.validate();
}

void cmd_fit(FitArgs a, const CLI::App& cmd) {
  if (!a.config.empty()) apply_config(a, cmd);
  validate_fit_args(a);

  dmm::TtsReadOptions ropts;
  ropts.interpolate = a.interpolate;
  dmm::TensorTS x = dmm::read_tts_file(a.input, ropts);
  log(Level::info, "read ", a.input, ": shape ", join(x.shape()));
  if (a.normalize_every) {
    x = dmm::normalize_periods(x, dmm::periodic_boundaries(x.length(), a.normalize_every));
  } else if (!a.period_boundaries.empty()) {
    x = dmm::normalize_periods(x, a.period_boundaries);
  }

  const dmm::Segmentation initial = a.windows.empty() ? dmm::init_cutpoints(x.length(), a.window)
                                                      : dmm::init_cutpoints(x.length(), dmm::InitialWindows{a.windows});
  dmm::FitOptions opts;
  opts.cluster.admm = a.admm;
  opts.cluster.restarts = a.restarts;
  opts.cluster.threads = a.threads;
  opts.segmenter.admm = a.admm;
  opts.segmenter.threads = a.threads;

  const auto res = dmm::fit(x, initial, a.lambdas, a.seed, opts);
  for (const auto& l : res.diagnostics.lambda_trace) {
    log(Level::debug, "lambda=", l.lambda, " total=", l.total, " K=", l.K, " segments=", l.segments);
  }
  log(Level::info, "selected lambda=", res.lambda, " K=", res.K, " segments=", res.assignments.segmentation.count(),
      " total cost=", res.costs.total);
  std::size_t unconverged = 0;
  for (const auto& m : res.models)
    for (const auto& n : m.networks) unconverged += n.converged ? 0 : 1;
  if (unconverged || res.diagnostics.unconverged_fits) {
    log(Level::warn, "ADMM did not converge for ", unconverged, " final network(s) and ",
        res.diagnostics.unconverged_fits, " segment fit(s); see diagnostics");
  }
  if (!res.diagnostics.em_converged) log(Level::warn, "EM stopped without reaching a fixed point");

  dmm::Json doc = dmm::result_to_json(res, x.shape(), x.mode_labels());
  doc["config"] = fit_config_json(a);
  emit(a.output, doc.dump(2) + "\n");
  if (!a.labels_out.empty()) {
    std::ostringstream os;
    dmm::write_labels_csv(os, res.assignments.time_labels());
    emit(a.labels_out, os.str());
  }
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> results;
  std::vector<std::string> labels;
  std::string input;  // optional, enables the log-likelihood field
  bool interpolate = false;
  std::string output;
  std::string csv;
};

dmm::EvalReport eval_one(const std::string& result_path, const std::string& labels_path, const std::string& input,
                         bool interpolate) {
  const auto loaded = dmm::result_from_json(dmm::read_json_file(result_path));
  const auto truth = dmm::read_labels_csv_file(labels_path);
  const auto pred = loaded.params.assignments.time_labels();
  if (pred.size() != truth.size()) {
    throw dmm::DataError("length mismatch: " + result_path + " covers " + std::to_string(pred.size()) +
                         " steps, " + labels_path + " has " + std::to_string(truth.size()));
  }
  auto rep = dmm::macro_f1(pred, truth);
  rep.n_segments = loaded.params.assignments.segmentation.count();
  rep.n_clusters = static_cast<std::size_t>(loaded.params.K);
  if (!input.empty()) {
    dmm::TtsReadOptions ropts;
    ropts.interpolate = interpolate;
    const auto x = dmm::read_tts_file(input, ropts);
    if (x.shape() != loaded.shape) throw dmm::DataError("eval: --input shape differs from the result's shape");
    dmm::loglik_report(x, loaded.params, rep);
  }
  return rep;
}

void cmd_eval(const EvalArgs& a) {
  if (a.results.size() != a.labels.size()) {
    throw dmm::InvalidArgument("eval: give one --labels per --result (" + std::to_string(a.results.size()) +
                               " vs " + std::to_string(a.labels.size()) + ")");
  }
  if (a.results.size() > 1 && !a.input.empty()) {
    throw dmm::InvalidArgument("eval: --input is only supported for a single result");
  }
  std::vector<dmm::EvalReport> reports;
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    reports.push_back(eval_one(a.results[i], a.labels[i], a.input, a.interpolate));
    log(Level::info, a.results[i], ": macro-F1 ", reports.back().macro_f1);
  }

  dmm::Json out;
  if (reports.size() == 1) {
    out = dmm::to_json(reports[0]);
    if (a.input.empty()) out.erase("loglik");
  } else {
    dmm::Json runs = dmm::Json::array();
    double mean = 0.0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      runs.push_back(dmm::Json{{"result", a.results[i]}, {"labels", a.labels[i]}, {"macro_f1", reports[i].macro_f1}});
      mean += reports[i].macro_f1 / static_cast<double>(reports.size());
    }
    out = dmm::Json{{"mean_macro_f1", mean}, {"runs", std::move(runs)}};
  }
  emit(a.output, out.dump(2) + "\n");

  if (!a.csv.empty()) {
    std::ostringstream os;
    os << std::setprecision(17) << "result,class,f1\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t c = 0; c < reports[i].truth_classes.size(); ++c) {
        os << a.results[i] << ',' << reports[i].truth_classes[c] << ',' << reports[i].per_class_f1[c] << '\n';
      }
    }
    emit(a.csv, os.str());
  }
}

// ---- export -----------------------------------------------------------------

struct ExportArgs {
  std::string result;
  int cluster = 1;
  std::size_t mode = 1;
  std::string format = "dot";
  std::string output;
};

void cmd_export(const ExportArgs& a) {
  const auto loaded = dmm::result_from_json(dmm::read_json_file(a.result));
  const auto& models = loaded.params.models;
  if (a.cluster < 1 || a.cluster > static_cast<int>(models.size())) {
    throw dmm::InvalidArgument("export: unknown cluster " + std::to_string(a.cluster) + " (result has " +
                               std::to_string(models.size()) + ")");
  }
  const auto& model = models[static_cast<std::size_t>(a.cluster - 1)];
  if (a.mode < 1 || a.mode > model.networks.size()) {
    throw dmm::InvalidArgument("export: unknown mode " + std::to_string(a.mode) + " (result has " +
                               std::to_string(model.networks.size()) + ")");
  }
  const auto& net = model.networks[a.mode - 1];
  std::vector<std::string> labels;
  if (a.mode <= loaded.mode_labels.size()) labels = loaded.mode_labels[a.mode - 1];
  const std::string name = "cluster" + std::to_string(a.cluster) + "_mode" + std::to_string(a.mode);
  if (a.format == "dot") {
    emit(a.output, dmm::network_to_dot(net, labels, name));
  } else {
    emit(a.output, dmm::network_to_adjacency(net, labels).dump(2) + "\n");
  }
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string vary = "T";
  std::vector<std::size_t> values;
  std::string sequence = "C";
  std::vector<std::size_t> dims{5, 5};
  std::size_t length = 800;
  std::uint64_t seed = 0;
  std::size_t seeds = 10;
  std::size_t window = 4;
  std::vector<double> lambdas{0.5, 1.0, 2.0, 4.0};
  int restarts = 1;
  unsigned threads = 1;
  std::string output;
};

void cmd_bench(const BenchArgs& a) {
  dmm::ExperimentConfig cfg;
  cfg.sequence = a.sequence;
  cfg.dims = a.dims;
  cfg.window = a.window;
  cfg.lambda_grid = a.lambdas;
  cfg.fit.cluster.restarts = a.restarts;
  cfg.fit.cluster.threads = a.threads;
  cfg.fit.segmenter.threads = a.threads;
  const auto seq_len = dmm::parse_sequence(a.sequence).size();
  if (a.vary != "T" && (a.length == 0 || a.length % seq_len != 0)) {
    throw dmm::InvalidArgument("bench: --length must be a positive multiple of the sequence length");
  }
  cfg.synth.observations_per_segment = a.length / seq_len;

  std::vector<dmm::RunRecord> rows;
  std::vector<std::size_t> xs;
  if (a.vary == "seed") {
    rows = dmm::accuracy_runs(cfg, a.seed, a.seeds);
    for (const auto& r : rows) xs.push_back(static_cast<std::size_t>(r.seed));
  } else {
    if (a.values.size() < 1) throw dmm::InvalidArgument("bench: --values is required for --vary T|D1");
    const auto axis = a.vary == "T" ? dmm::ScaleAxis::T : dmm::ScaleAxis::D1;
    for (std::size_t v : a.values) {
      log(Level::info, "running ", a.vary, "=", v);
      const auto r = dmm::scaling_runs(cfg, axis, {v}, a.seed);
      rows.push_back(r.front());
      xs.push_back(v);
    }
  }

  std::ostringstream os;
  os << std::setprecision(10) << "vary,value,seed,T,variables,seconds,macro_f1,K,K_true,segments,lambda\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << a.vary << ',' << xs[i] << ',' << r.seed << ',' << r.T << ',' << r.variables << ',' << r.seconds << ','
       << r.macro_f1 << ',' << r.K << ',' << r.K_true << ',' << r.segments << ',' << r.lambda << '\n';
  }
  emit(a.output, os.str());

  if (a.vary == "seed") {
    double mean = 0.0;
    int k_ok = 0;
    for (const auto& r : rows) {
      mean += r.macro_f1 / static_cast<double>(rows.size());
      k_ok += r.K == r.K_true;
    }
    log(Level::info, "mean macro-F1 ", mean, ", K correct in ", k_ok, "/", rows.size());
  } else if (rows.size() >= 2) {
    std::vector<double> x, t;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.push_back(static_cast<double>(xs[i]));
      t.push_back(rows[i].seconds);
    }
    log(Level::info, "log-log slope ", dmm::loglog_slope(x, t));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subsequence clustering of tensor time series with per-mode sparse networks"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");
  app.add_flag("-q,--quiet", quiet, "Only log errors");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic tensor series, its labels and true networks");
  g->add_option("--sequence", gen.sequence, "A|B|C|D or comma-separated cluster ids")->capture_default_str();
  g->add_option("--dims", gen.dims, "Non-temporal dimensions, e.g. 10 or 10,10")->delimiter(',')->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "Output prefix (<out>.tts, <out>_labels.csv, <out>_truth.json)")
      ->capture_default_str();
  g->add_option("--segment-size", gen.segment_size, "Steps per sequence entry")->capture_default_str()->check(
      CLI::PositiveNumber);
  g->add_option("--min-segment", gen.min_segment, "Minimum segment length")->capture_default_str();
  g->add_option("--edge-prob", gen.edge_probability)->capture_default_str()->check(CLI::Range(0.0, 1.0));

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Segment and cluster a .tts file; writes a result JSON");
  f->add_option("--input,-i", fa.input, ".tts input");
  f->add_option("--config", fa.config, "JSON config or earlier result; explicit flags take precedence");
  auto* w1 = f->add_option("--window,-w", fa.window, "Initial window size")->capture_default_str();
  auto* w2 = f->add_option("--windows", fa.windows, "Initial window sizes (must sum to T)")->delimiter(',');
  w1->excludes(w2);
  f->add_option("--lambda", fa.lambdas, "Lambda grid")->delimiter(',')->capture_default_str();
  f->add_option("--seed", fa.seed)->capture_default_str();
  f->add_option("--restarts", fa.restarts, "EM restarts per K")->capture_default_str();
  f->add_option("--rho", fa.admm.rho, "ADMM penalty")->capture_default_str();
  f->add_option("--abs-tol", fa.admm.abs_tol)->capture_default_str();
  f->add_option("--rel-tol", fa.admm.rel_tol)->capture_default_str();
  f->add_option("--max-iter", fa.admm.max_iter, "ADMM iteration cap")->capture_default_str();
  f->add_option("--rho-updates", fa.admm.max_rho_updates, "max residual-balancing rho changes (0 = fixed rho)")
      ->capture_default_str();
  f->add_option("--normalize-every", fa.normalize_every, "z-normalize each variable per period of N steps");
  f->add_option("--period-boundaries", fa.period_boundaries, "Explicit 1-based period starts ending with T+1")
      ->delimiter(',');
  f->add_flag("--interpolate", fa.interpolate, "Fill nan gaps by linear interpolation");
  f->add_option("--threads", fa.threads)->capture_default_str();
  f->add_option("--output,-o", fa.output, "Result JSON (default stdout)");
  f->add_option("--labels-out", fa.labels_out, "Also write per-step cluster labels as CSV");

  EvalArgs ea;
  auto* e = app.add_subcommand("eval", "Macro-F1 of results against label CSVs");
  e->add_option("--result,-r", ea.results, "Result JSON (repeat for batch mode)")->required();
  e->add_option("--labels,-l", ea.labels, "Truth labels CSV (one per --result)")->required();
  e->add_option("--input", ea.input, "Original .tts, adds total log-likelihood");
  e->add_flag("--interpolate", ea.interpolate);
  e->add_option("--output,-o", ea.output, "Report JSON (default stdout)");
  e->add_option("--csv", ea.csv, "Per-class F1 CSV");

  ExportArgs xa;
  auto* x = app.add_subcommand("export", "Export one mode network of one cluster");
  x->add_option("--result,-r", xa.result)->required();
  x->add_option("--cluster", xa.cluster, "1-based cluster id")->capture_default_str();
  x->add_option("--mode", xa.mode, "1-based mode index")->capture_default_str();
  x->add_option("--format", xa.format)->check(CLI::IsMember({"dot", "json"}))->capture_default_str();
  x->add_option("--output,-o", xa.output, "Default stdout");

  BenchArgs ba;
  auto* b = app.add_subcommand("bench", "Runtime scaling (T, D1) or accuracy-over-seeds runs; CSV output");
  b->add_option("--vary", ba.vary)->check(CLI::IsMember({"T", "D1", "seed"}))->capture_default_str();
  b->add_option("--values", ba.values, "Values of T or D1")->delimiter(',');
  b->add_option("--sequence", ba.sequence)->capture_default_str();
  b->add_option("--dims", ba.dims)->delimiter(',')->capture_default_str();
  b->add_option("--length", ba.length, "T when not varying T")->capture_default_str();
  b->add_option("--seed", ba.seed, "Seed (first seed for --vary seed)")->capture_default_str();
  b->add_option("--seeds", ba.seeds, "Number of seeds for --vary seed")->capture_default_str();
  b->add_option("--window", ba.window)->capture_default_str();
  b->add_option("--lambda", ba.lambdas)->delimiter(',')->capture_default_str();
  b->add_option("--restarts", ba.restarts)->capture_default_str();
  b->add_option("--threads", ba.threads)->capture_default_str();
  b->add_option("--output,-o", ba.output, "CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::Success& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }
  if (verbose) g_level = Level::debug;
  if (quiet) g_level = Level::error;

  try {
    if (g->parsed()) cmd_generate(gen);
    if (f->parsed()) cmd_fit(fa, *f);
    if (e->parsed()) cmd_eval(ea);
    if (x->parsed()) cmd_export(xa);
    if (b->parsed()) cmd_bench(ba);
  } catch (const dmm::InvalidArgument& err) {
    log(Level::error, err.what());
    return kExitUsage;
  } catch (const dmm::DataError& err) {
    log(Level::error, err.what());
    return kExitData;
  } catch (const dmm::NumericError& err) {
    log(Level::error, err.what());
    return kExitNumeric;
  } catch (const std::exception& err) {
    log(Level::error, "internal failure: ", err.what());
    return kExitNumeric;
  }
  return 0;
}
