// Command-line pipeline: simulate | extract-phase | fit | plv | experiment |
// report. Everything model-related goes through the C API; this file only
// parses flags, merges them over an optional JSON config file (flags win),
// and moves bytes between files.
//
// Exit codes: 0 success, 2 usage error, 1 data/model error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfm/cfm.h"

namespace {

using nlohmann::json;

struct LibError {
  std::string msg;
};
struct UsageError {
  std::string msg;
};

void check(cfm_status st, const std::string& what) {
  if (st != CFM_OK) throw LibError{what + ": " + cfm_last_error()};
}

// RAII for API handles and strings.
struct DatasetPtr {
  cfm_dataset* p = nullptr;
  ~DatasetPtr() { cfm_dataset_free(p); }
};
struct TruthPtr {
  cfm_truth* p = nullptr;
  ~TruthPtr() { cfm_truth_free(p); }
};
struct ChainPtr {
  cfm_chain* p = nullptr;
  ~ChainPtr() { cfm_chain_free(p); }
};
struct StringPtr {
  char* p = nullptr;
  ~StringPtr() { cfm_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LibError{"cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LibError{"cannot write '" + path + "'"};
  out << text;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw LibError{"'" + path + "': malformed JSON"};
  if (!j.is_object()) throw LibError{"'" + path + "': config must be a JSON object"};
  return j;
}

std::pair<double, double> parse_band(const std::string& text) {
  const size_t colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size())
    throw UsageError{"--band expects low:high (e.g. 8:15)"};
  try {
    size_t used = 0;
    const double lo = std::stod(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("");
    const std::string hi_text = text.substr(colon + 1);
    const double hi = std::stod(hi_text, &used);
    if (used != hi_text.size()) throw std::invalid_argument("");
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError{"--band expects numeric low:high"};
  }
}

std::vector<double> parse_level_list(const std::string& text) {
  std::vector<double> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string tok = text.substr(start, comma - start);
    if (tok.empty()) throw UsageError{"--levels expects comma-separated numbers"};
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError{"--levels: '" + tok + "' is not a number"};
    }
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::optional<int> env_threads() {
  const char* v = std::getenv("CFM_THREADS");
  if (!v || !*v) return std::nullopt;
  try {
    size_t used = 0;
    const int n = std::stoi(v, &used);
    if (used != std::string(v).size() || n < 1) return std::nullopt;
    return n;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void write_sidecar(const std::string& data_path, const json& meta) {
  write_file(data_path + ".json", meta.dump(2) + "\n");
}

/* ----------------------------------------------------------------- */

struct SimulateArgs {
  std::string config, out, truth_out;
  int64_t subjects = 0, channels = 0, times = 0;
  uint64_t seed = 0;
  bool has_subjects = false, has_channels = false, has_times = false, has_seed = false;
};

int cmd_simulate(const SimulateArgs& a) {
  json cfg = load_config(a.config);
  if (a.has_subjects) cfg["subjects"] = a.subjects;
  if (a.has_channels) cfg["channels"] = a.channels;
  if (a.has_times) cfg["times"] = a.times;
  if (a.has_seed) cfg["seed"] = a.seed;

  DatasetPtr data;
  TruthPtr truth;
  check(cfm_simulate(cfg.dump().c_str(), &data.p, a.truth_out.empty() ? nullptr : &truth.p),
        "simulate");
  check(cfm_dataset_save(data.p, a.out.c_str()), "save dataset");
  write_sidecar(a.out, json{{"command", "simulate"},
                            {"config", cfg},
                            {"version", cfm_version()}});

  size_t n = 0, p = 0, t = 0;
  check(cfm_dataset_dims(data.p, &n, &p, &t), "dataset dims");
  std::cout << "wrote " << a.out << " (" << n << " subjects x " << p << " channels x " << t
            << " time points)\n";

  if (!a.truth_out.empty()) {
    DatasetPtr clean;
    check(cfm_truth_clean(truth.p, &clean.p), "truth curves");
    check(cfm_dataset_save(clean.p, a.truth_out.c_str()), "save truth");
    StringPtr info;
    check(cfm_truth_info(truth.p, &info.p), "truth info");
    write_sidecar(a.truth_out, json{{"command", "simulate"},
                                    {"config", cfg},
                                    {"truth", json::parse(info.str())},
                                    {"version", cfm_version()}});
    std::cout << "wrote " << a.truth_out << " (noiseless curves)\n";
  }
  return 0;
}

struct ExtractArgs {
  std::string input, out, band = "8:15";
  double fs = 0.0;
  int64_t take = 0;
};

int cmd_extract_phase(const ExtractArgs& a) {
  const auto [lo, hi] = parse_band(a.band);
  if (a.take < 0) throw UsageError{"--take must be non-negative"};
  DatasetPtr data;
  size_t guard = 0;
  check(cfm_extract_phase(a.input.c_str(), a.fs, lo, hi, static_cast<size_t>(a.take), &data.p,
                          &guard),
        "extract-phase");
  check(cfm_dataset_save(data.p, a.out.c_str()), "save dataset");
  write_sidecar(a.out, json{{"command", "extract-phase"},
                            {"input", a.input},
                            {"fs", a.fs},
                            {"band", {lo, hi}},
                            {"take", a.take},
                            {"edge_guard", guard},
                            {"version", cfm_version()}});
  size_t n = 0, p = 0, t = 0;
  check(cfm_dataset_dims(data.p, &n, &p, &t), "dataset dims");
  std::cout << "wrote " << a.out << " (" << p << " channels x " << t
            << " time points); first/last " << guard << " samples are boundary-affected\n";
  return 0;
}

struct FitArgs {
  std::string input, config, out;
  int64_t burnin = 0, samples = 0, thin = 0, threads = 0;
  uint64_t seed = 0;
  bool has_burnin = false, has_samples = false, has_thin = false, has_seed = false,
       has_threads = false, wrap = false;
};

json merged_fit_config(const FitArgs& a) {
  json cfg = load_config(a.config);
  if (!cfg.contains("chain")) cfg["chain"] = json::object();
  if (a.has_burnin) cfg["chain"]["burnin"] = a.burnin;
  if (a.has_samples) cfg["chain"]["samples"] = a.samples;
  if (a.has_thin) cfg["chain"]["thin"] = a.thin;
  if (a.has_seed) cfg["chain"]["seed"] = a.seed;
  if (a.has_threads)
    cfg["chain"]["threads"] = a.threads;
  else if (auto t = env_threads(); t && !cfg["chain"].contains("threads"))
    cfg["chain"]["threads"] = *t;
  return cfg;
}

int cmd_fit(const FitArgs& a) {
  const json cfg = merged_fit_config(a);
  DatasetPtr data;
  check(cfm_dataset_load(a.input.c_str(), a.wrap ? 1 : 0, &data.p), "load dataset");
  ChainPtr chain;
  check(cfm_fit(data.p, cfg.dump().c_str(), &chain.p), "fit");
  check(cfm_chain_save(chain.p, a.out.c_str()), "save chain");
  StringPtr info;
  check(cfm_chain_info(chain.p, &info.p), "chain info");
  const json ji = json::parse(info.str());
  std::cout << "wrote " << a.out << " (" << ji.at("draws").get<size_t>()
            << " retained draws; sidecar " << a.out << ".json)\n";
  return 0;
}

struct PlvArgs {
  std::string chain, data, out;
  double threshold = 0.7, cut = 0.5;
  bool print_json = false, wrap = false;
};

int cmd_plv(const PlvArgs& a) {
  if (a.chain.empty() == a.data.empty())
    throw UsageError{"pass exactly one of --chain (posterior) or --data (naive)"};

  if (!a.chain.empty()) {
    ChainPtr chain;
    check(cfm_chain_load(a.chain.c_str(), &chain.p), "load chain");
    check(cfm_edges_csv(chain.p, a.threshold, a.cut, a.out.c_str()), "edges");
    write_sidecar(a.out, json{{"command", "plv"},
                              {"chain", a.chain},
                              {"threshold", a.threshold},
                              {"cut", a.cut},
                              {"version", cfm_version()}});
    if (a.print_json) {
      StringPtr summary;
      check(cfm_posterior_summary(chain.p, a.threshold, a.cut, &summary.p), "summary");
      std::cout << summary.str() << "\n";
    } else {
      std::cout << "wrote " << a.out << "\n";
    }
    return 0;
  }

  DatasetPtr data;
  check(cfm_dataset_load(a.data.c_str(), a.wrap ? 1 : 0, &data.p), "load dataset");
  size_t n = 0, p = 0, t = 0;
  check(cfm_dataset_dims(data.p, &n, &p, &t), "dataset dims");
  std::vector<double> plv(p * p);
  check(cfm_naive_plv(data.p, plv.data(), plv.size()), "naive plv");

  std::ostringstream csv;
  csv << "k,kprime,plv\n";
  csv.precision(10);
  for (size_t k = 0; k < p; ++k)
    for (size_t q = k + 1; q < p; ++q) csv << k << "," << q << "," << plv[k * p + q] << "\n";
  write_file(a.out, csv.str());
  write_sidecar(a.out, json{{"command", "plv"},
                            {"data", a.data},
                            {"method", "naive"},
                            {"version", cfm_version()}});
  std::cout << "wrote " << a.out << " (" << p * (p - 1) / 2 << " pairs)\n";
  return 0;
}

struct ExperimentArgs {
  std::string config, base, out, noise, levels;
  double threshold = 0.0, cut = 0.0;
  uint64_t seed = 0;
  int64_t threads = 0;
  bool has_noise = false, has_levels = false, has_threshold = false, has_cut = false,
       has_seed = false, has_threads = false;
};

int cmd_experiment(const ExperimentArgs& a) {
  json cfg = load_config(a.config);
  if (a.has_noise) {
    json kinds = json::array();
    for (const std::string& name : split_names(a.noise)) {
      if (name != "gaussian" && name != "uniform")
        throw UsageError{"--noise expects gaussian and/or uniform"};
      kinds.push_back(name);
    }
    cfg["noise"] = std::move(kinds);
  }
  if (a.has_levels) cfg["levels"] = parse_level_list(a.levels);
  if (a.has_threshold) cfg["threshold"] = a.threshold;
  if (a.has_cut) cfg["cut"] = a.cut;
  if (a.has_seed) cfg["seed"] = a.seed;
  const std::optional<int> env = env_threads();
  if (a.has_threads || env) {
    if (!cfg.contains("fit")) cfg["fit"] = json::object();
    if (!cfg["fit"].contains("chain")) cfg["fit"]["chain"] = json::object();
    if (a.has_threads)
      cfg["fit"]["chain"]["threads"] = a.threads;
    else if (!cfg["fit"]["chain"].contains("threads"))
      cfg["fit"]["chain"]["threads"] = *env;
  }

  check(cfm_run_experiment(cfg.dump().c_str(), a.base.empty() ? nullptr : a.base.c_str(),
                           a.out.c_str(), nullptr),
        "experiment");
  std::cout << "wrote " << a.out << "/report.json, curves.csv, table.csv, calibration.csv\n";
  return 0;
}

struct ReportArgs {
  std::string input, out;
};

std::string num_or_na(const json& v) {
  if (v.is_null()) return "nan";
  std::ostringstream ss;
  ss.precision(10);
  ss << v.get<double>();
  return ss.str();
}

int cmd_report(const ReportArgs& a) {
  json rep = json::parse(read_file(a.input), nullptr, false);
  if (rep.is_discarded()) throw LibError{"'" + a.input + "': malformed JSON"};
  const std::string dir = a.out.empty()
                              ? std::filesystem::path(a.input).parent_path().string()
                              : a.out;
  std::error_code ec;
  if (!dir.empty()) std::filesystem::create_directories(dir, ec);
  if (ec) throw LibError{"cannot create '" + dir + "': " + ec.message()};
  auto path_in_dir = [&](const std::string& name) {
    return (dir.empty() ? std::filesystem::path(name) : std::filesystem::path(dir) / name)
        .string();
  };

  // One error-curve file per noise kind: level, then mean/q05/q95 per method.
  std::vector<std::string> kinds;
  for (const json& cell : rep.at("cells")) {
    const std::string kind = cell.at("noise").get<std::string>();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
  }
  std::vector<std::string> wrote;
  for (const std::string& kind : kinds) {
    std::ostringstream dat;
    dat << "# level naive_mean naive_q05 naive_q95 model_mean model_q05 model_q95\n";
    dat.precision(10);
    for (const json& cell : rep.at("cells")) {
      if (cell.at("noise").get<std::string>() != kind) continue;
      const json& nv = cell.at("naive");
      const json& md = cell.at("model");
      dat << cell.at("level").get<double>() << " " << nv.at("mean_abs_err").get<double>() << " "
          << nv.at("q05").get<double>() << " " << nv.at("q95").get<double>() << " "
          << md.at("mean_abs_err").get<double>() << " " << md.at("q05").get<double>() << " "
          << md.at("q95").get<double>() << "\n";
    }
    const std::string name = "errors_" + kind + ".dat";
    write_file(path_in_dir(name), dat.str());
    wrote.push_back(name);
  }

  for (const json& pooled : rep.value("pooled_calibration", json::array())) {
    const std::string kind = pooled.at("noise").get<std::string>();
    std::ostringstream dat;
    dat << "# mean_p freq count\n";
    dat.precision(10);
    for (const json& bin : pooled.at("bins")) {
      if (bin.at("count").get<size_t>() == 0) continue;
      dat << num_or_na(bin.at("mean_p")) << " " << num_or_na(bin.at("freq")) << " "
          << bin.at("count").get<size_t>() << "\n";
    }
    const std::string name = "calibration_" + kind + ".dat";
    write_file(path_in_dir(name), dat.str());
    wrote.push_back(name);
  }

  std::ostringstream gp;
  gp << "set terminal pngcairo size 900,600\n";
  for (const std::string& kind : kinds) {
    gp << "set output 'errors_" << kind << ".png'\n"
       << "set xlabel 'noise level b'\nset ylabel '|estimate - truth|'\nset key top left\n"
       << "plot 'errors_" << kind << ".dat' using 1:3:4 with filledcurves fs transparent solid "
          "0.15 lc rgb 'red' title 'naive 5-95%', \\\n"
       << "     '' using 1:2 with linespoints lc rgb 'red' title 'naive mean', \\\n"
       << "     '' using 1:6:7 with filledcurves fs transparent solid 0.15 lc rgb 'blue' title "
          "'model 5-95%', \\\n"
       << "     '' using 1:5 with linespoints lc rgb 'blue' title 'model mean'\n";
    gp << "set output 'calibration_" << kind << ".png'\n"
       << "set xlabel 'mean posterior probability'\nset ylabel 'empirical frequency'\n"
       << "set xrange [0:1]\nset yrange [0:1]\n"
       << "plot x with lines lc rgb 'gray' notitle, 'calibration_" << kind
       << ".dat' using 1:2:(0.01+$3/2000.) with circles fill solid lc rgb 'blue' title 'bins'\n"
       << "unset xrange\nunset yrange\n";
  }
  write_file(path_in_dir("plots.gp"), gp.str());
  wrote.push_back("plots.gp");

  std::cout << "wrote";
  for (const std::string& name : wrote) std::cout << " " << name;
  std::cout << (dir.empty() ? "" : " in " + dir) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-robust phase-locking estimation (CFM)"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Draw a dataset from the generative model");
  simulate->add_option("--config", sim.config, "JSON config file");
  simulate->add_option("--subjects", sim.subjects, "number of subjects");
  simulate->add_option("--channels", sim.channels, "number of channels");
  simulate->add_option("--times", sim.times, "number of time points");
  simulate->add_option("--seed", sim.seed, "generator seed");
  simulate->add_option("--out", sim.out, "output dataset (.csv or .cfm)")->required();
  simulate->add_option("--truth-out", sim.truth_out, "also write the noiseless curves here");

  ExtractArgs ext;
  CLI::App* extract = app.add_subcommand("extract-phase", "Band-limited phase from raw signals");
  extract->add_option("input", ext.input, "signal CSV (one row per time point, one column per channel)")->required();
  extract->add_option("--fs", ext.fs, "sampling rate in Hz")->required();
  extract->add_option("--band", ext.band, "passband low:high in Hz (default 8:15)");
  extract->add_option("--take", ext.take, "keep only the first N samples");
  extract->add_option("--out", ext.out, "output dataset")->required();

  FitArgs fit;
  CLI::App* fitc = app.add_subcommand("fit", "Run the Gibbs sampler on a dataset");
  fitc->add_option("input", fit.input, "phase dataset (.csv or .cfm)")->required();
  fitc->add_option("--config", fit.config, "JSON config file (basis, hyper, chain)");
  fitc->add_option("--burnin", fit.burnin, "discarded sweeps");
  fitc->add_option("--samples", fit.samples, "retained sweeps (before thinning)");
  fitc->add_option("--thin", fit.thin, "keep every thin-th sweep");
  fitc->add_option("--seed", fit.seed, "sampler seed");
  fitc->add_option("--threads", fit.threads, "worker threads (or CFM_THREADS)");
  fitc->add_flag("--wrap", fit.wrap, "reduce out-of-range phases instead of rejecting");
  fitc->add_option("--out", fit.out, "output chain file")->required();

  PlvArgs plv;
  CLI::App* plvc = app.add_subcommand("plv", "Phase-locking estimates");
  plvc->add_option("--chain", plv.chain, "posterior PLV from a fitted chain");
  plvc->add_option("--data", plv.data, "naive PLV straight from a dataset");
  plvc->add_option("--threshold", plv.threshold, "edge definition: PLV >= threshold");
  plvc->add_option("--cut", plv.cut, "edge call: P(PLV >= threshold) >= cut");
  plvc->add_flag("--json", plv.print_json, "print the posterior summary JSON to stdout");
  plvc->add_flag("--wrap", plv.wrap, "reduce out-of-range phases instead of rejecting");
  plvc->add_option("--out", plv.out, "output CSV")->required();

  ExperimentArgs exp;
  CLI::App* expc = app.add_subcommand("experiment", "Noise-robustness benchmark");
  expc->add_option("--config", exp.config, "JSON config file");
  expc->add_option("--base", exp.base, "measured clean dataset (default: synthetic)");
  expc->add_option("--noise", exp.noise, "noise kinds, e.g. gaussian,uniform");
  expc->add_option("--levels", exp.levels, "comma-separated noise levels");
  expc->add_option("--threshold", exp.threshold, "edge definition threshold");
  expc->add_option("--cut", exp.cut, "edge decision cut");
  expc->add_option("--seed", exp.seed, "master seed");
  expc->add_option("--threads", exp.threads, "worker threads per fit (or CFM_THREADS)");
  expc->add_option("--out", exp.out, "output directory")->required();

  ReportArgs repa;
  CLI::App* repc = app.add_subcommand("report", "Turn report.json into gnuplot data files");
  repc->add_option("input", repa.input, "report.json from the experiment command")->required();
  repc->add_option("--out", repa.out, "output directory (default: next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cfm: " << e.what() << "\n";
    return 2;
  }

  sim.has_subjects = simulate->count("--subjects") > 0;
  sim.has_channels = simulate->count("--channels") > 0;
  sim.has_times = simulate->count("--times") > 0;
  sim.has_seed = simulate->count("--seed") > 0;
  fit.has_burnin = fitc->count("--burnin") > 0;
  fit.has_samples = fitc->count("--samples") > 0;
  fit.has_thin = fitc->count("--thin") > 0;
  fit.has_seed = fitc->count("--seed") > 0;
  fit.has_threads = fitc->count("--threads") > 0;
  exp.has_noise = expc->count("--noise") > 0;
  exp.has_levels = expc->count("--levels") > 0;
  exp.has_threshold = expc->count("--threshold") > 0;
  exp.has_cut = expc->count("--cut") > 0;
  exp.has_seed = expc->count("--seed") > 0;
  exp.has_threads = expc->count("--threads") > 0;

  try {
    if (app.got_subcommand(simulate)) return cmd_simulate(sim);
    if (app.got_subcommand(extract)) return cmd_extract_phase(ext);
    if (app.got_subcommand(fitc)) return cmd_fit(fit);
    if (app.got_subcommand(plvc)) return cmd_plv(plv);
    if (app.got_subcommand(expc)) return cmd_experiment(exp);
    if (app.got_subcommand(repc)) return cmd_report(repa);
  } catch (const UsageError& e) {
    std::cerr << "cfm: " << e.msg << "\n";
    return 2;
  } catch (const LibError& e) {
    std::cerr << "cfm: " << e.msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "cfm: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
