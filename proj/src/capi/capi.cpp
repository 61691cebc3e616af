#include "cfm/cfm.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>

#include "json.hpp"

#include "core/experiment.hpp"
#include "core/gibbs.hpp"
#include "core/json_config.hpp"
#include "core/phase_data.hpp"
#include "core/plv.hpp"
#include "core/signal.hpp"

struct cfm_dataset {
  cfm::PhaseDataset impl;
};

struct cfm_truth {
  cfm::GenerativeTruth impl;
};

struct cfm_chain {
  cfm::PosteriorChain impl;
};

namespace {

thread_local std::string g_last_error;

cfm_status status_of(cfm::ErrorKind kind) {
  switch (kind) {
    case cfm::ErrorKind::InvalidArgument:
      return CFM_ERR_INVALID_ARGUMENT;
    case cfm::ErrorKind::Validation:
      return CFM_ERR_VALIDATION;
    case cfm::ErrorKind::Parse:
      return CFM_ERR_PARSE;
    case cfm::ErrorKind::Io:
      return CFM_ERR_IO;
    case cfm::ErrorKind::Numeric:
      return CFM_ERR_NUMERIC;
    case cfm::ErrorKind::Internal:
      return CFM_ERR_INTERNAL;
  }
  return CFM_ERR_INTERNAL;
}

template <typename Fn>
cfm_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CFM_OK;
  } catch (const cfm::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CFM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return CFM_ERR_INTERNAL;
  }
}

void require(bool ok, const char* msg) {
  if (!ok) cfm::fail(cfm::ErrorKind::InvalidArgument, msg);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) cfm::fail(cfm::ErrorKind::Internal, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_config(const char* text, const char* what) {
  if (!text || !*text) return nlohmann::json::object();
  return cfm::parse_json_text(text, what);
}

}  // namespace

extern "C" {

const char* cfm_version(void) { return "0.1.0"; }

const char* cfm_last_error(void) { return g_last_error.c_str(); }

void cfm_string_free(char* s) { std::free(s); }

cfm_status cfm_dataset_create(const double* values, size_t subjects, size_t channels,
                              size_t times, cfm_dataset** out) {
  return guarded([&] {
    require(values && out, "null pointer");
    std::vector<double> v(values, values + subjects * channels * times);
    auto* d = new cfm_dataset{
        cfm::PhaseDataset(subjects, channels, cfm::TimeGrid::uniform01(times), std::move(v))};
    d->impl.require_valid();
    *out = d;
  });
}

cfm_status cfm_dataset_load(const char* path, int wrap_on_load, cfm_dataset** out) {
  return guarded([&] {
    require(path && out, "null pointer");
    cfm::LoadOptions opts;
    opts.wrap_on_load = wrap_on_load != 0;
    *out = new cfm_dataset{cfm::load_dataset(path, opts)};
  });
}

cfm_status cfm_dataset_save(const cfm_dataset* data, const char* path) {
  return guarded([&] {
    require(data && path, "null pointer");
    cfm::save_dataset(data->impl, path);
  });
}

cfm_status cfm_dataset_dims(const cfm_dataset* data, size_t* subjects, size_t* channels,
                            size_t* times) {
  return guarded([&] {
    require(data != nullptr, "null pointer");
    if (subjects) *subjects = data->impl.subjects();
    if (channels) *channels = data->impl.channels();
    if (times) *times = data->impl.times();
  });
}

cfm_status cfm_dataset_values(const cfm_dataset* data, double* out, size_t capacity) {
  return guarded([&] {
    require(data && out, "null pointer");
    const auto& v = data->impl.values();
    require(capacity >= v.size(), "buffer too small");
    std::memcpy(out, v.data(), v.size() * sizeof(double));
  });
}

void cfm_dataset_free(cfm_dataset* data) { delete data; }

cfm_status cfm_simulate(const char* config_json, cfm_dataset** out_data, cfm_truth** out_truth) {
  return guarded([&] {
    require(out_data != nullptr, "null pointer");
    const cfm::SimulateSpec spec =
        cfm::simulate_from_json(parse_config(config_json, "simulate config"));
    const cfm::TimeGrid grid = cfm::TimeGrid::uniform01(spec.times);
    const cfm::BasisMatrix basis = cfm::evaluate_basis_grid(spec.basis, grid);
    auto [data, truth] =
        cfm::simulate_dataset(spec.subjects, spec.channels, basis, spec.hyper, spec.seed,
                              spec.fixed);
    *out_data = new cfm_dataset{std::move(data)};
    if (out_truth) *out_truth = new cfm_truth{std::move(truth)};
  });
}

cfm_status cfm_truth_clean(const cfm_truth* truth, cfm_dataset** out) {
  return guarded([&] {
    require(truth && out, "null pointer");
    *out = new cfm_dataset{truth->impl.clean};
  });
}

cfm_status cfm_truth_info(const cfm_truth* truth, char** json_out) {
  return guarded([&] {
    require(truth && json_out, "null pointer");
    const cfm::GenerativeTruth& t = truth->impl;
    nlohmann::json j;
    j["subjects"] = t.coeffs.dim0();
    j["channels"] = t.coeffs.dim1();
    j["basis_size"] = t.coeffs.dim2();
    j["sigma2"] = t.sigma2;
    nlohmann::json coeffs = nlohmann::json::array();
    for (size_t s = 0; s < t.coeffs.dim0(); ++s) {
      nlohmann::json per_channel = nlohmann::json::array();
      for (size_t k = 0; k < t.coeffs.dim1(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (size_t l = 0; l < t.coeffs.dim2(); ++l) row.push_back(t.coeffs(s, k, l));
        per_channel.push_back(std::move(row));
      }
      coeffs.push_back(std::move(per_channel));
    }
    j["coeffs"] = std::move(coeffs);
    *json_out = dup_string(j.dump());
  });
}

void cfm_truth_free(cfm_truth* truth) { delete truth; }

cfm_status cfm_fit(const cfm_dataset* data, const char* config_json, cfm_chain** out) {
  return guarded([&] {
    require(data && out, "null pointer");
    const cfm::FitSpec spec = cfm::fit_from_json(parse_config(config_json, "fit config"));
    const cfm::BasisMatrix basis = cfm::evaluate_basis_grid(spec.basis, data->impl.grid());
    *out = new cfm_chain{cfm::run_chain(data->impl, basis, spec.hyper, spec.chain)};
  });
}

cfm_status cfm_chain_save(const cfm_chain* chain, const char* path) {
  return guarded([&] {
    require(chain && path, "null pointer");
    cfm::save_chain(chain->impl, path);
  });
}

cfm_status cfm_chain_load(const char* path, cfm_chain** out) {
  return guarded([&] {
    require(path && out, "null pointer");
    *out = new cfm_chain{cfm::load_chain(path)};
  });
}

cfm_status cfm_chain_info(const cfm_chain* chain, char** json_out) {
  return guarded([&] {
    require(chain && json_out, "null pointer");
    const cfm::PosteriorChain& c = chain->impl;
    nlohmann::json j;
    j["subjects"] = c.subjects;
    j["channels"] = c.channels;
    j["times"] = c.times;
    j["basis_size"] = c.basis_size;
    j["draws"] = c.draws;
    j["chain"] = cfm::chain_to_json(c.config);
    j["hyper"] = cfm::hyper_to_json(c.hyper);
    j["basis"] = cfm::spline_to_json(c.basis);
    *json_out = dup_string(j.dump());
  });
}

void cfm_chain_free(cfm_chain* chain) { delete chain; }

cfm_status cfm_naive_plv(const cfm_dataset* data, double* out, size_t capacity) {
  return guarded([&] {
    require(data && out, "null pointer");
    const cfm::Mat m = cfm::naive_plv(data->impl).averaged;
    require(capacity >= m.v.size(), "buffer too small");
    std::memcpy(out, m.v.data(), m.v.size() * sizeof(double));
  });
}

cfm_status cfm_posterior_summary(const cfm_chain* chain, double threshold, double cut,
                                 char** json_out) {
  return guarded([&] {
    require(chain && json_out, "null pointer");
    const cfm::PosteriorChain& c = chain->impl;
    const cfm::BasisMatrix basis = cfm::evaluate_basis_grid(c.basis, c.grid);
    const cfm::PlvSummary summary =
        cfm::summarize_plv(cfm::posterior_plv(c, basis), threshold, cut);
    nlohmann::json j;
    j["threshold"] = summary.threshold;
    j["cut"] = summary.decision_cut;
    j["draws"] = summary.draws;
    j["channels"] = c.channels;
    nlohmann::json pairs = nlohmann::json::array();
    for (const cfm::PairSummary& p : summary.pairs) {
      nlohmann::json jp;
      jp["k"] = p.k;
      jp["kprime"] = p.kprime;
      jp["mean"] = p.mean;
      jp["ci_low"] = p.ci_low;
      jp["ci_high"] = p.ci_high;
      jp["p_exceed"] = p.exceedance;
      jp["edge"] = p.edge;
      pairs.push_back(std::move(jp));
    }
    j["pairs"] = std::move(pairs);
    *json_out = dup_string(j.dump());
  });
}

cfm_status cfm_edges_csv(const cfm_chain* chain, double threshold, double cut, const char* path) {
  return guarded([&] {
    require(chain && path, "null pointer");
    const cfm::PosteriorChain& c = chain->impl;
    const cfm::BasisMatrix basis = cfm::evaluate_basis_grid(c.basis, c.grid);
    cfm::write_edges_csv(cfm::summarize_plv(cfm::posterior_plv(c, basis), threshold, cut), path);
  });
}

cfm_status cfm_extract_phase(const char* signal_csv_path, double fs, double band_low,
                             double band_high, size_t take, cfm_dataset** out,
                             size_t* out_edge_guard) {
  return guarded([&] {
    require(signal_csv_path && out, "null pointer");
    const cfm::RawSignal sig = cfm::load_signal_csv(signal_csv_path, fs);
    cfm::PhaseExtract ex = cfm::extract_phase(sig, cfm::BandSpec{band_low, band_high}, take);
    *out = new cfm_dataset{std::move(ex.data)};
    if (out_edge_guard) *out_edge_guard = ex.edge_guard;
  });
}

cfm_status cfm_default_experiment_config(char** json_out) {
  return guarded([&] {
    require(json_out != nullptr, "null pointer");
    *json_out = dup_string(cfm::experiment_to_json(cfm::default_experiment_config()).dump());
  });
}

cfm_status cfm_run_experiment(const char* config_json, const char* base_dataset_path,
                              const char* out_dir, char** report_json_out) {
  return guarded([&] {
    cfm::ExperimentConfig cfg =
        cfm::experiment_from_json(parse_config(config_json, "experiment config"));
    if (base_dataset_path) cfg.base = cfm::load_dataset(base_dataset_path);
    const cfm::ExperimentReport rep = cfm::run_experiment(cfg);
    if (out_dir) cfm::write_report(rep, out_dir);
    if (report_json_out) *report_json_out = dup_string(cfm::report_to_json(rep).dump());
  });
}

} /* extern "C" */
