/* CFM — noise-robust phase-locking estimation from circular phase data.
 *
 * C interface to the model library. All functions return a cfm_status;
 * on failure cfm_last_error() describes what went wrong (thread-local,
 * valid until the next call from the same thread). Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching *_free function. Strings returned through char** are released
 * with cfm_string_free.
 *
 * Structured configuration crosses the boundary as JSON text; the README
 * documents the accepted fields for each call.
 */
#ifndef CFM_H
#define CFM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cfm_status {
  CFM_OK = 0,
  CFM_ERR_INVALID_ARGUMENT = 1, /* bad parameter value or null handle */
  CFM_ERR_VALIDATION = 2,       /* data violates a model invariant */
  CFM_ERR_PARSE = 3,            /* malformed file or JSON */
  CFM_ERR_IO = 4,               /* file system failure */
  CFM_ERR_NUMERIC = 5,          /* numerical breakdown (e.g. factorization) */
  CFM_ERR_INTERNAL = 6          /* unexpected condition inside the library */
} cfm_status;

/* Library version, "major.minor.patch". Static storage; do not free. */
const char* cfm_version(void);

/* Message for the most recent failure on this thread ("" if none). */
const char* cfm_last_error(void);

void cfm_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Datasets: n subjects x p channels x T time points, phases in [0, 2*pi),
 * observed on a shared uniform grid over [0, 1]. */

typedef struct cfm_dataset cfm_dataset;

/* Copy values (row-major over subject, channel, time) into a new dataset. */
cfm_status cfm_dataset_create(const double* values, size_t subjects, size_t channels,
                              size_t times, cfm_dataset** out);

/* Load a dataset file. Format by extension: ".cfm" binary, anything else
 * CSV (either the long "subject,channel,time_index,phase" layout or a
 * headerless T x p numeric table read as one subject). When wrap_on_load
 * is nonzero, out-of-range phases are reduced mod 2*pi instead of
 * rejected. */
cfm_status cfm_dataset_load(const char* path, int wrap_on_load, cfm_dataset** out);

cfm_status cfm_dataset_save(const cfm_dataset* data, const char* path);

cfm_status cfm_dataset_dims(const cfm_dataset* data, size_t* subjects, size_t* channels,
                            size_t* times);

/* Copy all n*p*T values out, row-major over (subject, channel, time).
 * `capacity` is the element count of `out`; it must be at least n*p*T. */
cfm_status cfm_dataset_values(const cfm_dataset* data, double* out, size_t capacity);

void cfm_dataset_free(cfm_dataset* data);

/* ------------------------------------------------------------------ */
/* Simulation from the generative model. */

typedef struct cfm_truth cfm_truth;

/* config_json fields (all optional): subjects, channels, times, seed,
 * basis {degree, knots, domain, clamp}, hyper {a0, b0, nu_tau, eta_tau,
 * nu_gamma, eta_gamma, nu_sigma, eta_sigma}, fixed {beta, tau2, gamma2,
 * sigma2}. out_truth may be NULL when the generative truth is not needed. */
cfm_status cfm_simulate(const char* config_json, cfm_dataset** out_data, cfm_truth** out_truth);

/* The noiseless curves behind a simulated dataset, wrapped to [0, 2*pi). */
cfm_status cfm_truth_clean(const cfm_truth* truth, cfm_dataset** out);

/* JSON with the realized generative parameters: dims, sigma2, and the
 * subject-level coefficients. */
cfm_status cfm_truth_info(const cfm_truth* truth, char** json_out);

void cfm_truth_free(cfm_truth* truth);

/* ------------------------------------------------------------------ */
/* Model fitting. */

typedef struct cfm_chain cfm_chain;

/* Run the Gibbs sampler. config_json fields (all optional): basis {...},
 * hyper {...}, chain {burnin, samples, thin, seed, threads}. The result
 * holds the retained posterior draws. */
cfm_status cfm_fit(const cfm_dataset* data, const char* config_json, cfm_chain** out);

/* Chain files are a binary payload plus a "<path>.json" sidecar echoing
 * dimensions and configuration. */
cfm_status cfm_chain_save(const cfm_chain* chain, const char* path);
cfm_status cfm_chain_load(const char* path, cfm_chain** out);

/* JSON description: dims, draw count, config echo. */
cfm_status cfm_chain_info(const cfm_chain* chain, char** json_out);

void cfm_chain_free(cfm_chain* chain);

/* ------------------------------------------------------------------ */
/* Connectivity estimates. */

/* Subject-averaged empirical phase-locking matrix. `out` receives p*p
 * values, row-major; `capacity` must be at least p*p. */
cfm_status cfm_naive_plv(const cfm_dataset* data, double* out, size_t capacity);

/* Posterior summary of pairwise PLV: per unordered pair the posterior
 * mean, central 95% interval, P(PLV >= threshold) and the edge call
 * (exceedance >= cut). Returned as JSON. */
cfm_status cfm_posterior_summary(const cfm_chain* chain, double threshold, double cut,
                                 char** json_out);

/* Same summary as a CSV file with header
 * "k,kprime,plv_mean,ci_low,ci_high,p_exceed,edge". */
cfm_status cfm_edges_csv(const cfm_chain* chain, double threshold, double cut, const char* path);

/* ------------------------------------------------------------------ */
/* Phase extraction from raw band-limited signals. */

/* Read a headerless CSV (one row per time point at rate fs, one column per
 * channel), band-pass to [band_low, band_high] Hz with a zero-phase FIR,
 * take the instantaneous phase of the analytic signal, and keep the first
 * `take` samples (0 keeps all). out_edge_guard (optional) receives the
 * number of leading/trailing samples considered boundary-unreliable (10%). */
cfm_status cfm_extract_phase(const char* signal_csv_path, double fs, double band_low,
                             double band_high, size_t take, cfm_dataset** out,
                             size_t* out_edge_guard);

/* ------------------------------------------------------------------ */
/* Noise-robustness benchmark. */

/* The tuned desk-scale benchmark configuration as JSON. */
cfm_status cfm_default_experiment_config(char** json_out);

/* Run the benchmark described by config_json (fields: simulate, fit,
 * noise, levels, threshold, cut, seed; all optional — absent fields use
 * the defaults). base_dataset_path, when non-NULL, supplies measured
 * clean data instead of a synthetic base. out_dir, when non-NULL,
 * receives report.json, curves.csv, table.csv and calibration.csv.
 * report_json_out, when non-NULL, receives the full report. */
cfm_status cfm_run_experiment(const char* config_json, const char* base_dataset_path,
                              const char* out_dir, char** report_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CFM_H */
