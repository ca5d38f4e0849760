/* C interface to the sparse IV estimators.
 *
 * All functions report failures through siv_status; the message of the most
 * recent failure on the calling thread is available from siv_last_error().
 * Handles are opaque and owned by the caller, who releases them with the
 * matching *_free function. Matrices are passed column-major. Indices that
 * cross this boundary are 0-based; files written by the library use 1-based
 * indices.
 */
#ifndef SPARSE_IV_H
#define SPARSE_IV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(SIV_BUILDING_LIBRARY)
#define SIV_API __attribute__((visibility("default")))
#else
#define SIV_API
#endif

typedef enum {
    SIV_OK = 0,
    SIV_ERR_INTERNAL = 1,
    SIV_ERR_INPUT = 2,
    SIV_ERR_NUMERIC = 3,
    SIV_ERR_SCOPE = 4
} siv_status;

typedef enum { SIV_LASSO = 0, SIV_SCAD = 1, SIV_MCP = 2 } siv_penalty_kind;

SIV_API const char* siv_version(void);
SIV_API const char* siv_last_error(void);

/* Penalty functions. shape_a <= 0 selects the default shape. */
SIV_API siv_status siv_penalty_value(int kind, double shape_a, double level, double t, double* out);
SIV_API siv_status siv_threshold(int kind, double shape_a, double level, double z, double* out);
SIV_API siv_status siv_rho_prime(int kind, double shape_a, double level, double t, double* out);
SIV_API siv_status siv_local_concavity(int kind, double shape_a, double level, const double* theta, size_t len,
                                       double* out);

/* Datasets. Loading prepares the data (centering, instrument scaling). */
typedef struct siv_dataset siv_dataset;

SIV_API siv_status siv_dataset_create(size_t n, size_t p, size_t q, const double* y, const double* x,
                                      const double* z, siv_dataset** out);
SIV_API siv_status siv_dataset_load_csv(const char* y_path, const char* x_path, const char* z_path,
                                        siv_dataset** out);
SIV_API siv_status siv_dataset_load_dir(const char* dir, siv_dataset** out);
SIV_API void siv_dataset_free(siv_dataset* d);
SIV_API siv_status siv_dataset_dims(const siv_dataset* d, size_t* n, size_t* p, size_t* q);
SIV_API size_t siv_dataset_num_dropped(const siv_dataset* d);

/* Fitting. */
typedef enum { SIV_METHOD_2SR = 0, SIV_METHOD_PLS = 1 } siv_method;

typedef struct {
    int method;
    int penalty;
    double shape_a;       /* <= 0: default shape */
    int cv_folds;
    uint64_t seed;
    int grid_size;
    double mu;            /* < 0: cross-validate the stage-2 (or PLS) level */
    const double* lambdas; /* NULL: cross-validate stage 1; otherwise p levels */
    size_t n_lambdas;
    double tol;
    int max_iter;
    int threads;          /* <= 0: SPARSE_IV_THREADS, then all cores */
} siv_fit_options;

SIV_API void siv_fit_options_default(siv_fit_options* options);

typedef struct siv_fit siv_fit;

SIV_API siv_status siv_fit_run(const siv_dataset* d, const siv_fit_options* options, siv_fit** out);
SIV_API void siv_fit_free(siv_fit* fit);
SIV_API size_t siv_fit_num_coefficients(const siv_fit* fit);
SIV_API siv_status siv_fit_coefficients(const siv_fit* fit, double* out, size_t len);
SIV_API double siv_fit_level(const siv_fit* fit);
SIV_API size_t siv_fit_model_size(const siv_fit* fit);
SIV_API double siv_fit_adj_r2(const siv_fit* fit);
/* Writes beta.csv, gamma.csv (2SR only) and summary.json into dir. */
SIV_API siv_status siv_fit_write(const siv_fit* fit, const char* dir, int full_beta, int timings);

/* Simulation. */
typedef struct {
    size_t n, p, q, r, s;
    double gamma_lo, gamma_hi;
    int mixed_strength;
    size_t strong_count;
    double weak_lo, weak_hi;
    double beta_lo, beta_hi;
    double rho;
    double confound_value;
    size_t n_confounded;
    double bernoulli_p;
    int random_bernoulli;
    double bernoulli_max;
    uint64_t seed;
    char name[32];
} siv_sim_config;

SIV_API siv_status siv_sim_config_preset(int model, siv_sim_config* out);
/* Writes y.csv, x.csv, z.csv and the truth files into dir. */
SIV_API siv_status siv_simulate_write(const siv_sim_config* config, const char* dir);

typedef struct {
    int replicates;
    uint64_t base_seed;
    int folds;
    int grid_size;
    double scad_a;
    double mcp_a;
    int threads;
} siv_bench_options;

SIV_API void siv_bench_options_default(siv_bench_options* options);
/* Writes table.csv and replicates.csv into dir. */
SIV_API siv_status siv_benchmark_write(const siv_sim_config* models, size_t n_models,
                                       const siv_bench_options* options, const char* dir);
/* Writes curve.csv into dir; n_values must be strictly ascending. */
SIV_API siv_status siv_curve_write(const siv_sim_config* tmpl, const size_t* n_values, size_t count,
                                   const siv_bench_options* options, const char* dir);

/* Stability selection. */
typedef struct {
    int penalty;
    double shape_a;
    int subsamples;
    uint64_t seed;
    int grid_size;
    double threshold;
    int pls_mode;
    int refit_stage_one;
    int cv_folds;
    int threads;
} siv_stability_options;

SIV_API void siv_stability_options_default(siv_stability_options* options);
/* Writes stability.csv and selected.csv into dir. */
SIV_API siv_status siv_stability_write(const siv_dataset* d, const siv_stability_options* options, const char* dir);

/* Diagnostics. */
typedef enum { SIV_RE_AUTO = 0, SIV_RE_EXACT = 1, SIV_RE_APPROXIMATE = 2 } siv_re_mode;

typedef struct {
    int restricted_eigen;
    int irrepresentable;
    int least_false;
    int rates;
    int re_mode;
    long re_draws;
    uint64_t seed;
    double c;
    double c0;
    int penalty;
    double shape_a;
    double mu;            /* <= 0: use the rate value */
    int weak_oracle;      /* report the generic-penalty conditions with the bounds below */
    double alpha, e1, e2, nu, c_bound;
    int threads;
} siv_diagnose_options;

SIV_API void siv_diagnose_options_default(siv_diagnose_options* options);
/* Reads a directory written by siv_simulate_write and writes diagnostics.json. */
SIV_API siv_status siv_diagnose_write(const char* dataset_dir, const siv_diagnose_options* options,
                                      const char* out_dir);

SIV_API siv_status siv_restricted_eigenvalue(const double* a, size_t n, size_t m, size_t s, int mode, uint64_t seed,
                                             long draws, double* value, int* exact);
SIV_API siv_status siv_irrepresentability(const double* c, size_t p, const size_t* support, size_t s,
                                          double* irrep_norm, double* phi);

#ifdef __cplusplus
}
#endif

#endif
