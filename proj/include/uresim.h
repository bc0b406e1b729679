/* C interface of the uplink URLLC/eMBB resource allocation library.
 *
 * All functions return ur_status; UR_OK means the out-parameters were
 * written. On any other status a human-readable message is available from
 * ur_last_error() on the calling thread. Opaque handles are created and
 * destroyed with the matching _create/_destroy pair and are not thread-safe
 * individually; distinct handles may be used from distinct threads.
 */
#ifndef URESIM_H
#define URESIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UR_API __declspec(dllexport)
#else
#define UR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ur_status {
  UR_OK = 0,
  UR_ERR_INVALID_ARGUMENT = 1,
  UR_ERR_INFEASIBLE = 2,
  UR_ERR_IO = 3,
  UR_ERR_INTERNAL = 4
} ur_status;

UR_API const char* ur_version(void);
UR_API const char* ur_status_name(ur_status status);
/* Message from the most recent failing call on this thread ("" if none). */
UR_API const char* ur_last_error(void);

/* ---- URLLC retransmission reliability ------------------------------- */

typedef struct ur_mc_estimate {
  double estimate;
  double std_error;
  long long trials;
  uint64_t seed;
} ur_mc_estimate;

/* rho_tilde: packet arrivals per mini slot on one resource block. */
UR_API ur_status ur_failure_prob_exact_tau3(double rho_tilde, double p,
                                            double* out);
UR_API ur_status ur_light_traffic_coefficient(double p, int tau, double* out);
UR_API ur_status ur_failure_prob_light_traffic(double rho_tilde, double p,
                                               int tau, double* out);
/* rho: arrivals per mini slot over the whole band, split over `blocks`. */
UR_API ur_status ur_failure_prob_per_region(double rho, double p, int tau,
                                            int blocks, double* out);
UR_API ur_status ur_failure_prob_monte_carlo(double rho_tilde, double p,
                                             int tau, long long trials,
                                             uint64_t seed, int threads,
                                             ur_mc_estimate* out);

/* ---- Region-sizing game ---------------------------------------------- */

typedef struct ur_game_params {
  double rho;     /* URLLC arrivals per mini slot, whole band */
  double p;       /* retransmission probability */
  int tau;        /* delay budget in mini slots */
  int n_blocks;   /* total resource blocks */
  double epsilon; /* URLLC loss bound */
  double b;       /* resource cost, in (0,1) */
  double a;       /* eMBB efficiency in the common region, in (0,1) */
  double c;       /* bits per grant-based block per frame */
  double r;       /* total eMBB bits requested per frame */
} ur_game_params;

UR_API void ur_game_params_defaults(ur_game_params* params);

UR_API ur_status ur_game_throughput(const ur_game_params* params, int n1,
                                    int n2, double* out);
UR_API ur_status ur_game_min_grant_blocks(const ur_game_params* params, int n1,
                                          int* out);
/* *found is 0 when no common-region size meets epsilon (then *out is -1). */
UR_API ur_status ur_game_min_common_blocks(const ur_game_params* params,
                                           int* out, int* found);
UR_API ur_status ur_game_payoffs(const ur_game_params* params, int n1, int n2,
                                 double* urllc, double* embb, double* social);

typedef struct ur_profile {
  int n1;
  int n2;
} ur_profile;

typedef enum ur_game_case {
  UR_GAME_INFEASIBLE_URLLC = 0,
  UR_GAME_CASE1 = 1,
  UR_GAME_CASE2 = 2,
  UR_GAME_CASE3 = 3
} ur_game_case;

typedef struct ur_equilibrium_result {
  ur_game_case case_id;
  int equilibrium_count;          /* 1 or 2 */
  ur_profile equilibria[2];
  double social_payoffs[2];       /* aligned with equilibria */
  int socially_optimal_count;     /* 1 or 2; prefix of equilibria */
  ur_profile socially_optimal[2];
  int degenerate_epsilon;         /* 1 when epsilon >= 1 */
} ur_equilibrium_result;

UR_API const char* ur_game_case_name(ur_game_case case_id);
UR_API ur_status ur_game_solve(const ur_game_params* params,
                               ur_equilibrium_result* out);
/* Writes up to `capacity` equilibria; *count receives the total found. */
UR_API ur_status ur_game_enumerate(const ur_game_params* params,
                                   ur_profile* out, int capacity, int* count);

/* ---- Per-frame grant allocation -------------------------------------- */

typedef enum ur_alloc_method {
  UR_ALLOC_WATER_FILL = 0,
  UR_ALLOC_SMALLEST_FIRST = 1,
  UR_ALLOC_LARGEST_FIRST = 2,
  UR_ALLOC_RANDOM_ORDER = 3,
  UR_ALLOC_TWO_STEP = 4,
  UR_ALLOC_MAX_MIN = 5
} ur_alloc_method;

UR_API const char* ur_alloc_method_name(ur_alloc_method method);

/* granted/requested/grants_out are arrays of length `users`. The seed is
 * consumed only by UR_ALLOC_RANDOM_ORDER. */
UR_API ur_status ur_allocate(ur_alloc_method method, const double* granted,
                             const double* requested, int users, double budget,
                             uint64_t seed, double* grants_out);
UR_API ur_status ur_alloc_objective(const double* granted,
                                    const double* requested, int users,
                                    double budget, const double* grants,
                                    double* out);

/* Per-user classification in ur_alloc_kkt's bound_state_out. */
typedef enum ur_bound_state {
  UR_BOUND_INTERIOR = 0,
  UR_BOUND_AT_ZERO = 1,
  UR_BOUND_AT_REQUEST = 2,
  UR_BOUND_IDLE = 3
} ur_bound_state;

typedef struct ur_kkt_info {
  double lambda;
  int lambda_defined; /* 0 when no user is strictly interior */
  double stationarity_residual;
  double complementarity_residual;
} ur_kkt_info;

/* mu_out/omega_out/bound_state_out are arrays of length `users`; any of
 * them may be NULL when not wanted. */
UR_API ur_status ur_alloc_kkt(const double* granted, const double* requested,
                              int users, double budget, const double* grants,
                              double* mu_out, double* omega_out,
                              int* bound_state_out, ur_kkt_info* info);

UR_API ur_status ur_sample_variance(const double* values, int count,
                                    double* out);
UR_API ur_status ur_jain_index(const double* values, int count, double* out);

/* ---- Frame-level simulation and experiments -------------------------- */

typedef struct ur_sim_config ur_sim_config;

/* Starts from the reference parameter set (rho=6.5e-4, tau=8, p=0.3,
 * N=60, epsilon=1e-5, b=0.8, a=0.5, c=3.2e4, B=3.8e5, m=8). */
UR_API ur_sim_config* ur_sim_config_create(void);
UR_API void ur_sim_config_destroy(ur_sim_config* config);
UR_API ur_sim_config* ur_sim_config_clone(const ur_sim_config* config);
UR_API ur_status ur_sim_config_set(ur_sim_config* config, const char* key,
                                   const char* value);
UR_API ur_status ur_sim_config_get(const ur_sim_config* config,
                                   const char* key, char* buffer,
                                   size_t buffer_size);
/* JSON text; release with ur_string_free. */
UR_API ur_status ur_sim_config_to_json(const ur_sim_config* config,
                                       char** out);
UR_API ur_status ur_sim_config_load_json(ur_sim_config* config,
                                         const char* json_text);
UR_API void ur_string_free(char* text);

typedef struct ur_metrics_report {
  uint64_t seed;
  long long frames;
  double n1_mean;
  double n2_mean;
  long long urllc_arrived;
  long long urllc_lost;
  double urllc_loss_prob;
  double embb_arrived_bits;
  double embb_lost_bits;
  double embb_loss_prob;
  double sample_variance;
  double jain_index;
  double social_payoff;
} ur_metrics_report;

UR_API ur_status ur_sim_run(const ur_sim_config* config,
                            ur_metrics_report* out);
/* Additionally writes one JSON record per frame to trace_path. */
UR_API ur_status ur_sim_run_traced(const ur_sim_config* config,
                                   const char* trace_path,
                                   ur_metrics_report* out);

typedef struct ur_experiment ur_experiment;

UR_API ur_experiment* ur_experiment_create(const ur_sim_config* base);
UR_API void ur_experiment_destroy(ur_experiment* experiment);
/* comma_values: e.g. "0.1,0.2,0.5". Axes apply in the order added. */
UR_API ur_status ur_experiment_add_sweep(ur_experiment* experiment,
                                         const char* field,
                                         const char* comma_values);
UR_API ur_status ur_experiment_set_seeds(ur_experiment* experiment,
                                         const uint64_t* seeds, int count);
UR_API ur_status ur_experiment_set_threads(ur_experiment* experiment,
                                           int threads);
/* Full CSV (header + one row per cell per seed); release with
 * ur_string_free. Row order is deterministic for any thread count. */
UR_API ur_status ur_experiment_csv(ur_experiment* experiment, char** out);
/* Writes the CSV to `path` (atomically; nothing is left on failure). */
UR_API ur_status ur_experiment_run_to_file(ur_experiment* experiment,
                                           const char* path,
                                           long long* rows_out);
UR_API const char* ur_experiment_csv_header(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* URESIM_H */
