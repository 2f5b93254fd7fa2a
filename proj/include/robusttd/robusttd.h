#ifndef ROBUSTTD_H
#define ROBUSTTD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RTD_API __declspec(dllexport)
#else
#define RTD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rtd_status {
    RTD_OK = 0,
    RTD_ERR_INVALID_ARGUMENT = 1,
    RTD_ERR_IO = 2,
    RTD_ERR_RUNTIME = 3,
    RTD_ERR_VERIFY_FAILED = 4,
    RTD_ERR_INTERNAL = 5
} rtd_status;

/* Message of the most recent failure on the calling thread; "" if none. */
RTD_API const char* rtd_last_error(void);
RTD_API const char* rtd_status_name(rtd_status status);
RTD_API const char* rtd_version(void);

typedef struct rtd_env rtd_env;
typedef struct rtd_qtable rtd_qtable;
typedef struct rtd_run rtd_run;

/* name is "cliff" or "puddle"; map_text may be NULL for the built-in layout. */
RTD_API rtd_status rtd_env_create(const char* name, const char* map_text, rtd_env** out);
RTD_API rtd_status rtd_env_create_from_file(const char* name, const char* map_path, rtd_env** out);
RTD_API void rtd_env_destroy(rtd_env* env);
RTD_API rtd_status rtd_env_dims(const rtd_env* env, size_t* num_states, size_t* num_actions);
/* Writes the map text (NUL-terminated, truncated to cap) and its full length. */
RTD_API rtd_status rtd_env_render(const rtd_env* env, char* buf, size_t cap, size_t* length);
/* Fewest safe moves from start to goal. */
RTD_API rtd_status rtd_env_shortest_path(const rtd_env* env, size_t* length);

RTD_API rtd_status rtd_qtable_load(const char* path, rtd_qtable** out);
RTD_API rtd_status rtd_qtable_save(const rtd_qtable* q, const char* path);
RTD_API void rtd_qtable_destroy(rtd_qtable* q);
RTD_API rtd_status rtd_qtable_dims(const rtd_qtable* q, size_t* num_states, size_t* num_actions);
RTD_API rtd_status rtd_qtable_get(const rtd_qtable* q, size_t state, size_t action, double* value);
RTD_API rtd_status rtd_qtable_distance(const rtd_qtable* a, const rtd_qtable* b, double* sup_norm);

typedef struct rtd_train_options {
    const char* algorithm; /* q_learning, sarsa, esarsa, q_kappa, esarsa_kappa, ma_q_kappa, ma_esarsa_kappa */
    double alpha;
    double epsilon;
    double gamma;
    double kappa;
    uint64_t episodes;
    uint64_t seed;
    int decay_alpha;          /* nonzero: alpha = 1 / (1 + visits)^0.7 */
    double kappa_decay_steps; /* > 0: kappa_t = kappa / (1 + t / kappa_decay_steps) */
    uint64_t max_steps;       /* > 0: stop after this many steps in total */
    const char* perturbation; /* none, stochastic, adversarial */
    double perturbation_p;
} rtd_train_options;

/* alpha 0.1, epsilon 0.1, gamma 1, q_learning, no perturbation. */
RTD_API void rtd_train_options_default(rtd_train_options* opts);

/* Algorithms q_kappa / esarsa_kappa run as their two-agent versions on the puddle world. */
RTD_API rtd_status rtd_train(const rtd_env* env, const rtd_train_options* opts, rtd_run** out);
RTD_API void rtd_run_destroy(rtd_run* run);
RTD_API size_t rtd_run_num_episodes(const rtd_run* run);
RTD_API uint64_t rtd_run_total_steps(const rtd_run* run);
/* Copies min(cap, episodes) episode returns into buf. */
RTD_API size_t rtd_run_returns(const rtd_run* run, double* buf, size_t cap);
/* New table owned by the caller. */
RTD_API rtd_status rtd_run_table(const rtd_run* run, rtd_qtable** out);
RTD_API rtd_status rtd_run_visits(const rtd_run* run, size_t state, size_t action, uint64_t* visits);
/* Writes qtable.txt and returns.csv into dir, creating it if needed. */
RTD_API rtd_status rtd_run_write(const rtd_run* run, const char* dir);

typedef struct rtd_stats {
    double mean;
    double ci95_half_width; /* NaN when n == 1 */
    uint64_t n;
    uint64_t capped;
} rtd_stats;

RTD_API rtd_status rtd_evaluate(const rtd_env* env, const rtd_qtable* q, double epsilon, const char* perturbation,
                                double p, uint64_t trials, uint64_t seed, rtd_stats* out);

/* Deterministic greedy rollout from the start state. */
RTD_API rtd_status rtd_greedy_path(const rtd_env* env, const rtd_qtable* q, double* total_reward, int* reached_goal,
                                   int* safety_margin);

RTD_API rtd_status rtd_value_iterate(const rtd_env* env, const char* algorithm, double kappa, double gamma,
                                     double epsilon, double tol, rtd_qtable** out, uint64_t* iterations);

typedef struct rtd_verify_result {
    double distance;    /* sup norm over entries visited at least min_visits times */
    uint64_t compared;  /* number of such entries */
    uint64_t steps;
} rtd_verify_result;

/* Trains with decaying alpha for max_steps steps and compares to the fixed
 * point of the matching operator. Returns RTD_ERR_VERIFY_FAILED when the
 * distance exceeds tol or no entry qualifies; out is filled either way. */
RTD_API rtd_status rtd_verify(const rtd_env* env, const rtd_train_options* opts, double tol, uint64_t min_visits,
                              rtd_verify_result* out);

typedef struct rtd_experiment_options {
    const char* experiment; /* early, converged, attack, robustness, path */
    const char* env;
    const char* algorithms; /* comma separated; NULL for the default list */
    const char* alphas;     /* comma separated; NULL for the default grid */
    const char* ps;         /* comma separated; NULL for the default grid */
    const char* kappas;     /* comma separated; NULL for the default grid */
    double epsilon;         /* < 0: default */
    double kappa;           /* < 0: default */
    uint64_t trials;        /* 0: default */
    uint64_t train_episodes;
    uint64_t eval_episodes;
    uint64_t seed;
    unsigned threads;       /* 0: hardware concurrency */
} rtd_experiment_options;

RTD_API void rtd_experiment_options_default(rtd_experiment_options* opts);
/* Writes <experiment>_<env>.csv, a summary CSV and an SVG figure into out_dir. */
RTD_API rtd_status rtd_run_experiment(const rtd_experiment_options* opts, const char* out_dir);
RTD_API rtd_status rtd_plot_csv(const char* csv_path, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
