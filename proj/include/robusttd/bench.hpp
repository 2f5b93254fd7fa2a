#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "robusttd/kappa.hpp"
#include "robusttd/learn.hpp"
#include "robusttd/stats.hpp"

namespace robusttd {

enum class ExperimentKind { early, converged, attack, robustness, path };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::attack;
    std::string env = "puddle";
    // Algorithm names as accepted by parse_target_kind. On the puddle world
    // q_kappa and esarsa_kappa run as their multi-agent versions.
    std::vector<std::string> algorithms;
    std::vector<double> alphas;
    double epsilon = 0.1;
    double gamma = 1.0;
    // Fixed varkappa for the robustness experiment; the attack sweep uses varkappa = p.
    double kappa = 0.1;
    // Training perturbations for early / converged.
    std::vector<PerturbationSpec> train_perturbations;
    // Evaluation attack probabilities for attack / robustness.
    std::vector<double> ps;
    // varkappa grid for the path figure.
    std::vector<double> kappas;
    std::size_t trials = 10;
    std::size_t train_episodes = 100'000;
    std::size_t eval_episodes = 50'000;
    // Behaviour epsilon during evaluation rollouts.
    double eval_epsilon = 0.0;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

/// Defaults for every grid and count of an experiment on an environment.
ExperimentConfig default_experiment_config(ExperimentKind kind, std::string_view env);

/// One raw measurement: one trial of one cell for one metric.
struct CsvRow {
    std::string experiment;
    std::string env;
    std::string algorithm;
    double alpha = 0.0;
    double epsilon = 0.0;
    double kappa = 0.0;
    std::string perturbation;
    double p = 0.0;
    std::size_t trial = 0;
    std::string metric;
    double value = 0.0;
};

/// Per-cell aggregate of one metric over trials.
struct SummaryRow {
    CsvRow key;  // trial and value unused
    RunStats stats;
};

struct ExperimentResult {
    std::vector<CsvRow> rows;
    std::vector<SummaryRow> summary;
};

std::vector<CsvRow> experiment_early(const ExperimentConfig& cfg);
std::vector<CsvRow> experiment_converged(const ExperimentConfig& cfg);
std::vector<CsvRow> experiment_attack_sweep(const ExperimentConfig& cfg);
std::vector<CsvRow> experiment_robustness(const ExperimentConfig& cfg);
std::vector<CsvRow> experiment_path_figure(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment and aggregates.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Groups rows by everything except trial and value, in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<CsvRow>& rows);

inline constexpr std::string_view kCsvHeader =
    "experiment,env,algorithm,alpha,epsilon,kappa,perturbation,p,trial,metric,value";
inline constexpr std::string_view kSummaryHeader =
    "experiment,env,algorithm,alpha,epsilon,kappa,perturbation,p,metric,n,mean,ci95_half_width";

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);

/// Writes <experiment>_<env>.csv, <experiment>_<env>_summary.csv and the
/// SVG figures into dir, creating it if needed. Returns the files written.
std::vector<std::string> write_experiment_outputs(const ExperimentResult& result, const std::string& dir);

/// Rebuilds the summary and figures from a raw CSV file.
std::vector<std::string> plot_from_csv(const std::string& csv_path, const std::string& dir);

/// Calls body(i) for i < n on up to `threads` worker threads (0: hardware
/// concurrency). Rethrows the exception of the lowest failing index.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

struct FixedPointCheck {
    double distance = 0.0;     // sup norm over the compared entries
    std::size_t compared = 0;  // entries visited at least min_visits times
    std::size_t steps = 0;
    QTable learned;
    QTable oracle;
};

/// Trains with cfg (budget cfg.max_steps) and compares the learned table with
/// the fixed point of the operator the learner targets. With a varkappa
/// schedule the reference is the varkappa = 0 operator it converges to.
/// sarsa is compared with the expected-value operator of its behaviour policy.
FixedPointCheck check_fixed_point(const TabularEnv& env, const LearnerConfig& cfg, std::uint64_t min_visits);

/// Maps an algorithm name onto the target kind used on env.
TargetKind resolve_algorithm(std::string_view algorithm, std::string_view env);

std::string format_number(double v);

} // namespace robusttd
