#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "robusttd/core.hpp"
#include "robusttd/envs.hpp"
#include "robusttd/kappa.hpp"
#include "robusttd/stats.hpp"

namespace robusttd {

enum class PerturbationKind { none, stochastic, adversarial };

/// Disturbance of the actual world, applied when an action is executed.
struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::none;
    double p = 0.0;

    static PerturbationSpec none() { return {}; }
    static PerturbationSpec stochastic(double p) { return {PerturbationKind::stochastic, p}; }
    static PerturbationSpec adversarial(double p) { return {PerturbationKind::adversarial, p}; }
    void validate() const;
};

std::string_view to_string(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(std::string_view name);

enum class AlphaSchedule {
    constant,     // alpha throughout
    visit_decay,  // 1 / (1 + visits(s, a))^alpha_decay_exponent
};

struct LearnerConfig {
    TargetKind target = TargetKind::q_learning;
    double alpha = 0.1;
    double epsilon = 0.1;
    double gamma = 1.0;
    KappaSpec kappa;
    std::size_t episodes = 0;
    std::uint64_t seed = 0;

    AlphaSchedule alpha_schedule = AlphaSchedule::constant;
    double alpha_decay_exponent = 0.7;
    // When positive, varkappa at global step t is kappa.varkappa / (1 + t / kappa_decay_steps).
    double kappa_decay_steps = 0.0;
    // When positive, training stops once this many steps have been taken in total.
    std::size_t max_steps = 0;
    std::size_t step_cap = kEpisodeStepCap;

    void validate() const;
};

struct EpisodeTrace {
    double ret = 0.0;
    std::size_t steps = 0;
    bool capped = false;
    // Stopped early by LearnerConfig::max_steps.
    bool truncated = false;
};

struct Transition {
    StateId state;
    ActionId action;
    double reward = 0.0;
    StateId next;
    bool done = false;
};

/// Cooperative behaviour policy on a joint table: each agent explores with
/// its own epsilon; if neither explores the joint argmax is played, if one
/// explores the other best-responds to its uniform choice.
ActionId joint_epsilon_greedy(const QTable& q, StateId s, double epsilon1, double epsilon2, Rng& rng);

/// epsilon_greedy on single-agent tables, joint_epsilon_greedy on joint ones.
ActionId behaviour_action(const QTable& q, StateId s, double epsilon, Rng& rng);

/// Executed action given the intended one. An adversarial takeover plays the
/// argmin of the learner's current table. On joint tables one agent is chosen
/// uniformly, its component becomes argmin over a_i of max over a_j Q(s, a_i, a_j),
/// and the other agent best-responds to it.
ActionId perturb_action(ActionId intended, const QTable& q, StateId s, const PerturbationSpec& pert, Rng& rng);

/// Q(s,a) += alpha * (r + gamma * V(s') - Q(s,a)), V = 0 when done.
void td_update(QTable& q, const Transition& t, const LearnerConfig& cfg,
               std::optional<ActionId> next_action = std::nullopt);
void td_update(QTable& q, const Transition& t, TargetKind target, double alpha, double gamma, double epsilon,
               const KappaSpec& spec, std::optional<ActionId> next_action = std::nullopt);

/// Online TD learner owning its table, visit counts and random stream.
class Learner {
public:
    Learner(const TabularEnv& env, LearnerConfig cfg, PerturbationSpec pert);
    Learner(const TabularEnv& env, LearnerConfig cfg, PerturbationSpec pert, QTable initial);

    EpisodeTrace run_episode();

    const QTable& table() const noexcept { return q_; }
    QTable release_table() { return std::move(q_); }
    const LearnerConfig& config() const noexcept { return cfg_; }
    std::size_t total_steps() const noexcept { return total_steps_; }
    bool budget_exhausted() const noexcept { return cfg_.max_steps > 0 && total_steps_ >= cfg_.max_steps; }
    std::uint64_t visits(StateId s, ActionId a) const { return visits_[s.index * q_.num_actions() + a.index]; }
    std::uint64_t state_visits(StateId s) const { return state_visits_[s.index]; }
    const std::vector<std::uint64_t>& state_visit_counts() const noexcept { return state_visits_; }
    double current_varkappa() const;

private:
    const TabularEnv& env_;
    LearnerConfig cfg_;
    PerturbationSpec pert_;
    QTable q_;
    Rng rng_;
    std::vector<std::uint64_t> visits_;
    std::vector<std::uint64_t> state_visits_;
    std::size_t total_steps_ = 0;
};

/// One episode with a constant learning rate on a caller-owned table.
EpisodeTrace run_episode(const TabularEnv& env, QTable& q, const LearnerConfig& cfg, const PerturbationSpec& pert,
                         Rng& rng);

struct TrainResult {
    QTable q;
    std::vector<double> returns;
    std::vector<EpisodeTrace> traces;
    std::vector<std::uint64_t> visits;        // per (s, a), flattened like the table
    std::vector<std::uint64_t> state_visits;  // per state
    std::size_t total_steps = 0;
};

/// Runs cfg.episodes episodes on one zero-initialized table (fewer if
/// cfg.max_steps runs out first).
TrainResult train(const TabularEnv& env, const LearnerConfig& cfg, const PerturbationSpec& pert);

/// Rolls out a frozen table with behaviour_action(epsilon) under pert for
/// `trials` episodes and aggregates the episode returns.
RunStats evaluate(const TabularEnv& env, const QTable& q, double epsilon, const PerturbationSpec& pert,
                  std::size_t trials, Rng& rng, std::size_t step_cap = kEpisodeStepCap);

} // namespace robusttd
