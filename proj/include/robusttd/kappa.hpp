#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robusttd/core.hpp"
#include "robusttd/envs.hpp"

namespace robusttd {

// The alternative controller that takes over with probability varkappa.
enum class Attacker {
    minimizer,       // argmin of the learner's own Q-values
    uniform_random,  // random failure; every min becomes a mean
};

enum class AttackSplit {
    single,            // single-agent table
    split_evenly_two,  // two agents, each attacked with probability varkappa / 2
};

/// The agent's internal model of significant rare events. The control set is
/// {focal policy, attacker} with p(attacker) = varkappa, independent of the
/// state unless a per-state override is supplied.
struct KappaSpec {
    double varkappa = 0.0;
    Attacker attacker = Attacker::minimizer;
    AttackSplit split = AttackSplit::single;
    std::shared_ptr<const std::vector<double>> per_state_varkappa;

    double varkappa_at(StateId s) const;
    void validate() const;
};

enum class TargetKind { q_kappa, esarsa_kappa, q_learning, sarsa, esarsa, ma_q_kappa, ma_esarsa_kappa };

std::string_view to_string(TargetKind kind);
TargetKind parse_target_kind(std::string_view name);
bool is_multi_agent(TargetKind kind);
bool uses_kappa(TargetKind kind);

// Summary operators over a single action row. These are the building blocks
// of every target below, and each is a non-expansion in the sup norm.
double row_max(std::span<const double> row);
double row_min(std::span<const double> row);
double row_mean(std::span<const double> row);
// Sum over the epsilon-greedy distribution: epsilon * mean + (1 - epsilon) * max.
double row_expected(std::span<const double> row, double epsilon);

// Joint summaries over a row laid out [a1 * n2 + a2].
double joint_max(std::span<const double> row, std::size_t n1, std::size_t n2);
// Agent 1 attacked: min over a1 of agent 2's epsilon2-greedy response value.
// epsilon2 = 0 gives min_{a1} max_{a2}.
double joint_min_agent1(std::span<const double> row, std::size_t n1, std::size_t n2, double epsilon2,
                        Attacker attacker);
double joint_min_agent2(std::span<const double> row, std::size_t n1, std::size_t n2, double epsilon1,
                        Attacker attacker);
/// Expected value under the cooperative joint behaviour policy: with full
/// communication the agents play the joint argmax; an agent that explores
/// plays uniformly and the other best-responds to it; both exploring is
/// uniform over the joint space.
double joint_expected(std::span<const double> row, std::size_t n1, std::size_t n2, double epsilon1,
                      double epsilon2);

// V^kappa targets evaluated at state s.
double v_kappa_q(const QTable& q, StateId s, const KappaSpec& spec);
double v_kappa_esarsa(const QTable& q, StateId s, double epsilon, const KappaSpec& spec);
double v_kappa_ma_q(const QTable& q, StateId s, const KappaSpec& spec);
double v_kappa_ma_esarsa(const QTable& q, StateId s, double epsilon1, double epsilon2, const KappaSpec& spec);

// Baseline targets. On joint tables esarsa uses joint_expected.
double v_max(const QTable& q, StateId s);
double v_expected(const QTable& q, StateId s, double epsilon);

/// Bootstrap value of s' for a target kind. sarsa needs the next action;
/// the other kinds ignore it. Multi-agent kinds use epsilon for both agents.
double target_value(TargetKind kind, const QTable& q, StateId s, double epsilon, const KappaSpec& spec,
                    std::optional<ActionId> next_action = std::nullopt);

/// Checks that a target kind can be evaluated on a table of this shape.
void check_target_shape(TargetKind kind, const ActionShape& shape, const KappaSpec& spec);

/// One application of the generalized Bellman operator through the
/// environment's deterministic model: (T q)(s, a) = r(s, a) + gamma * V(next),
/// with V chosen by the target kind and terminal successors contributing 0.
/// Rows of terminal states are zero. sarsa has no such operator.
QTable apply_gbellman(const QTable& q, const TabularEnv& env, TargetKind kind, const KappaSpec& spec, double gamma,
                      double epsilon = 0.0);

} // namespace robusttd
