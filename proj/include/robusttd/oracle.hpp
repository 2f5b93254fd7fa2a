#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "robusttd/core.hpp"
#include "robusttd/envs.hpp"
#include "robusttd/kappa.hpp"

namespace robusttd {

struct FixedPointResult {
    QTable q_star;
    std::size_t iterations = 0;
    // Sup-norm change of the final sweep.
    double residual = 0.0;
    bool converged = false;
    // Sup-norm change after each sweep, for contraction diagnostics.
    std::vector<double> residual_history;
};

inline constexpr double kDefaultFixedPointTol = 1e-10;
inline constexpr std::size_t kDefaultMaxIterations = 1'000'000;

/// Iterates apply_gbellman from the zero table until the sup-norm change is at
/// most tol. With gamma == 1 the iteration is refused (std::invalid_argument)
/// when a minimizing controller in full control could keep the agent away
/// from the goal forever, since the values would diverge.
FixedPointResult value_iterate(const TabularEnv& env, const KappaSpec& spec, TargetKind target, double gamma,
                               double epsilon = 0.0, double tol = kDefaultFixedPointTol,
                               std::size_t max_iter = kDefaultMaxIterations);

/// True when some action choice keeps the process out of the goal forever
/// from at least one state.
bool has_goal_avoiding_cycle(const TabularEnv& env);

struct PathResult {
    std::size_t length = 0;
    std::vector<Cell> path;  // includes start and goal
};

/// Fewest moves from start to goal that never land on a hazard, under the
/// given displacement model. Throws std::runtime_error if unreachable.
PathResult bfs_shortest_path(const GridMap& map, const ActionModel& model);

/// Minimum Chebyshev distance from any path cell to any hazard cell. A map
/// without hazards yields max(width, height).
int path_safety_margin(const GridMap& map, const std::vector<Cell>& path);

struct GreedyPath {
    std::vector<Cell> cells;
    double total_reward = 0.0;
    bool reached_goal = false;
};

/// Deterministic greedy rollout from the start (ties to the lowest index),
/// stopping at the goal or after every state has been visited once.
GreedyPath greedy_path(const GridEnv& env, const QTable& q);

} // namespace robusttd
