#include "robusttd/oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <stdexcept>

namespace robusttd {

bool has_goal_avoiding_cycle(const TabularEnv& env) {
    const std::size_t n = env.num_states();
    std::vector<char> avoiding(n, 0);
    for (std::size_t s = 0; s < n; ++s) avoiding[s] = env.is_terminal(StateId{s}) ? 0 : 1;
    const std::size_t num_actions = env.action_shape().size();
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (!avoiding[s]) continue;
            bool can_stay_out = false;
            for (std::size_t a = 0; a < num_actions && !can_stay_out; ++a) {
                const StepResult r = env.step(StateId{s}, ActionId{a});
                can_stay_out = !r.done && avoiding[r.next.index];
            }
            if (!can_stay_out) {
                avoiding[s] = 0;
                changed = true;
            }
        }
    }
    return std::any_of(avoiding.begin(), avoiding.end(), [](char c) { return c != 0; });
}

namespace {

double max_varkappa(const KappaSpec& spec) {
    if (!spec.per_state_varkappa || spec.per_state_varkappa->empty()) return spec.varkappa;
    return *std::max_element(spec.per_state_varkappa->begin(), spec.per_state_varkappa->end());
}

} // namespace

FixedPointResult value_iterate(const TabularEnv& env, const KappaSpec& spec, TargetKind target, double gamma,
                               double epsilon, double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (gamma == 1.0 && uses_kappa(target) && !is_multi_agent(target) && spec.attacker == Attacker::minimizer &&
        max_varkappa(spec) >= 1.0 && has_goal_avoiding_cycle(env))
        throw std::invalid_argument(
            "gamma = 1 with a minimizer in full control diverges: the minimizer can avoid the goal forever");

    FixedPointResult result{QTable(env.num_states(), env.action_shape(), 0.0), 0, 0.0, false, {}};
    while (result.iterations < max_iter) {
        QTable next = apply_gbellman(result.q_star, env, target, spec, gamma, epsilon);
        result.residual = sup_norm_distance(next, result.q_star);
        result.residual_history.push_back(result.residual);
        result.q_star = std::move(next);
        ++result.iterations;
        if (result.residual <= tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

namespace {

Cell apply_move(const GridMap& map, Cell from, Displacement d) {
    return Cell{std::clamp(from.row + d.drow, 0, map.height() - 1), std::clamp(from.col + d.dcol, 0, map.width() - 1)};
}

} // namespace

PathResult bfs_shortest_path(const GridMap& map, const ActionModel& model) {
    const auto index = [&](Cell c) { return static_cast<std::size_t>(c.row * map.width() + c.col); };
    const std::size_t n = static_cast<std::size_t>(map.width() * map.height());
    std::vector<long> parent(n, -1);
    std::vector<char> seen(n, 0);
    std::deque<Cell> frontier{map.start()};
    seen[index(map.start())] = 1;
    while (!frontier.empty()) {
        const Cell here = frontier.front();
        frontier.pop_front();
        if (here == map.goal()) break;
        for (const Displacement& d : model.moves) {
            const Cell next = apply_move(map, here, d);
            if (map.is_hazard(next) || seen[index(next)]) continue;
            seen[index(next)] = 1;
            parent[index(next)] = static_cast<long>(index(here));
            frontier.push_back(next);
        }
    }
    if (!seen[index(map.goal())]) throw std::runtime_error("goal unreachable without entering a hazard");

    PathResult result;
    for (long i = static_cast<long>(index(map.goal())); i != -1; i = parent[static_cast<std::size_t>(i)])
        result.path.push_back(Cell{static_cast<int>(i) / map.width(), static_cast<int>(i) % map.width()});
    std::reverse(result.path.begin(), result.path.end());
    result.length = result.path.size() - 1;
    return result;
}

int path_safety_margin(const GridMap& map, const std::vector<Cell>& path) {
    if (path.empty()) throw std::invalid_argument("empty path");
    if (map.hazards().empty()) return std::max(map.width(), map.height());
    int margin = std::max(map.width(), map.height());
    for (const Cell& p : path)
        for (const Cell& h : map.hazards())
            margin = std::min(margin, std::max(std::abs(p.row - h.row), std::abs(p.col - h.col)));
    return margin;
}

GreedyPath greedy_path(const GridEnv& env, const QTable& q) {
    GreedyPath out;
    const GridMap& map = env.map();
    StateId s = env.start_state();
    out.cells.push_back(map.start());
    for (std::size_t step = 0; step < env.num_states(); ++step) {
        auto row = q.row(s);
        const auto a = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        const Cell target = apply_move(map, env.cell_of(s), env.model().moves[a]);
        const StepResult r = env.step(s, ActionId{a});
        out.total_reward += r.reward;
        if (map.is_hazard(target)) out.cells.push_back(target);
        out.cells.push_back(env.cell_of(r.next));
        s = r.next;
        if (r.done) {
            out.reached_goal = true;
            break;
        }
    }
    return out;
}

} // namespace robusttd
