#include <doctest.h>

#include <cmath>
#include <map>

#include "robusttd/envs.hpp"
#include "robusttd/oracle.hpp"
#include "test_util.hpp"

using namespace robusttd;

namespace {

KappaSpec single(double k) {
    KappaSpec s;
    s.varkappa = k;
    return s;
}

KappaSpec two(double k) {
    KappaSpec s;
    s.varkappa = k;
    s.split = AttackSplit::split_evenly_two;
    return s;
}

// Plain textbook value iteration for the optimal Q-function.
QTable classical_q_star(const GridEnv& env, double gamma) {
    const std::size_t n = env.num_states(), m = env.action_shape().size();
    std::vector<double> v(n, 0.0);
    for (int it = 0; it < 10000; ++it) {
        std::vector<double> next(n, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            if (env.is_terminal(StateId{s})) continue;
            double best = -1e300;
            for (std::size_t a = 0; a < m; ++a) {
                const StepResult r = env.step(StateId{s}, ActionId{a});
                best = std::max(best, r.reward + (r.done ? 0.0 : gamma * v[r.next.index]));
            }
            next[s] = best;
        }
        v.swap(next);
    }
    QTable q(n, env.action_shape());
    for (std::size_t s = 0; s < n; ++s) {
        if (env.is_terminal(StateId{s})) continue;
        for (std::size_t a = 0; a < m; ++a) {
            const StepResult r = env.step(StateId{s}, ActionId{a});
            q.set(StateId{s}, ActionId{a}, r.reward + (r.done ? 0.0 : gamma * v[r.next.index]));
        }
    }
    return q;
}

// Discounted return of (s, a) followed by a fixed deterministic policy, summed
// exactly: the trajectory either ends at the goal or enters a cycle.
double evaluate_policy(const GridEnv& env, const std::vector<std::size_t>& policy, StateId s, ActionId a,
                       double gamma) {
    std::vector<double> rewards;
    std::map<std::size_t, std::size_t> first_seen;  // state -> index into rewards of its step
    StepResult r = env.step(s, a);
    rewards.push_back(r.reward);
    while (!r.done) {
        const StateId cur = r.next;
        if (auto it = first_seen.find(cur.index); it != first_seen.end()) {
            const std::size_t start = it->second;
            double prefix = 0.0, cycle = 0.0, g = 1.0;
            for (std::size_t i = 0; i < start; ++i, g *= gamma) prefix += g * rewards[i];
            for (std::size_t i = start; i < rewards.size(); ++i, g *= gamma) cycle += g * rewards[i];
            const double period = std::pow(gamma, static_cast<double>(rewards.size() - start));
            return prefix + cycle / (1.0 - period);
        }
        first_seen[cur.index] = rewards.size();
        r = env.step(cur, ActionId{policy[cur.index]});
        rewards.push_back(r.reward);
    }
    double total = 0.0, g = 1.0;
    for (double x : rewards) {
        total += g * x;
        g *= gamma;
    }
    return total;
}

} // namespace

TEST_CASE("value iteration at varkappa zero recovers the classical optimum") {
    const GridEnv env = make_cliff_walking();
    const FixedPointResult r = value_iterate(env, single(0.0), TargetKind::q_kappa, 1.0);
    REQUIRE(r.converged);
    CHECK(r.residual <= kDefaultFixedPointTol);
    CHECK(sup_norm_distance(r.q_star, classical_q_star(env, 1.0)) <= 1e-9);
    const auto row = r.q_star.row(env.start_state());
    CHECK(*std::max_element(row.begin(), row.end()) == doctest::Approx(-13.0).epsilon(1e-12));
    const GreedyPath path = greedy_path(env, r.q_star);
    CHECK(path.reached_goal);
    CHECK(path.total_reward == -13.0);
    CHECK(path.cells.size() == 14);
}

TEST_CASE("pure minimizer fixed point matches exact evaluation of the argmin policy") {
    const GridEnv env = make_cliff_walking();
    const double gamma = 0.9;
    const FixedPointResult r = value_iterate(env, single(1.0), TargetKind::q_kappa, gamma);
    REQUIRE(r.converged);
    std::vector<std::size_t> policy(env.num_states(), 0);
    for (std::size_t s = 0; s < env.num_states(); ++s) {
        const auto row = r.q_star.row(StateId{s});
        policy[s] = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
    }
    for (std::size_t s = 0; s < env.num_states(); ++s) {
        if (env.is_terminal(StateId{s})) continue;
        for (std::size_t a = 0; a < 4; ++a)
            CHECK(r.q_star(StateId{s}, ActionId{a}) ==
                  doctest::Approx(evaluate_policy(env, policy, StateId{s}, ActionId{a}, gamma)).epsilon(1e-8));
    }
}

TEST_CASE("gamma one is refused when a full-control minimizer can loop forever") {
    const GridEnv env = make_cliff_walking();
    CHECK(has_goal_avoiding_cycle(env));
    CHECK_THROWS_AS(value_iterate(env, single(1.0), TargetKind::q_kappa, 1.0), std::invalid_argument);
    CHECK_NOTHROW(value_iterate(env, single(0.5), TargetKind::q_kappa, 1.0));
    CHECK_THROWS_AS(value_iterate(env, single(0.1), TargetKind::q_kappa, 1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("fixed points are fixed under one more application") {
    const GridEnv cliff = make_cliff_walking();
    const GridEnv puddle = make_puddle_world();
    struct Case {
        const GridEnv* env;
        TargetKind kind;
        KappaSpec spec;
        double epsilon;
    };
    for (const Case& c : {Case{&cliff, TargetKind::q_kappa, single(0.1), 0.0},
                          Case{&cliff, TargetKind::esarsa_kappa, single(0.1), 0.1},
                          Case{&cliff, TargetKind::esarsa, single(0.0), 0.1},
                          Case{&puddle, TargetKind::ma_q_kappa, two(0.3), 0.0},
                          Case{&puddle, TargetKind::ma_esarsa_kappa, two(0.1), 0.1}}) {
        const FixedPointResult r = value_iterate(*c.env, c.spec, c.kind, 1.0, c.epsilon);
        REQUIRE(r.converged);
        CHECK(sup_norm_distance(apply_gbellman(r.q_star, *c.env, c.kind, c.spec, 1.0, c.epsilon), r.q_star) <= 1e-9);
        CHECK(r.residual_history.size() == r.iterations);
    }
}

TEST_CASE("iteration budget exhaustion is reported") {
    const GridEnv env = make_cliff_walking();
    const FixedPointResult r = value_iterate(env, single(0.1), TargetKind::q_kappa, 1.0, 0.0, 1e-10, 3);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK(r.residual > 1e-10);
}

TEST_CASE("robust values fall as varkappa grows") {
    const GridEnv env = make_cliff_walking();
    double prev = 1.0;
    for (double k : {0.0, 0.05, 0.1, 0.3, 0.6}) {
        const QTable q = value_iterate(env, single(k), TargetKind::q_kappa, 1.0).q_star;
        const auto row = q.row(env.start_state());
        const double v = *std::max_element(row.begin(), row.end());
        CHECK(v <= prev + 1e-9);
        prev = v;
    }
}

TEST_CASE("cliff robust path moves away from the edge") {
    const GridEnv env = make_cliff_walking();
    const QTable q0 = value_iterate(env, single(0.0), TargetKind::q_kappa, 1.0).q_star;
    const QTable q3 = value_iterate(env, single(0.3), TargetKind::q_kappa, 1.0).q_star;
    // the start cell touches the cliff, so the margin is 1 either way; the detour shows in the length
    const GreedyPath p0 = greedy_path(env, q0), p3 = greedy_path(env, q3);
    CHECK(p0.cells.size() == 14);
    CHECK(p3.reached_goal);
    CHECK(p3.cells.size() > 14);
}

TEST_CASE("shortest paths") {
    CHECK(bfs_shortest_path(load_map(kCliffMapText), ActionModel::four_moves()).length == 13);
    CHECK(bfs_shortest_path(load_map("SG\n..\n"), ActionModel::four_moves()).length == 1);
    const PathResult puddle = bfs_shortest_path(load_map(kPuddleMapText), ActionModel::puddle_joint());
    CHECK(puddle.length == 9);
    CHECK(puddle.path.front() == Cell{0, 0});
    CHECK(puddle.path.back() == Cell{9, 9});
    CHECK(puddle.path.size() == puddle.length + 1);
}

TEST_CASE("safety margins") {
    const GridMap cliff = load_map(kCliffMapText);
    std::vector<Cell> edge{{3, 0}}, top{{3, 0}}, through{{3, 0}, {3, 1}};
    for (int c = 0; c < 12; ++c) edge.push_back({2, c});
    edge.push_back({3, 11});
    for (int r = 2; r >= 0; --r) top.push_back({r, 0});
    for (int c = 1; c < 12; ++c) top.push_back({0, c});
    CHECK(path_safety_margin(cliff, edge) == 1);
    CHECK(path_safety_margin(cliff, {{0, 0}, {0, 1}, {0, 2}}) == 3);
    CHECK(path_safety_margin(cliff, through) == 0);
    CHECK(path_safety_margin(load_map("S.\n.G\n"), {{0, 0}, {1, 1}}) == 2);
    CHECK_THROWS_AS(path_safety_margin(cliff, {}), std::invalid_argument);
}
