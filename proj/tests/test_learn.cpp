#include <doctest.h>

#include <cmath>

#include "robusttd/envs.hpp"
#include "robusttd/learn.hpp"
#include "robusttd/oracle.hpp"
#include "test_util.hpp"

using namespace robusttd;

namespace {

KappaSpec single(double k) {
    KappaSpec s;
    s.varkappa = k;
    return s;
}

LearnerConfig config(TargetKind target, double k, std::size_t episodes, std::uint64_t seed) {
    LearnerConfig cfg;
    cfg.target = target;
    cfg.kappa = single(k);
    if (is_multi_agent(target)) cfg.kappa.split = AttackSplit::split_evenly_two;
    cfg.episodes = episodes;
    cfg.seed = seed;
    return cfg;
}

QTable cliff_optimum(const GridEnv& env) {
    return value_iterate(env, KappaSpec{}, TargetKind::q_learning, 1.0).q_star;
}

} // namespace

TEST_CASE("td_update examples") {
    // s0 -> s1 where q[s1] = [2, -1, 5] gives V = 4.4 at varkappa 0.1
    QTable q = test::table_from({{0, 0, 0}, {2, -1, 5}});
    LearnerConfig cfg = config(TargetKind::q_kappa, 0.1, 0, 0);
    cfg.alpha = 0.1;
    td_update(q, {StateId{0}, ActionId{1}, -1.0, StateId{1}, false}, cfg);
    CHECK(q(StateId{0}, ActionId{1}) == doctest::Approx(0.34).epsilon(1e-14));

    QTable same = test::table_from({{0, 3, 0}, {2, -1, 5}});
    const QTable before = same;
    cfg.alpha = 0.0;
    td_update(same, {StateId{0}, ActionId{1}, -1.0, StateId{1}, false}, cfg);
    CHECK(same == before);

    QTable done = test::table_from({{0, 0}, {7, 9}});
    cfg.alpha = 0.5;
    td_update(done, {StateId{0}, ActionId{0}, -1.0, StateId{1}, true}, cfg);
    CHECK(done(StateId{0}, ActionId{0}) == -0.5);
}

TEST_CASE("td_update touches exactly one entry") {
    Rng rng(3);
    const TargetKind kinds[] = {TargetKind::q_kappa, TargetKind::esarsa_kappa, TargetKind::q_learning,
                                TargetKind::esarsa, TargetKind::sarsa};
    for (int trial = 0; trial < 200; ++trial) {
        QTable q = test::random_table(4, ActionShape::single(3), rng);
        const QTable before = q;
        const TargetKind kind = kinds[trial % 5];
        LearnerConfig cfg = config(kind, rng.uniform(), 0, 0);
        const Transition t{StateId{rng.uniform_index(4)}, ActionId{rng.uniform_index(3)}, -1.0,
                           StateId{rng.uniform_index(4)}, false};
        td_update(q, t, cfg, ActionId{rng.uniform_index(3)});
        int changed = 0;
        for (std::size_t s = 0; s < 4; ++s)
            for (std::size_t a = 0; a < 3; ++a) {
                const bool diff = q(StateId{s}, ActionId{a}) != before(StateId{s}, ActionId{a});
                changed += diff;
                if (diff) CHECK((StateId{s} == t.state && ActionId{a} == t.action));
            }
        CHECK(changed <= 1);
    }
}

TEST_CASE("sarsa needs the next action") {
    QTable q = test::table_from({{0, 0}, {1, 2}});
    LearnerConfig cfg = config(TargetKind::sarsa, 0.0, 0, 0);
    CHECK_THROWS_AS(td_update(q, {StateId{0}, ActionId{0}, -1.0, StateId{1}, false}, cfg), std::invalid_argument);
    cfg.alpha = 1.0;
    td_update(q, {StateId{0}, ActionId{0}, -1.0, StateId{1}, false}, cfg, ActionId{0});
    CHECK(q(StateId{0}, ActionId{0}) == 0.0);
}

TEST_CASE("perturbation examples") {
    Rng rng(8);
    const QTable q = test::table_from({{2, -1, 5}});
    for (int i = 0; i < 100; ++i) {
        CHECK(perturb_action(ActionId{2}, q, StateId{0}, PerturbationSpec::adversarial(0.0), rng) == ActionId{2});
        CHECK(perturb_action(ActionId{2}, q, StateId{0}, PerturbationSpec::none(), rng) == ActionId{2});
        CHECK(perturb_action(ActionId{2}, q, StateId{0}, PerturbationSpec::adversarial(1.0), rng) == ActionId{1});
    }

    const QTable four = test::table_from({{0, 1, 2, 3}});
    int kept = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        kept += perturb_action(ActionId{2}, four, StateId{0}, PerturbationSpec::stochastic(0.1), rng) == ActionId{2};
    CHECK(std::abs(kept / static_cast<double>(n) - 0.925) <= 0.005);

    CHECK_THROWS_AS(PerturbationSpec::adversarial(1.5).validate(), std::invalid_argument);
    CHECK(parse_perturbation_kind("adversarial") == PerturbationKind::adversarial);
}

TEST_CASE("joint adversarial takeover") {
    // row maxima (4, 3): attacking agent 1 forces a1 = 1 and agent 2 answers with a2 = 1;
    // column maxima (4, 3): attacking agent 2 forces a2 = 1 and agent 1 answers with a1 = 1.
    const QTable q = test::joint_from({{4, 0}, {1, 3}});
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const ActionId a = perturb_action(ActionId{0}, q, StateId{0}, PerturbationSpec::adversarial(1.0), rng);
        CHECK(a == ActionId{3});
    }
    const QTable r = test::joint_from({{5, 0}, {6, 1}});
    int which[4] = {0, 0, 0, 0};
    for (int i = 0; i < 4000; ++i)
        ++which[perturb_action(ActionId{0}, r, StateId{0}, PerturbationSpec::adversarial(1.0), rng).index];
    // agent 1 attacked: row maxima (5, 6) -> a1 = 0, answer a2 = 0; agent 2 attacked: column maxima (6, 1) -> a2 = 1, answer a1 = 1
    CHECK(which[1] == 0);
    CHECK(which[2] == 0);
    CHECK(std::abs(which[0] / 4000.0 - 0.5) <= 0.03);
}

TEST_CASE("joint behaviour policy") {
    const QTable q = test::joint_from({{4, 0}, {1, 3}});
    Rng rng(6);
    for (int i = 0; i < 100; ++i) CHECK(joint_epsilon_greedy(q, StateId{0}, 0.0, 0.0, rng) == ActionId{0});
    int counts[4] = {0, 0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[joint_epsilon_greedy(q, StateId{0}, 1.0, 1.0, rng).index];
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 0.25) <= 0.01);
}

TEST_CASE("greedy rollout of the optimal cliff table") {
    const GridEnv env = make_cliff_walking();
    QTable q = cliff_optimum(env);
    Rng rng(1);
    LearnerConfig cfg = config(TargetKind::q_learning, 0.0, 0, 0);
    cfg.epsilon = 0.0;
    const EpisodeTrace trace = run_episode(env, q, cfg, PerturbationSpec::none(), rng);
    CHECK(trace.ret == -13.0);
    CHECK(trace.steps == 13);
    CHECK_FALSE(trace.capped);
}

TEST_CASE("a looping attacker hits the step cap") {
    const GridEnv env = make_cliff_walking();
    QTable q = qtable_new(env.num_states(), env.action_shape());
    q.set(env.start_state(), ActionId{3}, -1.0);  // right from the start is the cliff
    LearnerConfig cfg = config(TargetKind::q_learning, 0.0, 0, 0);
    cfg.step_cap = 200;
    Rng rng(4);
    const EpisodeTrace trace = run_episode(env, q, cfg, PerturbationSpec::adversarial(1.0), rng);
    CHECK(trace.capped);
    CHECK(trace.steps == 200);
    CHECK(trace.ret == -100.0 * 200);
}

TEST_CASE("train with zero episodes returns the initial table") {
    const GridEnv env = make_cliff_walking();
    const TrainResult r = train(env, config(TargetKind::q_kappa, 0.1, 0, 1), PerturbationSpec::none());
    CHECK(r.returns.empty());
    CHECK(r.q == qtable_new(env.num_states(), env.action_shape()));
}

TEST_CASE("varkappa zero reproduces the baselines update for update") {
    const GridEnv cliff = make_cliff_walking();
    const GridEnv puddle = make_puddle_world();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const TrainResult q0 = train(cliff, config(TargetKind::q_kappa, 0.0, 300, seed), PerturbationSpec::none());
        const TrainResult ql = train(cliff, config(TargetKind::q_learning, 0.0, 300, seed), PerturbationSpec::none());
        CHECK(q0.q == ql.q);
        CHECK(q0.returns == ql.returns);
        const TrainResult e0 =
            train(cliff, config(TargetKind::esarsa_kappa, 0.0, 300, seed), PerturbationSpec::adversarial(0.1));
        const TrainResult es =
            train(cliff, config(TargetKind::esarsa, 0.0, 300, seed), PerturbationSpec::adversarial(0.1));
        CHECK(e0.q == es.q);
        const TrainResult m0 = train(puddle, config(TargetKind::ma_q_kappa, 0.0, 100, seed), PerturbationSpec::none());
        const TrainResult mq = train(puddle, config(TargetKind::q_learning, 0.0, 100, seed), PerturbationSpec::none());
        CHECK(m0.q == mq.q);
    }
}

TEST_CASE("training is reproducible from the seed") {
    const GridEnv env = make_cliff_walking();
    const LearnerConfig cfg = config(TargetKind::esarsa_kappa, 0.2, 200, 77);
    const TrainResult a = train(env, cfg, PerturbationSpec::stochastic(0.1));
    const TrainResult b = train(env, cfg, PerturbationSpec::stochastic(0.1));
    CHECK(a.q == b.q);
    CHECK(a.returns == b.returns);
    LearnerConfig other = cfg;
    other.seed = 78;
    CHECK_FALSE(train(env, other, PerturbationSpec::stochastic(0.1)).q == a.q);
}

TEST_CASE("step budget truncates training") {
    const GridEnv env = make_cliff_walking();
    LearnerConfig cfg = config(TargetKind::q_kappa, 0.1, 1'000'000, 5);
    cfg.max_steps = 5000;
    const TrainResult r = train(env, cfg, PerturbationSpec::none());
    CHECK(r.total_steps == 5000);
    CHECK(r.returns.size() < 1'000'000);
}

TEST_CASE("Q-learning on cliff walking learns the shortest path") {
    const GridEnv env = make_cliff_walking();
    const TrainResult r = train(env, config(TargetKind::q_learning, 0.0, 100'000, 11), PerturbationSpec::none());
    const GreedyPath path = greedy_path(env, r.q);
    CHECK(path.reached_goal);
    CHECK(path.total_reward == -13.0);
}

TEST_CASE("evaluation is side-effect free and deterministic without noise") {
    const GridEnv env = make_cliff_walking();
    const QTable q = cliff_optimum(env);
    const QTable copy = q;
    Rng rng(9);
    const RunStats s = evaluate(env, q, 0.0, PerturbationSpec::none(), 20, rng);
    CHECK(s.mean == -13.0);
    CHECK(s.ci95_half_width == 0.0);
    CHECK(q == copy);
    const RunStats one = evaluate(env, q, 0.0, PerturbationSpec::none(), 1, rng);
    CHECK(std::isnan(one.ci95_half_width));
    CHECK_THROWS_AS(evaluate(env, q, 0.0, PerturbationSpec::none(), 0, rng), std::invalid_argument);
}

TEST_CASE("evaluation return falls as the attack grows") {
    // a fixed table and common random numbers per p
    const GridEnv env = make_cliff_walking();
    const QTable q = cliff_optimum(env);
    double prev = 0.0;
    for (double p : {0.0, 0.05, 0.1, 0.2, 0.4}) {
        Rng rng(10);
        const double mean = evaluate(env, q, 0.0, PerturbationSpec::adversarial(p), 2000, rng).mean;
        CHECK(mean <= prev + 1e-9);
        prev = mean;
    }
}

TEST_CASE("decaying schedules") {
    const GridEnv env = make_cliff_walking();
    LearnerConfig cfg = config(TargetKind::q_kappa, 0.1, 0, 0);
    cfg.kappa_decay_steps = 100.0;
    Learner learner(env, cfg, PerturbationSpec::none());
    CHECK(learner.current_varkappa() == doctest::Approx(0.1));
    cfg.episodes = 1;
    Learner runner(env, cfg, PerturbationSpec::none());
    const EpisodeTrace t = runner.run_episode();
    CHECK(runner.current_varkappa() == doctest::Approx(0.1 / (1.0 + static_cast<double>(t.steps) / 100.0)));

    LearnerConfig bad = cfg;
    bad.alpha = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
