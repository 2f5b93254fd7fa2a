#include "robusttd/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace robusttd {

void PerturbationSpec::validate() const { check_probability(p, "perturbation probability"); }

std::string_view to_string(PerturbationKind kind) {
    switch (kind) {
    case PerturbationKind::none: return "none";
    case PerturbationKind::stochastic: return "stochastic";
    case PerturbationKind::adversarial: return "adversarial";
    }
    return "unknown";
}

PerturbationKind parse_perturbation_kind(std::string_view name) {
    for (auto k : {PerturbationKind::none, PerturbationKind::stochastic, PerturbationKind::adversarial})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown perturbation '" + std::string(name) + "'");
}

void LearnerConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0) && alpha_schedule == AlphaSchedule::constant)
        throw std::invalid_argument("alpha must lie in (0, 1]");
    check_probability(epsilon, "epsilon");
    check_probability(gamma, "gamma");
    kappa.validate();
    if (alpha_decay_exponent <= 0.5 || alpha_decay_exponent > 1.0)
        throw std::invalid_argument("alpha decay exponent must lie in (0.5, 1] for Robbins-Monro step sizes");
    if (kappa_decay_steps < 0.0) throw std::invalid_argument("kappa decay horizon must be nonnegative");
    if (step_cap == 0) throw std::invalid_argument("step cap must be positive");
}

namespace {

// argmax / argmin over row[start + k * stride], k < count; ties uniform.
template <class Better>
std::size_t strided_extreme(std::span<const double> row, std::size_t start, std::size_t stride, std::size_t count,
                            Rng& rng, Better better) {
    std::size_t best = 0;
    std::size_t ties = 1;
    for (std::size_t k = 1; k < count; ++k) {
        const double v = row[start + k * stride];
        const double b = row[start + best * stride];
        if (better(v, b)) {
            best = k;
            ties = 1;
        } else if (v == b) {
            ++ties;
        }
    }
    if (ties == 1) return best;
    std::size_t pick = rng.uniform_index(ties);
    const double b = row[start + best * stride];
    for (std::size_t k = 0; k < count; ++k) {
        if (row[start + k * stride] == b) {
            if (pick == 0) return k;
            --pick;
        }
    }
    return best;
}

const auto kGreater = [](double a, double b) { return a > b; };
const auto kLess = [](double a, double b) { return a < b; };

} // namespace

ActionId joint_epsilon_greedy(const QTable& q, StateId s, double epsilon1, double epsilon2, Rng& rng) {
    const ActionShape& shape = q.shape();
    if (!shape.is_joint()) throw std::invalid_argument("joint_epsilon_greedy needs a joint table");
    check_probability(epsilon1, "epsilon1");
    check_probability(epsilon2, "epsilon2");
    const bool explore1 = epsilon1 > 0.0 && rng.uniform() < epsilon1;
    const bool explore2 = epsilon2 > 0.0 && rng.uniform() < epsilon2;
    const std::size_t n1 = shape.agent1();
    const std::size_t n2 = shape.agent2();
    auto row = q.row(s);
    if (!explore1 && !explore2) return greedy_action(q, s, rng);
    std::size_t a1 = 0;
    std::size_t a2 = 0;
    if (explore1 && explore2) {
        a1 = rng.uniform_index(n1);
        a2 = rng.uniform_index(n2);
    } else if (explore1) {
        a1 = rng.uniform_index(n1);
        a2 = strided_extreme(row, a1 * n2, 1, n2, rng, kGreater);
    } else {
        a2 = rng.uniform_index(n2);
        a1 = strided_extreme(row, a2, n2, n1, rng, kGreater);
    }
    return ActionId{a1 * n2 + a2};
}

ActionId behaviour_action(const QTable& q, StateId s, double epsilon, Rng& rng) {
    if (q.shape().is_joint()) return joint_epsilon_greedy(q, s, epsilon, epsilon, rng);
    return epsilon_greedy(q, s, epsilon, rng);
}

ActionId perturb_action(ActionId intended, const QTable& q, StateId s, const PerturbationSpec& pert, Rng& rng) {
    if (pert.kind == PerturbationKind::none || pert.p <= 0.0) return intended;
    if (!(rng.uniform() < pert.p)) return intended;
    const ActionShape& shape = q.shape();
    if (pert.kind == PerturbationKind::stochastic) return ActionId{rng.uniform_index(shape.size())};
    if (!shape.is_joint()) return min_action(q, s, rng);

    const std::size_t n1 = shape.agent1();
    const std::size_t n2 = shape.agent2();
    auto row = q.row(s);
    if (rng.uniform_index(2) == 0) {
        std::vector<double> best(n1);
        for (std::size_t a1 = 0; a1 < n1; ++a1) best[a1] = *std::max_element(row.begin() + a1 * n2, row.begin() + (a1 + 1) * n2);
        const std::size_t a1 = strided_extreme(best, 0, 1, n1, rng, kLess);
        const std::size_t a2 = strided_extreme(row, a1 * n2, 1, n2, rng, kGreater);
        return ActionId{a1 * n2 + a2};
    }
    std::vector<double> best(n2, -std::numeric_limits<double>::infinity());
    for (std::size_t a1 = 0; a1 < n1; ++a1)
        for (std::size_t a2 = 0; a2 < n2; ++a2) best[a2] = std::max(best[a2], row[a1 * n2 + a2]);
    const std::size_t a2 = strided_extreme(best, 0, 1, n2, rng, kLess);
    const std::size_t a1 = strided_extreme(row, a2, n2, n1, rng, kGreater);
    return ActionId{a1 * n2 + a2};
}

void td_update(QTable& q, const Transition& t, TargetKind target, double alpha, double gamma, double epsilon,
               const KappaSpec& spec, std::optional<ActionId> next_action) {
    const double bootstrap = t.done ? 0.0 : target_value(target, q, t.next, epsilon, spec, next_action);
    const double old = q(t.state, t.action);
    q.set(t.state, t.action, old + alpha * (t.reward + gamma * bootstrap - old));
}

void td_update(QTable& q, const Transition& t, const LearnerConfig& cfg, std::optional<ActionId> next_action) {
    td_update(q, t, cfg.target, cfg.alpha, cfg.gamma, cfg.epsilon, cfg.kappa, next_action);
}

namespace {

struct EpisodeCounters {
    std::vector<std::uint64_t>* visits = nullptr;
    std::vector<std::uint64_t>* state_visits = nullptr;
    std::size_t* total_steps = nullptr;
};

EpisodeTrace episode_loop(const TabularEnv& env, QTable& q, const LearnerConfig& cfg, const PerturbationSpec& pert,
                          Rng& rng, EpisodeCounters counters) {
    const bool decay_alpha = cfg.alpha_schedule == AlphaSchedule::visit_decay;
    const bool decay_kappa = cfg.kappa_decay_steps > 0.0;
    const bool sarsa = cfg.target == TargetKind::sarsa;
    const std::size_t width = q.num_actions();
    KappaSpec spec = cfg.kappa;

    EpisodeTrace trace;
    StateId s = env.reset();
    ActionId intended = behaviour_action(q, s, cfg.epsilon, rng);
    for (;;) {
        if (trace.steps >= cfg.step_cap) {
            trace.capped = true;
            break;
        }
        if (cfg.max_steps > 0 && counters.total_steps && *counters.total_steps >= cfg.max_steps) {
            trace.truncated = true;
            break;
        }
        const ActionId executed = perturb_action(intended, q, s, pert, rng);
        const StepResult r = env.step(s, executed);
        trace.ret += r.reward;
        ++trace.steps;

        double alpha = cfg.alpha;
        if (counters.visits) {
            auto& n = (*counters.visits)[s.index * width + executed.index];
            if (decay_alpha) alpha = std::pow(1.0 + static_cast<double>(n), -cfg.alpha_decay_exponent);
            ++n;
        }
        if (counters.state_visits) ++(*counters.state_visits)[s.index];
        if (decay_kappa && counters.total_steps)
            spec.varkappa = cfg.kappa.varkappa / (1.0 + static_cast<double>(*counters.total_steps) / cfg.kappa_decay_steps);
        if (counters.total_steps) ++*counters.total_steps;

        std::optional<ActionId> next_intended;
        if (!r.done) next_intended = behaviour_action(q, r.next, cfg.epsilon, rng);
        td_update(q, Transition{s, executed, r.reward, r.next, r.done}, cfg.target, alpha, cfg.gamma, cfg.epsilon,
                  spec, sarsa ? next_intended : std::nullopt);
        if (r.done) break;
        s = r.next;
        intended = *next_intended;
    }
    return trace;
}

} // namespace

Learner::Learner(const TabularEnv& env, LearnerConfig cfg, PerturbationSpec pert)
    : Learner(env, std::move(cfg), pert, QTable(env.num_states(), env.action_shape(), 0.0)) {}

Learner::Learner(const TabularEnv& env, LearnerConfig cfg, PerturbationSpec pert, QTable initial)
    : env_(env), cfg_(std::move(cfg)), pert_(pert), q_(std::move(initial)), rng_(cfg_.seed) {
    cfg_.validate();
    pert_.validate();
    check_target_shape(cfg_.target, env.action_shape(), cfg_.kappa);
    if (q_.num_states() != env.num_states() || !(q_.shape() == env.action_shape()))
        throw std::invalid_argument("table shape does not match environment");
    visits_.assign(q_.num_states() * q_.num_actions(), 0);
    state_visits_.assign(q_.num_states(), 0);
}

EpisodeTrace Learner::run_episode() {
    return episode_loop(env_, q_, cfg_, pert_, rng_, EpisodeCounters{&visits_, &state_visits_, &total_steps_});
}

double Learner::current_varkappa() const {
    if (cfg_.kappa_decay_steps <= 0.0) return cfg_.kappa.varkappa;
    return cfg_.kappa.varkappa / (1.0 + static_cast<double>(total_steps_) / cfg_.kappa_decay_steps);
}

EpisodeTrace run_episode(const TabularEnv& env, QTable& q, const LearnerConfig& cfg, const PerturbationSpec& pert,
                         Rng& rng) {
    if (cfg.alpha_schedule != AlphaSchedule::constant || cfg.kappa_decay_steps > 0.0 || cfg.max_steps > 0)
        throw std::invalid_argument("run_episode uses fixed parameters; use Learner for schedules");
    cfg.validate();
    pert.validate();
    check_target_shape(cfg.target, q.shape(), cfg.kappa);
    return episode_loop(env, q, cfg, pert, rng, EpisodeCounters{});
}

TrainResult train(const TabularEnv& env, const LearnerConfig& cfg, const PerturbationSpec& pert) {
    Learner learner(env, cfg, pert);
    TrainResult out{QTable(env.num_states(), env.action_shape()), {}, {}, {}, {}, 0};
    if (cfg.max_steps == 0) {
        out.returns.reserve(cfg.episodes);
        out.traces.reserve(cfg.episodes);
    }
    for (std::size_t e = 0; e < cfg.episodes && !learner.budget_exhausted(); ++e) {
        const EpisodeTrace t = learner.run_episode();
        out.returns.push_back(t.ret);
        out.traces.push_back(t);
    }
    out.total_steps = learner.total_steps();
    out.state_visits = learner.state_visit_counts();
    out.visits.resize(env.num_states() * env.action_shape().size());
    for (std::size_t s = 0; s < env.num_states(); ++s)
        for (std::size_t a = 0; a < env.action_shape().size(); ++a)
            out.visits[s * env.action_shape().size() + a] = learner.visits(StateId{s}, ActionId{a});
    out.q = learner.release_table();
    return out;
}

RunStats evaluate(const TabularEnv& env, const QTable& q, double epsilon, const PerturbationSpec& pert,
                  std::size_t trials, Rng& rng, std::size_t step_cap) {
    if (trials == 0) throw std::invalid_argument("evaluate needs at least one trial");
    check_probability(epsilon, "epsilon");
    pert.validate();
    std::vector<double> returns;
    returns.reserve(trials);
    std::size_t capped = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        StateId s = env.reset();
        double ret = 0.0;
        std::size_t steps = 0;
        for (;;) {
            if (steps >= step_cap) {
                ++capped;
                break;
            }
            const ActionId intended = behaviour_action(q, s, epsilon, rng);
            const StepResult r = env.step(s, perturb_action(intended, q, s, pert, rng));
            ret += r.reward;
            ++steps;
            if (r.done) break;
            s = r.next;
        }
        returns.push_back(ret);
    }
    RunStats stats = stats_aggregate(returns);
    stats.capped = capped;
    return stats;
}

} // namespace robusttd
