#include "robusttd/kappa.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace robusttd {

double KappaSpec::varkappa_at(StateId s) const {
    if (per_state_varkappa) {
        if (s.index >= per_state_varkappa->size()) throw std::out_of_range("per-state varkappa too short");
        return (*per_state_varkappa)[s.index];
    }
    return varkappa;
}

void KappaSpec::validate() const {
    check_probability(varkappa, "varkappa");
    if (per_state_varkappa)
        for (double k : *per_state_varkappa) check_probability(k, "per-state varkappa");
}

std::string_view to_string(TargetKind kind) {
    switch (kind) {
    case TargetKind::q_kappa: return "q_kappa";
    case TargetKind::esarsa_kappa: return "esarsa_kappa";
    case TargetKind::q_learning: return "q_learning";
    case TargetKind::sarsa: return "sarsa";
    case TargetKind::esarsa: return "esarsa";
    case TargetKind::ma_q_kappa: return "ma_q_kappa";
    case TargetKind::ma_esarsa_kappa: return "ma_esarsa_kappa";
    }
    return "unknown";
}

TargetKind parse_target_kind(std::string_view name) {
    for (auto k : {TargetKind::q_kappa, TargetKind::esarsa_kappa, TargetKind::q_learning, TargetKind::sarsa,
                   TargetKind::esarsa, TargetKind::ma_q_kappa, TargetKind::ma_esarsa_kappa})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

bool is_multi_agent(TargetKind kind) { return kind == TargetKind::ma_q_kappa || kind == TargetKind::ma_esarsa_kappa; }

bool uses_kappa(TargetKind kind) {
    return kind == TargetKind::q_kappa || kind == TargetKind::esarsa_kappa || is_multi_agent(kind);
}

double row_max(std::span<const double> row) { return *std::max_element(row.begin(), row.end()); }

double row_min(std::span<const double> row) { return *std::min_element(row.begin(), row.end()); }

double row_mean(std::span<const double> row) {
    return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

double row_expected(std::span<const double> row, double epsilon) {
    return (1.0 - epsilon) * row_max(row) + epsilon * row_mean(row);
}

namespace {

void check_joint(std::span<const double> row, std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0 || row.size() != n1 * n2) throw std::invalid_argument("joint row does not match shape");
}

// max over a1 and mean over a1 of column a2.
double column_max(std::span<const double> row, std::size_t n1, std::size_t n2, std::size_t a2) {
    double best = row[a2];
    for (std::size_t a1 = 1; a1 < n1; ++a1) best = std::max(best, row[a1 * n2 + a2]);
    return best;
}

double column_mean(std::span<const double> row, std::size_t n1, std::size_t n2, std::size_t a2) {
    double total = 0.0;
    for (std::size_t a1 = 0; a1 < n1; ++a1) total += row[a1 * n2 + a2];
    return total / static_cast<double>(n1);
}

double weighted(double kappa, double focal, double attacked) { return (1.0 - kappa) * focal + kappa * attacked; }

double weighted_split(double kappa, double focal, double attacked1, double attacked2) {
    const double half = kappa / 2.0;
    return (1.0 - kappa) * focal + half * attacked1 + half * attacked2;
}

} // namespace

double joint_max(std::span<const double> row, std::size_t n1, std::size_t n2) {
    check_joint(row, n1, n2);
    return row_max(row);
}

double joint_min_agent1(std::span<const double> row, std::size_t n1, std::size_t n2, double epsilon2,
                        Attacker attacker) {
    check_joint(row, n1, n2);
    double worst = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t a1 = 0; a1 < n1; ++a1) {
        const double response = row_expected(row.subspan(a1 * n2, n2), epsilon2);
        worst = std::min(worst, response);
        total += response;
    }
    return attacker == Attacker::minimizer ? worst : total / static_cast<double>(n1);
}

double joint_min_agent2(std::span<const double> row, std::size_t n1, std::size_t n2, double epsilon1,
                        Attacker attacker) {
    check_joint(row, n1, n2);
    double worst = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t a2 = 0; a2 < n2; ++a2) {
        const double response =
            (1.0 - epsilon1) * column_max(row, n1, n2, a2) + epsilon1 * column_mean(row, n1, n2, a2);
        worst = std::min(worst, response);
        total += response;
    }
    return attacker == Attacker::minimizer ? worst : total / static_cast<double>(n2);
}

double joint_expected(std::span<const double> row, std::size_t n1, std::size_t n2, double epsilon1,
                      double epsilon2) {
    check_joint(row, n1, n2);
    const double both_greedy = row_max(row);
    // Agent 1 explores uniformly, agent 2 best-responds (and vice versa).
    double agent1_explores = 0.0;
    for (std::size_t a1 = 0; a1 < n1; ++a1) agent1_explores += row_max(row.subspan(a1 * n2, n2));
    agent1_explores /= static_cast<double>(n1);
    double agent2_explores = 0.0;
    for (std::size_t a2 = 0; a2 < n2; ++a2) agent2_explores += column_max(row, n1, n2, a2);
    agent2_explores /= static_cast<double>(n2);
    const double both_explore = row_mean(row);
    return (1.0 - epsilon1) * (1.0 - epsilon2) * both_greedy + epsilon1 * (1.0 - epsilon2) * agent1_explores +
           (1.0 - epsilon1) * epsilon2 * agent2_explores + epsilon1 * epsilon2 * both_explore;
}

namespace {

double attacked_value(std::span<const double> row, Attacker attacker) {
    return attacker == Attacker::minimizer ? row_min(row) : row_mean(row);
}

void require_single(const QTable& q) {
    if (q.shape().is_joint()) throw std::invalid_argument("single-agent target on a joint table");
}

void require_joint(const QTable& q) {
    if (!q.shape().is_joint()) throw std::invalid_argument("multi-agent target on a single-agent table");
}

} // namespace

double v_kappa_q(const QTable& q, StateId s, const KappaSpec& spec) {
    require_single(q);
    auto row = q.row(s);
    return weighted(spec.varkappa_at(s), row_max(row), attacked_value(row, spec.attacker));
}

double v_kappa_esarsa(const QTable& q, StateId s, double epsilon, const KappaSpec& spec) {
    require_single(q);
    auto row = q.row(s);
    return weighted(spec.varkappa_at(s), row_expected(row, epsilon), attacked_value(row, spec.attacker));
}

double v_kappa_ma_q(const QTable& q, StateId s, const KappaSpec& spec) {
    require_joint(q);
    auto row = q.row(s);
    const std::size_t n1 = q.shape().agent1();
    const std::size_t n2 = q.shape().agent2();
    return weighted_split(spec.varkappa_at(s), joint_max(row, n1, n2),
                          joint_min_agent1(row, n1, n2, 0.0, spec.attacker),
                          joint_min_agent2(row, n1, n2, 0.0, spec.attacker));
}

double v_kappa_ma_esarsa(const QTable& q, StateId s, double epsilon1, double epsilon2, const KappaSpec& spec) {
    require_joint(q);
    auto row = q.row(s);
    const std::size_t n1 = q.shape().agent1();
    const std::size_t n2 = q.shape().agent2();
    return weighted_split(spec.varkappa_at(s), joint_expected(row, n1, n2, epsilon1, epsilon2),
                          joint_min_agent1(row, n1, n2, epsilon2, spec.attacker),
                          joint_min_agent2(row, n1, n2, epsilon1, spec.attacker));
}

double v_max(const QTable& q, StateId s) { return row_max(q.row(s)); }

double v_expected(const QTable& q, StateId s, double epsilon) {
    auto row = q.row(s);
    if (q.shape().is_joint()) return joint_expected(row, q.shape().agent1(), q.shape().agent2(), epsilon, epsilon);
    return row_expected(row, epsilon);
}

double target_value(TargetKind kind, const QTable& q, StateId s, double epsilon, const KappaSpec& spec,
                    std::optional<ActionId> next_action) {
    switch (kind) {
    case TargetKind::q_kappa: return v_kappa_q(q, s, spec);
    case TargetKind::esarsa_kappa: return v_kappa_esarsa(q, s, epsilon, spec);
    case TargetKind::q_learning: return v_max(q, s);
    case TargetKind::esarsa: return v_expected(q, s, epsilon);
    case TargetKind::sarsa:
        if (!next_action) throw std::invalid_argument("sarsa target needs the next action");
        return q(s, *next_action);
    case TargetKind::ma_q_kappa: return v_kappa_ma_q(q, s, spec);
    case TargetKind::ma_esarsa_kappa: return v_kappa_ma_esarsa(q, s, epsilon, epsilon, spec);
    }
    throw std::invalid_argument("unknown target kind");
}

void check_target_shape(TargetKind kind, const ActionShape& shape, const KappaSpec& spec) {
    spec.validate();
    if (is_multi_agent(kind)) {
        if (!shape.is_joint()) throw std::invalid_argument(std::string(to_string(kind)) + " needs a joint table");
        if (spec.split != AttackSplit::split_evenly_two)
            throw std::invalid_argument("multi-agent targets split the attack evenly between two agents");
    } else if (uses_kappa(kind)) {
        if (shape.is_joint())
            throw std::invalid_argument(std::string(to_string(kind)) + " is single-agent; use the ma_ variant");
        if (spec.split != AttackSplit::single) throw std::invalid_argument("split attack needs a joint table");
    }
}

QTable apply_gbellman(const QTable& q, const TabularEnv& env, TargetKind kind, const KappaSpec& spec, double gamma,
                      double epsilon) {
    if (!env.has_model()) throw std::invalid_argument("environment does not expose a queryable model");
    if (kind == TargetKind::sarsa) throw std::invalid_argument("sarsa has no fixed-point operator");
    if (q.num_states() != env.num_states() || !(q.shape() == env.action_shape()))
        throw std::invalid_argument("table shape does not match environment");
    check_probability(gamma, "gamma");
    check_probability(epsilon, "epsilon");
    check_target_shape(kind, q.shape(), spec);

    std::vector<double> value(q.num_states(), 0.0);
    for (std::size_t s = 0; s < q.num_states(); ++s)
        if (!env.is_terminal(StateId{s})) value[s] = target_value(kind, q, StateId{s}, epsilon, spec);

    QTable out(q.num_states(), q.shape(), 0.0);
    for (std::size_t s = 0; s < q.num_states(); ++s) {
        if (env.is_terminal(StateId{s})) continue;
        for (std::size_t a = 0; a < q.num_actions(); ++a) {
            const StepResult r = env.step(StateId{s}, ActionId{a});
            out.set(StateId{s}, ActionId{a}, r.reward + (r.done ? 0.0 : gamma * value[r.next.index]));
        }
    }
    return out;
}

} // namespace robusttd
