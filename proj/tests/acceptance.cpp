// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "robusttd/bench.hpp"
#include "robusttd/envs.hpp"
#include "robusttd/kappa.hpp"
#include "robusttd/learn.hpp"
#include "robusttd/oracle.hpp"

using namespace robusttd;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit_s;  // 0: no limit
    std::function<Outcome()> check;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

KappaSpec spec_for(TargetKind kind, double k) {
    KappaSpec s;
    s.varkappa = k;
    if (is_multi_agent(kind)) s.split = AttackSplit::split_evenly_two;
    return s;
}

QTable random_table(std::size_t states, ActionShape shape, Rng& rng) {
    QTable q(states, shape);
    for (std::size_t s = 0; s < states; ++s)
        for (std::size_t a = 0; a < shape.size(); ++a) q.set(StateId{s}, ActionId{a}, (rng.uniform() * 2 - 1) * 50);
    return q;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(ROBUSTTD_CLI) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Summary statistics of eval_return keyed by (algorithm, p); puddle rows carry
// the multi-agent names, which are folded back onto the requested ones.
std::map<std::pair<std::string, double>, RunStats> eval_cells(const fs::path& csv) {
    std::ifstream in(csv, std::ios::binary);
    const auto rows = read_csv(in);
    std::map<std::pair<std::string, double>, RunStats> out;
    for (const auto& s : summarize(rows)) {
        if (s.key.metric != "eval_return") continue;
        std::string algo = s.key.algorithm;
        if (algo.rfind("ma_", 0) == 0) algo = algo.substr(3);
        out[{algo, s.key.p}] = s.stats;
    }
    return out;
}

const fs::path kWork = fs::temp_directory_path() / "robusttd_acceptance";

const std::string kAttackArgs =
    "sweep --experiment attack --env puddle --algos q_learning,q_kappa --ps 0.001,0.01,0.05,0.1,0.2 "
    "--trials 10 --episodes 100000 --eval-episodes 5000 --seed " + std::to_string(kSeed) + " --out ";

Outcome non_expansion() {
    Rng rng(kSeed);
    const double kappas[] = {0.0, 0.1, 0.5, 1.0};
    const double epsilons[] = {0.0, 0.1, 1.0};
    const TargetKind single_kinds[] = {TargetKind::q_kappa, TargetKind::esarsa_kappa};
    const TargetKind joint_kinds[] = {TargetKind::ma_q_kappa, TargetKind::ma_esarsa_kappa};
    std::size_t pairs = 0, violations = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
        const bool joint = i % 2 == 1;
        const ActionShape shape = joint ? ActionShape::joint(1 + rng.uniform_index(4), 1 + rng.uniform_index(4))
                                        : ActionShape::single(1 + rng.uniform_index(6));
        const std::size_t states = 1 + rng.uniform_index(4);
        const QTable u = random_table(states, shape, rng);
        QTable v = random_table(states, shape, rng);
        if (i % 3 == 0) {
            // nearby pairs probe the inequality at small scales too
            v = u;
            for (std::size_t s = 0; s < states; ++s)
                for (std::size_t a = 0; a < shape.size(); ++a)
                    v.set(StateId{s}, ActionId{a}, u(StateId{s}, ActionId{a}) + (rng.uniform() - 0.5) * 1e-3);
        }
        const double k = kappas[i % 4];
        const double eps = epsilons[(i / 4) % 3];
        const double d = sup_norm_distance(u, v);
        for (TargetKind kind : joint ? std::vector<TargetKind>(std::begin(joint_kinds), std::end(joint_kinds))
                                     : std::vector<TargetKind>(std::begin(single_kinds), std::end(single_kinds))) {
            const KappaSpec spec = spec_for(kind, k);
            double gap = 0.0;
            for (std::size_t s = 0; s < states; ++s)
                gap = std::max(gap, std::abs(target_value(kind, u, StateId{s}, eps, spec) -
                                             target_value(kind, v, StateId{s}, eps, spec)));
            worst = std::max(worst, gap - d);
            violations += gap > d + 1e-12;
        }
        ++pairs;
    }
    return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(pairs) +
                                 " pairs, max excess " + fmt("%.3g", worst)};
}

Outcome kappa_zero_equivalence() {
    const GridEnv env = make_cliff_walking();
    double worst = 0.0;
    for (auto [kappa_kind, base_kind] : {std::pair{TargetKind::q_kappa, TargetKind::q_learning},
                                         std::pair{TargetKind::esarsa_kappa, TargetKind::esarsa}}) {
        LearnerConfig a;
        a.target = kappa_kind;
        a.episodes = 1000;
        a.seed = kSeed;
        LearnerConfig b = a;
        b.target = base_kind;
        const QTable qa = train(env, a, PerturbationSpec::none()).q;
        const QTable qb = train(env, b, PerturbationSpec::none()).q;
        worst = std::max(worst, sup_norm_distance(qa, qb));
    }
    return {worst == 0.0, "max |difference| " + fmt("%.17g", worst)};
}

Outcome fixed_points() {
    const GridEnv cliff = make_cliff_walking();
    const GridEnv puddle = make_puddle_world();
    struct Case {
        const GridEnv* env;
        TargetKind kind;
        double tol;
    };
    bool pass = true;
    std::string detail;
    for (const Case& c : {Case{&cliff, TargetKind::q_kappa, 0.05}, Case{&cliff, TargetKind::esarsa_kappa, 0.05},
                          Case{&puddle, TargetKind::ma_q_kappa, 0.1}, Case{&puddle, TargetKind::ma_esarsa_kappa, 0.1}}) {
        LearnerConfig cfg;
        cfg.target = c.kind;
        cfg.kappa = spec_for(c.kind, 0.1);
        cfg.epsilon = 0.1;
        cfg.alpha_schedule = AlphaSchedule::visit_decay;
        cfg.max_steps = 2'000'000;
        cfg.episodes = std::numeric_limits<std::size_t>::max();
        cfg.seed = kSeed;
        const auto t0 = std::chrono::steady_clock::now();
        const FixedPointCheck r = check_fixed_point(*c.env, cfg, 1000);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = r.compared > 0 && r.distance <= c.tol && secs <= 120;
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += std::string(to_string(c.kind)) + " " + fmt("%.4f", r.distance) + (ok ? " <= " : " > ") +
                  fmt("%g", c.tol) + " over " + std::to_string(r.compared) + " entries in " + fmt("%.0f", secs) + " s";
    }
    return {pass, detail};
}

Outcome kappa_schedule_limit() {
    const GridEnv env = make_cliff_walking();
    LearnerConfig cfg;
    cfg.target = TargetKind::q_kappa;
    cfg.kappa = spec_for(cfg.target, 0.1);
    cfg.kappa_decay_steps = 10'000;
    cfg.alpha_schedule = AlphaSchedule::visit_decay;
    cfg.max_steps = 600'000'000;  // enough for every reachable entry to pass the visit gate
    cfg.episodes = std::numeric_limits<std::size_t>::max();
    cfg.seed = kSeed;
    const FixedPointCheck r = check_fixed_point(env, cfg, 1000);
    const GreedyPath path = greedy_path(env, r.learned);
    const bool pass = path.reached_goal && path.total_reward == -13.0 && r.compared > 0 && r.distance <= 0.05;
    return {pass, "greedy return " + fmt("%g", path.total_reward) + ", distance to Q* " + fmt("%.4f", r.distance) +
                      " over " + std::to_string(r.compared) + " entries after " + std::to_string(r.steps) + " steps"};
}

Outcome path_safety() {
    ExperimentConfig cfg = default_experiment_config(ExperimentKind::path, "puddle");
    cfg.seed = kSeed;
    const auto rows = experiment_path_figure(cfg);
    std::map<double, int> margin;
    std::map<double, bool> reached;
    for (const auto& r : rows) {
        if (r.metric == "margin") margin[r.kappa] = static_cast<int>(r.value);
        if (r.metric == "reached_goal") reached[r.kappa] = r.value != 0.0;
    }
    bool pass = margin.size() == 3;
    std::string detail = "margins";
    int prev = -1;
    for (auto [k, m] : margin) {
        detail += " k" + fmt("%g", k) + "=" + std::to_string(m);
        pass = pass && m >= prev && reached[k];
        prev = m;
    }
    pass = pass && margin[0.3] > margin[0.0];
    return {pass, detail};
}

Outcome attack_ordering() {
    const fs::path dir = kWork / "attack_a";
    fs::remove_all(dir);
    const int code = run_cli(kAttackArgs + dir.string(), kWork / "attack_a.log");
    if (code != 0) return {false, "cli exited with " + std::to_string(code)};
    const auto cells = eval_cells(dir / "attack_puddle.csv");
    bool pass = true;
    std::string detail;
    for (double p : {0.001, 0.01, 0.05, 0.1, 0.2}) {
        const auto qk = cells.find({"q_kappa", p});
        const auto ql = cells.find({"q_learning", p});
        if (qk == cells.end() || ql == cells.end()) return {false, "missing cell p=" + fmt("%g", p)};
        const bool ge = qk->second.mean >= ql->second.mean;
        const bool sep = p < 0.05 || ci_separated(qk->second, ql->second);
        pass = pass && ge && sep;
        if (!detail.empty()) detail += "; ";
        detail += "p=" + fmt("%g", p) + " Qk " + fmt("%.2f", qk->second.mean) + "+-" +
                  fmt("%.2f", qk->second.ci95_half_width) + " QL " + fmt("%.2f", ql->second.mean) + "+-" +
                  fmt("%.2f", ql->second.ci95_half_width) + (ge && sep ? "" : " <-");
    }
    return {pass, detail};
}

Outcome robustness_ordering() {
    const fs::path dir = kWork / "robustness";
    fs::remove_all(dir);
    const int code = run_cli("sweep --experiment robustness --env puddle --ps 0.05,0.15 --kappa 0.1 --trials 10 "
                             "--episodes 100000 --eval-episodes 5000 --seed " +
                                 std::to_string(kSeed) + " --out " + dir.string(),
                             kWork / "robustness.log");
    if (code != 0) return {false, "cli exited with " + std::to_string(code)};
    const auto cells = eval_cells(dir / "robustness_puddle.csv");
    bool pass = true;
    std::string detail;
    for (double p : {0.05, 0.15}) {
        double best_base = -std::numeric_limits<double>::infinity();
        for (const char* b : {"q_learning", "sarsa", "esarsa"}) {
            const auto it = cells.find({b, p});
            if (it == cells.end()) return {false, std::string("missing ") + b};
            best_base = std::max(best_base, it->second.mean);
        }
        for (const char* k : {"q_kappa", "esarsa_kappa"}) {
            const auto it = cells.find({k, p});
            if (it == cells.end()) return {false, std::string("missing ") + k};
            pass = pass && it->second.mean >= best_base;
        }
        if (!detail.empty()) detail += "; ";
        detail += "p=" + fmt("%g", p) + " Qk " + fmt("%.2f", cells.at({"q_kappa", p}).mean) + " ESk " +
                  fmt("%.2f", cells.at({"esarsa_kappa", p}).mean) + " QL " +
                  fmt("%.2f", cells.at({"q_learning", p}).mean) + " SARSA " + fmt("%.2f", cells.at({"sarsa", p}).mean) +
                  " ES " + fmt("%.2f", cells.at({"esarsa", p}).mean);
    }
    return {pass, detail};
}

Outcome early_performance() {
    ExperimentConfig cfg = default_experiment_config(ExperimentKind::early, "cliff");
    cfg.algorithms = {"q_learning", "q_kappa"};
    cfg.alphas = {0.1};
    cfg.kappa = 0.1;
    cfg.train_perturbations = {PerturbationSpec::adversarial(0.1)};
    cfg.trials = 300;
    cfg.train_episodes = 100;
    cfg.seed = kSeed;
    const ExperimentResult r = run_experiment(cfg);
    const RunStats* qk = nullptr;
    const RunStats* ql = nullptr;
    for (const auto& s : r.summary) {
        if (s.key.algorithm == "q_kappa") qk = &s.stats;
        if (s.key.algorithm == "q_learning") ql = &s.stats;
    }
    if (!qk || !ql) return {false, "missing cells"};
    const bool pass = qk->mean > ql->mean && ci_separated(*qk, *ql);
    return {pass, "Qk " + fmt("%.2f", qk->mean) + "+-" + fmt("%.2f", qk->ci95_half_width) + " QL " +
                      fmt("%.2f", ql->mean) + "+-" + fmt("%.2f", ql->ci95_half_width)};
}

Outcome multi_agent_reduction() {
    Rng rng(kSeed + 9);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng.uniform_index(6);
        const QTable joint = random_table(1, ActionShape::joint(n, 1), rng);
        QTable single(1, ActionShape::single(n));
        for (std::size_t a = 0; a < n; ++a) single.set(StateId{0}, ActionId{a}, joint(StateId{0}, ActionId{a}));
        const double k = rng.uniform(), e1 = rng.uniform(), e2 = rng.uniform();
        KappaSpec two = spec_for(TargetKind::ma_q_kappa, k);
        KappaSpec half = spec_for(TargetKind::q_kappa, k / 2);
        worst = std::max(worst, std::abs(v_kappa_ma_q(joint, StateId{0}, two) - v_kappa_q(single, StateId{0}, half)));
        worst = std::max(worst, std::abs(v_kappa_ma_esarsa(joint, StateId{0}, e1, e2, two) -
                                         v_kappa_esarsa(single, StateId{0}, e1, half)));
    }
    return {worst <= 1e-12, "max |difference| " + fmt("%.3g", worst)};
}

Outcome determinism() {
    const fs::path a = kWork / "attack_a";
    const fs::path b = kWork / "attack_b";
    if (!fs::exists(a / "attack_puddle.csv")) {
        const int code = run_cli(kAttackArgs + a.string(), kWork / "attack_a.log");
        if (code != 0) return {false, "cli exited with " + std::to_string(code)};
    }
    fs::remove_all(b);
    const int code = run_cli(kAttackArgs + b.string(), kWork / "attack_b.log");
    if (code != 0) return {false, "cli exited with " + std::to_string(code)};
    bool same = true;
    for (const char* f : {"attack_puddle.csv", "attack_puddle_summary.csv"})
        same = same && slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
    return {same, same ? "raw and summary CSVs identical" : "CSVs differ"};
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    fs::create_directories(kWork);

    const std::vector<Criterion> criteria{
        {1, "non-expansion of the kappa operators", 5, non_expansion},
        {2, "exact equivalence at varkappa 0", 5, kappa_zero_equivalence},
        {3, "learned tables reach the robust fixed points", 0, fixed_points},
        {4, "decaying varkappa recovers the classical optimum", 120, kappa_schedule_limit},
        {5, "puddle path margin grows with varkappa", 300, path_safety},
        {6, "attack sweep: Q(kappa) beats Q-learning", 900, attack_ordering},
        {7, "robustness at a mismatched attack rate", 600, robustness_ordering},
        {8, "early performance under training attacks", 120, early_performance},
        {9, "one-action second agent reduction", 1, multi_agent_reduction},
        {10, "attack sweep CSVs are reproducible", 0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.time_limit_s <= 0 || secs <= c.time_limit_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("[%s] criterion %d: %s | %s | %.1f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    o.detail.c_str(), secs, in_time ? "" : " (over time limit)");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
