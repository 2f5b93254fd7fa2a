#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robusttd/robusttd.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerifyFailed = 2;

int report(rtd_status status) {
    if (status == RTD_OK) return kExitOk;
    std::cerr << "error: " << rtd_last_error() << '\n';
    return status == RTD_ERR_VERIFY_FAILED ? kExitVerifyFailed : kExitError;
}

struct EnvFlags {
    std::string env = "cliff";
    std::string map;

    void add(CLI::App* cmd) {
        cmd->add_option("--env", env, "Environment")->check(CLI::IsMember({"cliff", "puddle"}));
        cmd->add_option("--map", map, "Map file replacing the built-in layout")->check(CLI::ExistingFile);
    }

    rtd_status open(rtd_env** out) const {
        if (map.empty()) return rtd_env_create(env.c_str(), nullptr, out);
        return rtd_env_create_from_file(env.c_str(), map.c_str(), out);
    }
};

struct EnvHandle {
    rtd_env* env = nullptr;
    ~EnvHandle() { rtd_env_destroy(env); }
};

struct TableHandle {
    rtd_qtable* q = nullptr;
    ~TableHandle() { rtd_qtable_destroy(q); }
};

struct RunHandle {
    rtd_run* run = nullptr;
    ~RunHandle() { rtd_run_destroy(run); }
};

// ROBUSTTD_SEED wins over --seed.
std::uint64_t effective_seed(std::uint64_t flag) {
    const char* text = std::getenv("ROBUSTTD_SEED");
    if (!text || !*text) return flag;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text, &end, 10);
    if (*end != '\0') throw CLI::ValidationError("ROBUSTTD_SEED", "must be a nonnegative integer");
    return v;
}

struct TrainFlags {
    std::string algo = "q_learning";
    double kappa = 0.0;
    double alpha = 0.1;
    double epsilon = 0.1;
    double gamma = 1.0;
    std::uint64_t episodes = 1000;
    std::uint64_t seed = 0;
    bool decay_alpha = false;
    double kappa_decay = 0.0;
    std::uint64_t max_steps = 0;
    std::string perturbation = "none";
    double p = 0.0;

    void add(CLI::App* cmd, bool training) {
        cmd->add_option("--algo", algo, "q_learning, sarsa, esarsa, q_kappa, esarsa_kappa");
        cmd->add_option("--kappa", kappa, "Rare-event probability of the internal model")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--epsilon", epsilon, "Exploration rate")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--gamma", gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--seed", seed, "Base seed (ROBUSTTD_SEED overrides)");
        cmd->add_option("--kappa-decay", kappa_decay, "kappa_t = kappa / (1 + t / N)")->check(CLI::NonNegativeNumber);
        if (!training) return;
        cmd->add_option("--alpha", alpha, "Learning rate")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--episodes", episodes, "Training episodes");
        cmd->add_flag("--decay-alpha", decay_alpha, "Use alpha = 1 / (1 + visits)^0.7");
        cmd->add_option("--max-steps", max_steps, "Stop after this many steps in total");
        cmd->add_option("--perturbation", perturbation, "Perturbation during training")
            ->check(CLI::IsMember({"none", "stochastic", "adversarial"}));
        cmd->add_option("--p", p, "Perturbation probability")->check(CLI::Range(0.0, 1.0));
    }

    rtd_train_options options() const {
        rtd_train_options o;
        rtd_train_options_default(&o);
        o.algorithm = algo.c_str();
        o.alpha = alpha;
        o.epsilon = epsilon;
        o.gamma = gamma;
        o.kappa = kappa;
        o.episodes = episodes;
        o.seed = effective_seed(seed);
        o.decay_alpha = decay_alpha ? 1 : 0;
        o.kappa_decay_steps = kappa_decay;
        o.max_steps = max_steps;
        o.perturbation = perturbation.c_str();
        o.perturbation_p = p;
        return o;
    }
};

struct SweepFlags {
    std::string experiment;
    std::string env = "puddle";
    std::string out;
    std::string algos, alphas, ps, kappas;
    double epsilon = -1.0;
    double kappa = -1.0;
    std::uint64_t trials = 0, episodes = 0, eval_episodes = 0, seed = 0;
    unsigned threads = 0;

    void add(CLI::App* cmd, bool path_only) {
        if (!path_only)
            cmd->add_option("--experiment", experiment, "early, converged, attack, robustness")
                ->required()
                ->check(CLI::IsMember({"early", "converged", "attack", "robustness", "path"}));
        cmd->add_option("--env", env, "Environment")->check(CLI::IsMember({"cliff", "puddle"}));
        cmd->add_option("--out", out, "Output directory")->required();
        cmd->add_option("--algos", algos, "Comma-separated algorithms");
        cmd->add_option("--alphas", alphas, "Comma-separated learning rates");
        cmd->add_option("--kappas", kappas, "Comma-separated kappa grid (path figure)");
        if (!path_only) {
            cmd->add_option("--ps", ps, "Comma-separated attack probabilities");
            cmd->add_option("--kappa", kappa, "Fixed kappa")->check(CLI::Range(0.0, 1.0));
            cmd->add_option("--eval-episodes", eval_episodes, "Evaluation episodes per trial");
        }
        cmd->add_option("--epsilon", epsilon, "Exploration rate")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--trials", trials, "Independent trials per cell");
        cmd->add_option("--episodes", episodes, "Training episodes per trial");
        cmd->add_option("--seed", seed, "Base seed (ROBUSTTD_SEED overrides)");
        cmd->add_option("--threads", threads, "Worker thread cap (0: all cores)");
    }

    int run() const {
        rtd_experiment_options o;
        rtd_experiment_options_default(&o);
        o.experiment = experiment.c_str();
        o.env = env.c_str();
        o.algorithms = algos.empty() ? nullptr : algos.c_str();
        o.alphas = alphas.empty() ? nullptr : alphas.c_str();
        o.ps = ps.empty() ? nullptr : ps.c_str();
        o.kappas = kappas.empty() ? nullptr : kappas.c_str();
        o.epsilon = epsilon;
        o.kappa = kappa;
        o.trials = trials;
        o.train_episodes = episodes;
        o.eval_episodes = eval_episodes;
        o.seed = effective_seed(seed);
        o.threads = threads;
        const int code = report(rtd_run_experiment(&o, out.c_str()));
        if (code == kExitOk) std::cout << "wrote " << experiment << '_' << env << " outputs to " << out << '\n';
        return code;
    }
};

int cmd_train(const EnvFlags& ef, const TrainFlags& tf, const std::string& out) {
    EnvHandle env;
    if (int c = report(ef.open(&env.env))) return c;
    const rtd_train_options o = tf.options();
    RunHandle run;
    if (int c = report(rtd_train(env.env, &o, &run.run))) return c;
    if (int c = report(rtd_run_write(run.run, out.c_str()))) return c;
    std::vector<double> returns(rtd_run_num_episodes(run.run));
    rtd_run_returns(run.run, returns.data(), returns.size());
    const std::size_t tail = std::min<std::size_t>(100, returns.size());
    double total = 0.0;
    for (std::size_t i = returns.size() - tail; i < returns.size(); ++i) total += returns[i];
    std::cout << "episodes " << returns.size() << ", steps " << rtd_run_total_steps(run.run);
    if (tail) std::cout << ", mean return of last " << tail << ": " << total / static_cast<double>(tail);
    std::cout << "\nwrote " << out << "/qtable.txt and " << out << "/returns.csv\n";
    return kExitOk;
}

int cmd_evaluate(const EnvFlags& ef, const std::string& table, double epsilon, const std::string& pert, double p,
                 std::uint64_t trials, std::uint64_t seed) {
    EnvHandle env;
    if (int c = report(ef.open(&env.env))) return c;
    TableHandle q;
    if (int c = report(rtd_qtable_load(table.c_str(), &q.q))) return c;
    rtd_stats s;
    if (int c = report(rtd_evaluate(env.env, q.q, epsilon, pert.c_str(), p, trials, effective_seed(seed), &s))) return c;
    std::printf("mean %.6f ci95 %.6f n %llu capped %llu\n", s.mean, s.ci95_half_width,
                static_cast<unsigned long long>(s.n), static_cast<unsigned long long>(s.capped));
    return kExitOk;
}

int cmd_verify(const EnvFlags& ef, TrainFlags tf, double tol, std::uint64_t steps, std::uint64_t min_visits) {
    EnvHandle env;
    if (int c = report(ef.open(&env.env))) return c;
    tf.max_steps = steps;
    tf.episodes = 0;
    const rtd_train_options o = tf.options();
    rtd_verify_result r{};
    const rtd_status status = rtd_verify(env.env, &o, tol, min_visits, &r);
    if (status == RTD_OK || status == RTD_ERR_VERIFY_FAILED)
        std::printf("sup-norm distance %.6g over %llu entries after %llu steps (tol %g): %s\n", r.distance,
                    static_cast<unsigned long long>(r.compared), static_cast<unsigned long long>(r.steps), tol,
                    status == RTD_OK ? "pass" : "FAIL");
    return report(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular TD learning with a rare-event (kappa) operator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rtd_version());

    EnvFlags train_env, eval_env, verify_env;
    TrainFlags train_flags, verify_flags;
    std::string train_out;
    auto* train = app.add_subcommand("train", "Train one agent and write qtable.txt and returns.csv");
    train_env.add(train);
    train_flags.add(train, true);
    train->add_option("--out", train_out, "Output directory")->required();

    std::string table, eval_pert = "none";
    double eval_eps = 0.0, eval_p = 0.0;
    std::uint64_t eval_trials = 1000, eval_seed = 0;
    auto* eval = app.add_subcommand("evaluate", "Roll out a saved table without learning");
    eval_env.add(eval);
    eval->add_option("--qtable", table, "Table file")->required()->check(CLI::ExistingFile);
    eval->add_option("--epsilon", eval_eps, "Exploration rate")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--perturbation", eval_pert, "Perturbation")
        ->check(CLI::IsMember({"none", "stochastic", "adversarial"}));
    eval->add_option("--p", eval_p, "Perturbation probability")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--trials", eval_trials, "Episodes")->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed, "Seed (ROBUSTTD_SEED overrides)");

    SweepFlags sweep_flags, path_flags;
    auto* sweep = app.add_subcommand("sweep", "Run a figure experiment: CSV, summary and SVG");
    sweep_flags.add(sweep, false);
    auto* path = app.add_subcommand("path-figure", "Greedy paths and visit heatmaps across a kappa grid");
    path_flags.add(path, true);

    double tol = 0.05;
    std::uint64_t verify_steps = 2'000'000, min_visits = 1000;
    auto* verify = app.add_subcommand("verify", "Check a decaying-alpha learner against its fixed point");
    verify_env.add(verify);
    verify_flags.add(verify, false);
    verify->add_option("--tol", tol, "Sup-norm tolerance")->check(CLI::NonNegativeNumber);
    verify->add_option("--steps", verify_steps, "Training steps")->check(CLI::PositiveNumber);
    verify->add_option("--min-visits", min_visits, "Only compare entries visited this often");

    std::string csv, plot_out;
    auto* plot = app.add_subcommand("plot", "Rebuild the summary and SVG from a raw CSV");
    plot->add_option("--csv", csv, "Raw results CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (*train) return cmd_train(train_env, train_flags, train_out);
        if (*eval) return cmd_evaluate(eval_env, table, eval_eps, eval_pert, eval_p, eval_trials, eval_seed);
        if (*sweep) return sweep_flags.run();
        if (*path) {
            path_flags.experiment = "path";
            return path_flags.run();
        }
        if (*verify) return cmd_verify(verify_env, verify_flags, tol, verify_steps, min_visits);
        if (*plot) {
            const int code = report(rtd_plot_csv(csv.c_str(), plot_out.c_str()));
            if (code == kExitOk) std::cout << "wrote plots to " << plot_out << '\n';
            return code;
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitError;
    }
    return kExitError;
}
