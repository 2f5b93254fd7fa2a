#include "robusttd/robusttd.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <new>
#include <sstream>
#include <stdexcept>
#include <string>

#include "robusttd/bench.hpp"
#include "robusttd/oracle.hpp"

struct rtd_env {
    std::unique_ptr<robusttd::GridEnv> env;
};

struct rtd_qtable {
    robusttd::QTable q;
};

struct rtd_run {
    robusttd::TrainResult result;
};

namespace {

thread_local std::string g_last_error;

rtd_status fail(rtd_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <class F>
rtd_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return RTD_OK;
    } catch (const std::invalid_argument& e) {
        return fail(RTD_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return fail(RTD_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(RTD_ERR_IO, e.what());
    } catch (const std::ios_base::failure& e) {
        return fail(RTD_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(RTD_ERR_INTERNAL, "out of memory");
    } catch (const std::runtime_error& e) {
        return fail(RTD_ERR_RUNTIME, e.what());
    } catch (const std::exception& e) {
        return fail(RTD_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RTD_ERR_INTERNAL, "unknown error");
    }
}

void require(const void* p, const char* what) {
    if (!p) throw std::invalid_argument(std::string(what) + " must not be null");
}

std::string read_file(const char* path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure(std::string("cannot open ") + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

robusttd::LearnerConfig learner_config(const rtd_env& env, const rtd_train_options& o) {
    require(o.algorithm, "algorithm");
    robusttd::LearnerConfig cfg;
    cfg.target = robusttd::resolve_algorithm(o.algorithm, env.env->name());
    cfg.alpha = o.alpha;
    cfg.epsilon = o.epsilon;
    cfg.gamma = o.gamma;
    cfg.kappa.varkappa = robusttd::uses_kappa(cfg.target) ? o.kappa : 0.0;
    cfg.kappa.split =
        robusttd::is_multi_agent(cfg.target) ? robusttd::AttackSplit::split_evenly_two : robusttd::AttackSplit::single;
    cfg.episodes = o.episodes;
    cfg.seed = o.seed;
    cfg.alpha_schedule = o.decay_alpha ? robusttd::AlphaSchedule::visit_decay : robusttd::AlphaSchedule::constant;
    cfg.kappa_decay_steps = o.kappa_decay_steps;
    cfg.max_steps = o.max_steps;
    if (!(o.kappa >= 0.0 && o.kappa <= 1.0)) throw std::invalid_argument("kappa must lie in [0, 1]");
    cfg.validate();
    return cfg;
}

robusttd::PerturbationSpec perturbation(const char* kind, double p) {
    robusttd::PerturbationSpec spec{robusttd::parse_perturbation_kind(kind ? kind : "none"), p};
    spec.validate();
    return spec;
}

std::vector<double> parse_list(const char* text) {
    std::vector<double> out;
    std::string_view rest(text);
    while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        const std::string item(rest.substr(0, comma));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw std::invalid_argument("bad number '" + item + "' in list");
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

std::vector<std::string> parse_names(const char* text) {
    std::vector<std::string> out;
    std::string_view rest(text);
    while (true) {
        const std::size_t comma = rest.find(',');
        const std::string item(rest.substr(0, comma));
        if (item.empty()) throw std::invalid_argument("empty name in algorithm list");
        out.push_back(item);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

} // namespace

extern "C" {

const char* rtd_last_error(void) { return g_last_error.c_str(); }

const char* rtd_status_name(rtd_status status) {
    switch (status) {
    case RTD_OK: return "ok";
    case RTD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RTD_ERR_IO: return "i/o error";
    case RTD_ERR_RUNTIME: return "runtime error";
    case RTD_ERR_VERIFY_FAILED: return "verification failed";
    case RTD_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* rtd_version(void) { return "0.1.0"; }

rtd_status rtd_env_create(const char* name, const char* map_text, rtd_env** out) {
    return guarded([&] {
        require(name, "name");
        require(out, "out");
        *out = nullptr;
        auto env = robusttd::make_env(name, map_text ? std::string_view(map_text) : std::string_view());
        *out = new rtd_env{std::move(env)};
    });
}

rtd_status rtd_env_create_from_file(const char* name, const char* map_path, rtd_env** out) {
    return guarded([&] {
        require(name, "name");
        require(map_path, "map path");
        require(out, "out");
        *out = nullptr;
        const std::string text = read_file(map_path);
        if (text.empty()) throw std::invalid_argument(std::string(map_path) + " is empty");
        *out = new rtd_env{robusttd::make_env(name, text)};
    });
}

void rtd_env_destroy(rtd_env* env) { delete env; }

rtd_status rtd_env_dims(const rtd_env* env, size_t* num_states, size_t* num_actions) {
    return guarded([&] {
        require(env, "env");
        if (num_states) *num_states = env->env->num_states();
        if (num_actions) *num_actions = env->env->action_shape().size();
    });
}

rtd_status rtd_env_render(const rtd_env* env, char* buf, size_t cap, size_t* length) {
    return guarded([&] {
        require(env, "env");
        const std::string text = robusttd::render_map(env->env->map());
        if (length) *length = text.size();
        if (buf && cap > 0) {
            const std::size_t n = std::min(cap - 1, text.size());
            std::memcpy(buf, text.data(), n);
            buf[n] = '\0';
        }
    });
}

rtd_status rtd_env_shortest_path(const rtd_env* env, size_t* length) {
    return guarded([&] {
        require(env, "env");
        require(length, "length");
        *length = robusttd::bfs_shortest_path(env->env->map(), env->env->model()).length;
    });
}

rtd_status rtd_qtable_load(const char* path, rtd_qtable** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        std::ifstream probe(path);
        if (!probe) throw std::ios_base::failure(std::string("cannot open ") + path);
        probe.close();
        *out = new rtd_qtable{robusttd::load_qtable(path)};
    });
}

rtd_status rtd_qtable_save(const rtd_qtable* q, const char* path) {
    return guarded([&] {
        require(q, "table");
        require(path, "path");
        robusttd::save_qtable(path, q->q);
    });
}

void rtd_qtable_destroy(rtd_qtable* q) { delete q; }

rtd_status rtd_qtable_dims(const rtd_qtable* q, size_t* num_states, size_t* num_actions) {
    return guarded([&] {
        require(q, "table");
        if (num_states) *num_states = q->q.num_states();
        if (num_actions) *num_actions = q->q.num_actions();
    });
}

rtd_status rtd_qtable_get(const rtd_qtable* q, size_t state, size_t action, double* value) {
    return guarded([&] {
        require(q, "table");
        require(value, "value");
        if (state >= q->q.num_states() || action >= q->q.num_actions())
            throw std::out_of_range("state or action index out of range");
        *value = q->q(robusttd::StateId{state}, robusttd::ActionId{action});
    });
}

rtd_status rtd_qtable_distance(const rtd_qtable* a, const rtd_qtable* b, double* sup_norm) {
    return guarded([&] {
        require(a, "table");
        require(b, "table");
        require(sup_norm, "sup_norm");
        *sup_norm = robusttd::sup_norm_distance(a->q, b->q);
    });
}

void rtd_train_options_default(rtd_train_options* opts) {
    if (!opts) return;
    *opts = rtd_train_options{"q_learning", 0.1, 0.1, 1.0, 0.0, 1000, 0, 0, 0.0, 0, "none", 0.0};
}

rtd_status rtd_train(const rtd_env* env, const rtd_train_options* opts, rtd_run** out) {
    return guarded([&] {
        require(env, "env");
        require(opts, "options");
        require(out, "out");
        *out = nullptr;
        const robusttd::LearnerConfig cfg = learner_config(*env, *opts);
        robusttd::LearnerConfig run_cfg = cfg;
        // A step budget without an episode count runs until the budget is spent.
        if (run_cfg.episodes == 0 && run_cfg.max_steps > 0) run_cfg.episodes = std::numeric_limits<std::size_t>::max();
        *out = new rtd_run{robusttd::train(*env->env, run_cfg, perturbation(opts->perturbation, opts->perturbation_p))};
    });
}

void rtd_run_destroy(rtd_run* run) { delete run; }

size_t rtd_run_num_episodes(const rtd_run* run) { return run ? run->result.returns.size() : 0; }

uint64_t rtd_run_total_steps(const rtd_run* run) { return run ? run->result.total_steps : 0; }

size_t rtd_run_returns(const rtd_run* run, double* buf, size_t cap) {
    if (!run || !buf) return 0;
    const std::size_t n = std::min(cap, run->result.returns.size());
    std::copy_n(run->result.returns.begin(), n, buf);
    return n;
}

rtd_status rtd_run_table(const rtd_run* run, rtd_qtable** out) {
    return guarded([&] {
        require(run, "run");
        require(out, "out");
        *out = new rtd_qtable{run->result.q};
    });
}

rtd_status rtd_run_visits(const rtd_run* run, size_t state, size_t action, uint64_t* visits) {
    return guarded([&] {
        require(run, "run");
        require(visits, "visits");
        const auto& q = run->result.q;
        if (state >= q.num_states() || action >= q.num_actions())
            throw std::out_of_range("state or action index out of range");
        *visits = run->result.visits[state * q.num_actions() + action];
    });
}

rtd_status rtd_run_write(const rtd_run* run, const char* dir) {
    return guarded([&] {
        require(run, "run");
        require(dir, "dir");
        const std::filesystem::path base(dir);
        std::filesystem::create_directories(base);
        robusttd::save_qtable(base / "qtable.txt", run->result.q);
        std::ofstream out(base / "returns.csv", std::ios::binary);
        if (!out) throw std::ios_base::failure("cannot write " + (base / "returns.csv").string());
        out << "episode,return,steps\n";
        for (std::size_t i = 0; i < run->result.traces.size(); ++i)
            out << i << ',' << robusttd::format_number(run->result.traces[i].ret) << ','
                << run->result.traces[i].steps << '\n';
        if (!out) throw std::ios_base::failure("write failed for returns.csv");
    });
}

rtd_status rtd_evaluate(const rtd_env* env, const rtd_qtable* q, double epsilon, const char* kind, double p,
                        uint64_t trials, uint64_t seed, rtd_stats* out) {
    return guarded([&] {
        require(env, "env");
        require(q, "table");
        require(out, "out");
        if (q->q.num_states() != env->env->num_states() || !(q->q.shape() == env->env->action_shape()))
            throw std::invalid_argument("table shape does not match environment");
        robusttd::Rng rng(seed);
        const robusttd::RunStats s = robusttd::evaluate(*env->env, q->q, epsilon, perturbation(kind, p), trials, rng);
        *out = rtd_stats{s.mean, s.ci95_half_width, s.n, s.capped};
    });
}

rtd_status rtd_greedy_path(const rtd_env* env, const rtd_qtable* q, double* total_reward, int* reached_goal,
                           int* safety_margin) {
    return guarded([&] {
        require(env, "env");
        require(q, "table");
        if (q->q.num_states() != env->env->num_states() || !(q->q.shape() == env->env->action_shape()))
            throw std::invalid_argument("table shape does not match environment");
        const robusttd::GreedyPath path = robusttd::greedy_path(*env->env, q->q);
        if (total_reward) *total_reward = path.total_reward;
        if (reached_goal) *reached_goal = path.reached_goal ? 1 : 0;
        if (safety_margin) *safety_margin = robusttd::path_safety_margin(env->env->map(), path.cells);
    });
}

rtd_status rtd_value_iterate(const rtd_env* env, const char* algorithm, double kappa, double gamma, double epsilon,
                             double tol, rtd_qtable** out, uint64_t* iterations) {
    return guarded([&] {
        require(env, "env");
        require(algorithm, "algorithm");
        require(out, "out");
        *out = nullptr;
        const robusttd::TargetKind kind = robusttd::resolve_algorithm(algorithm, env->env->name());
        robusttd::KappaSpec spec;
        spec.varkappa = robusttd::uses_kappa(kind) ? kappa : 0.0;
        spec.split = robusttd::is_multi_agent(kind) ? robusttd::AttackSplit::split_evenly_two
                                                    : robusttd::AttackSplit::single;
        spec.validate();
        robusttd::check_probability(epsilon, "epsilon");
        robusttd::FixedPointResult r = robusttd::value_iterate(*env->env, spec, kind, gamma, epsilon, tol);
        if (!r.converged) throw std::runtime_error("value iteration did not converge");
        if (iterations) *iterations = r.iterations;
        *out = new rtd_qtable{std::move(r.q_star)};
    });
}

rtd_status rtd_verify(const rtd_env* env, const rtd_train_options* opts, double tol, uint64_t min_visits,
                      rtd_verify_result* out) {
    bool passed = false;
    const rtd_status status = guarded([&] {
        require(env, "env");
        require(opts, "options");
        require(out, "out");
        if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
        robusttd::LearnerConfig cfg = learner_config(*env, *opts);
        cfg.alpha_schedule = robusttd::AlphaSchedule::visit_decay;
        if (cfg.max_steps == 0) cfg.max_steps = 2'000'000;
        cfg.episodes = std::numeric_limits<std::size_t>::max();
        const robusttd::FixedPointCheck check = robusttd::check_fixed_point(*env->env, cfg, min_visits);
        *out = rtd_verify_result{check.distance, check.compared, check.steps};
        passed = check.compared > 0 && check.distance <= tol;
    });
    if (status != RTD_OK) return status;
    if (!passed) {
        std::ostringstream msg;
        msg << "sup-norm distance " << out->distance << " over " << out->compared << " entries exceeds " << tol;
        return fail(RTD_ERR_VERIFY_FAILED, out->compared == 0 ? "no entry was visited often enough" : msg.str());
    }
    return RTD_OK;
}

void rtd_experiment_options_default(rtd_experiment_options* opts) {
    if (!opts) return;
    *opts = rtd_experiment_options{"attack", "puddle", nullptr, nullptr, nullptr, nullptr, -1.0, -1.0, 0, 0, 0, 0, 0};
}

rtd_status rtd_run_experiment(const rtd_experiment_options* opts, const char* out_dir) {
    return guarded([&] {
        require(opts, "options");
        require(opts->experiment, "experiment");
        require(opts->env, "env");
        require(out_dir, "out_dir");
        robusttd::ExperimentConfig cfg =
            robusttd::default_experiment_config(robusttd::parse_experiment_kind(opts->experiment), opts->env);
        if (opts->algorithms) cfg.algorithms = parse_names(opts->algorithms);
        if (opts->alphas) cfg.alphas = parse_list(opts->alphas);
        if (opts->ps) cfg.ps = parse_list(opts->ps);
        if (opts->kappas) cfg.kappas = parse_list(opts->kappas);
        if (opts->epsilon >= 0.0) cfg.epsilon = opts->epsilon;
        if (opts->kappa >= 0.0) cfg.kappa = opts->kappa;
        if (opts->trials) cfg.trials = opts->trials;
        if (opts->train_episodes) cfg.train_episodes = opts->train_episodes;
        if (opts->eval_episodes) cfg.eval_episodes = opts->eval_episodes;
        cfg.seed = opts->seed;
        cfg.threads = opts->threads;
        cfg.validate();
        robusttd::write_experiment_outputs(robusttd::run_experiment(cfg), out_dir);
    });
}

rtd_status rtd_plot_csv(const char* csv_path, const char* out_dir) {
    return guarded([&] {
        require(csv_path, "csv path");
        require(out_dir, "out_dir");
        robusttd::plot_from_csv(csv_path, out_dir);
    });
}

} // extern "C"
