#include "robusttd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "robusttd/oracle.hpp"
#include "svg.hpp"

namespace robusttd {

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::early: return "early";
    case ExperimentKind::converged: return "converged";
    case ExperimentKind::attack: return "attack";
    case ExperimentKind::robustness: return "robustness";
    case ExperimentKind::path: return "path";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
    for (auto k : {ExperimentKind::early, ExperimentKind::converged, ExperimentKind::attack,
                   ExperimentKind::robustness, ExperimentKind::path})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

TargetKind resolve_algorithm(std::string_view algorithm, std::string_view env) {
    const TargetKind kind = parse_target_kind(algorithm);
    const bool joint = env == "puddle";
    if (joint && kind == TargetKind::q_kappa) return TargetKind::ma_q_kappa;
    if (joint && kind == TargetKind::esarsa_kappa) return TargetKind::ma_esarsa_kappa;
    if (!joint && is_multi_agent(kind))
        throw std::invalid_argument("algorithm '" + std::string(algorithm) + "' needs the two-agent puddle world");
    return kind;
}

void ExperimentConfig::validate() const {
    if (env != "cliff" && env != "puddle") throw std::invalid_argument("unknown environment '" + env + "'");
    if (algorithms.empty()) throw std::invalid_argument("no algorithms given");
    for (const auto& a : algorithms) resolve_algorithm(a, env);
    if (alphas.empty()) throw std::invalid_argument("no learning rates given");
    for (double a : alphas)
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    check_probability(epsilon, "epsilon");
    check_probability(eval_epsilon, "evaluation epsilon");
    check_probability(gamma, "gamma");
    check_probability(kappa, "kappa");
    if (trials == 0) throw std::invalid_argument("trials must be at least 1");
    if (train_episodes == 0) throw std::invalid_argument("training episodes must be at least 1");
    switch (experiment) {
    case ExperimentKind::early:
    case ExperimentKind::converged:
        if (train_perturbations.empty()) throw std::invalid_argument("no training perturbations given");
        for (const auto& p : train_perturbations) p.validate();
        break;
    case ExperimentKind::attack:
    case ExperimentKind::robustness:
        if (ps.empty()) throw std::invalid_argument("no attack probabilities given");
        for (double p : ps) check_probability(p, "attack probability");
        if (eval_episodes == 0) throw std::invalid_argument("evaluation episodes must be at least 1");
        break;
    case ExperimentKind::path:
        if (kappas.empty()) throw std::invalid_argument("no kappa grid given");
        for (double k : kappas) check_probability(k, "kappa");
        break;
    }
}

ExperimentConfig default_experiment_config(ExperimentKind kind, std::string_view env) {
    ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.env = std::string(env);
    cfg.algorithms = {"q_learning", "sarsa", "esarsa", "q_kappa", "esarsa_kappa"};
    cfg.alphas = {0.1};
    switch (kind) {
    case ExperimentKind::early:
    case ExperimentKind::converged:
        cfg.alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
        cfg.train_perturbations = {PerturbationSpec::none(), PerturbationSpec::stochastic(0.1),
                                   PerturbationSpec::adversarial(0.1)};
        cfg.trials = kind == ExperimentKind::early ? 300 : 10;
        cfg.train_episodes = kind == ExperimentKind::early ? 100 : 100'000;
        break;
    case ExperimentKind::attack:
        cfg.ps = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2};
        break;
    case ExperimentKind::robustness:
        cfg.ps = {0.05, 0.075, 0.1, 0.125, 0.15, 0.2};
        break;
    case ExperimentKind::path:
        cfg.algorithms = {"q_kappa"};
        cfg.kappas = {0.0, 0.1, 0.3};
        cfg.trials = 1;
        break;
    }
    return cfg;
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (i < failed_index) {
                        failed_index = i;
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

std::uint64_t bits(double v) {
    std::uint64_t out;
    std::memcpy(&out, &v, sizeof out);
    return out;
}

KappaSpec kappa_for(TargetKind kind, double varkappa) {
    KappaSpec spec;
    spec.varkappa = uses_kappa(kind) ? varkappa : 0.0;
    spec.split = is_multi_agent(kind) ? AttackSplit::split_evenly_two : AttackSplit::single;
    return spec;
}

struct TrainJob {
    TargetKind target;
    double alpha;
    double kappa;
    PerturbationSpec pert;
    std::size_t trial;
};

struct TrainOutput {
    QTable q;
    double mean_return = 0.0;
    std::vector<std::uint64_t> state_visits;
};

// Training streams leave out the algorithm and varkappa so that every
// algorithm in a cell sees the same random numbers.
std::uint64_t train_seed(const ExperimentConfig& cfg, const TrainJob& job) {
    return derive_seed(cfg.seed, {stream_tag("train"), stream_tag(to_string(cfg.experiment)), stream_tag(cfg.env),
                                  bits(job.alpha), bits(cfg.epsilon), stream_tag(to_string(job.pert.kind)),
                                  bits(job.pert.p), job.trial});
}

std::uint64_t eval_seed(const ExperimentConfig& cfg, double p, std::size_t trial) {
    return derive_seed(cfg.seed, {stream_tag("eval"), stream_tag(to_string(cfg.experiment)), stream_tag(cfg.env),
                                  bits(p), trial});
}

std::string job_key(const TrainJob& j) {
    std::ostringstream out;
    out << to_string(j.target) << '|' << bits(j.alpha) << '|' << bits(j.kappa) << '|' << to_string(j.pert.kind)
        << '|' << bits(j.pert.p) << '|' << j.trial;
    return out.str();
}

// Deduplicated training jobs, run in parallel; results indexed like the job list.
class TrainingSet {
public:
    std::size_t add(const TrainJob& job) {
        auto [it, inserted] = index_.try_emplace(job_key(job), jobs_.size());
        if (inserted) jobs_.push_back(job);
        return it->second;
    }

    void run(const ExperimentConfig& cfg, const TabularEnv& env) {
        outputs_.assign(jobs_.size(), std::nullopt);
        parallel_for(jobs_.size(), cfg.threads, [&](std::size_t i) {
            const TrainJob& job = jobs_[i];
            LearnerConfig lc;
            lc.target = job.target;
            lc.alpha = job.alpha;
            lc.epsilon = cfg.epsilon;
            lc.gamma = cfg.gamma;
            lc.kappa = kappa_for(job.target, job.kappa);
            lc.episodes = cfg.train_episodes;
            lc.seed = train_seed(cfg, job);
            TrainResult r = train(env, lc, job.pert);
            double total = 0.0;
            for (double v : r.returns) total += v;
            outputs_[i] = TrainOutput{std::move(r.q), total / static_cast<double>(r.returns.size()),
                                      std::move(r.state_visits)};
        });
    }

    const TrainOutput& output(std::size_t i) const { return *outputs_[i]; }

private:
    std::vector<TrainJob> jobs_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::optional<TrainOutput>> outputs_;
};

CsvRow make_row(const ExperimentConfig& cfg, TargetKind target, double alpha, double kappa,
                const PerturbationSpec& pert, std::size_t trial, std::string metric, double value) {
    return CsvRow{std::string(to_string(cfg.experiment)),
                  cfg.env,
                  std::string(to_string(target)),
                  alpha,
                  cfg.epsilon,
                  uses_kappa(target) ? kappa : 0.0,
                  std::string(to_string(pert.kind)),
                  pert.p,
                  trial,
                  std::move(metric),
                  value};
}

void expect_kind(const ExperimentConfig& cfg, ExperimentKind kind) {
    if (cfg.experiment != kind)
        throw std::invalid_argument("configuration is for the " + std::string(to_string(cfg.experiment)) +
                                    " experiment, not " + std::string(to_string(kind)));
    cfg.validate();
}

std::vector<CsvRow> training_experiment(const ExperimentConfig& cfg, std::string_view metric) {
    const auto env = make_env(cfg.env);
    TrainingSet set;
    struct Cell {
        TargetKind target;
        double alpha;
        PerturbationSpec pert;
        std::size_t trial;
        std::size_t job;
    };
    std::vector<Cell> cells;
    for (const auto& pert : cfg.train_perturbations)
        for (double alpha : cfg.alphas)
            for (const auto& name : cfg.algorithms) {
                const TargetKind target = resolve_algorithm(name, cfg.env);
                for (std::size_t t = 0; t < cfg.trials; ++t)
                    cells.push_back({target, alpha, pert, t, set.add({target, alpha, cfg.kappa, pert, t})});
            }
    set.run(cfg, *env);
    std::vector<CsvRow> rows;
    rows.reserve(cells.size());
    for (const Cell& c : cells)
        rows.push_back(make_row(cfg, c.target, c.alpha, cfg.kappa, c.pert, c.trial, std::string(metric),
                                set.output(c.job).mean_return));
    return rows;
}

std::vector<CsvRow> evaluation_experiment(const ExperimentConfig& cfg, bool kappa_tracks_p) {
    const auto env = make_env(cfg.env);
    TrainingSet set;
    struct Cell {
        TargetKind target;
        double alpha;
        double kappa;
        double p;
        std::size_t trial;
        std::size_t job;
    };
    std::vector<Cell> cells;
    for (double p : cfg.ps)
        for (double alpha : cfg.alphas)
            for (const auto& name : cfg.algorithms) {
                const TargetKind target = resolve_algorithm(name, cfg.env);
                const double kappa = uses_kappa(target) ? (kappa_tracks_p ? p : cfg.kappa) : 0.0;
                for (std::size_t t = 0; t < cfg.trials; ++t)
                    cells.push_back(
                        {target, alpha, kappa, p, t, set.add({target, alpha, kappa, PerturbationSpec::none(), t})});
            }
    set.run(cfg, *env);
    std::vector<double> values(cells.size());
    parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
        const Cell& c = cells[i];
        Rng rng(eval_seed(cfg, c.p, c.trial));
        values[i] = evaluate(*env, set.output(c.job).q, cfg.eval_epsilon, PerturbationSpec::adversarial(c.p),
                             cfg.eval_episodes, rng)
                        .mean;
    });
    std::vector<CsvRow> rows;
    rows.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        rows.push_back(
            make_row(cfg, c.target, c.alpha, c.kappa, PerturbationSpec::adversarial(c.p), c.trial, "eval_return",
                     values[i]));
    }
    return rows;
}

} // namespace

std::vector<CsvRow> experiment_early(const ExperimentConfig& cfg) {
    expect_kind(cfg, ExperimentKind::early);
    return training_experiment(cfg, "early_return");
}

std::vector<CsvRow> experiment_converged(const ExperimentConfig& cfg) {
    expect_kind(cfg, ExperimentKind::converged);
    return training_experiment(cfg, "converged_return");
}

std::vector<CsvRow> experiment_attack_sweep(const ExperimentConfig& cfg) {
    expect_kind(cfg, ExperimentKind::attack);
    return evaluation_experiment(cfg, true);
}

std::vector<CsvRow> experiment_robustness(const ExperimentConfig& cfg) {
    expect_kind(cfg, ExperimentKind::robustness);
    return evaluation_experiment(cfg, false);
}

std::vector<CsvRow> experiment_path_figure(const ExperimentConfig& cfg) {
    expect_kind(cfg, ExperimentKind::path);
    const auto env = make_env(cfg.env);
    TrainingSet set;
    struct Cell {
        TargetKind target;
        double alpha;
        double kappa;
        std::size_t trial;
        std::size_t job;
    };
    std::vector<Cell> cells;
    for (double kappa : cfg.kappas)
        for (double alpha : cfg.alphas)
            for (const auto& name : cfg.algorithms) {
                const TargetKind target = resolve_algorithm(name, cfg.env);
                for (std::size_t t = 0; t < cfg.trials; ++t)
                    cells.push_back({target, alpha, kappa, t, set.add({target, alpha, kappa, PerturbationSpec::none(), t})});
            }
    set.run(cfg, *env);
    std::vector<CsvRow> rows;
    const PerturbationSpec none = PerturbationSpec::none();
    for (const Cell& c : cells) {
        const TrainOutput& out = set.output(c.job);
        const GreedyPath path = greedy_path(*env, out.q);
        // Rows keep varkappa even for kinds that ignore it, so every panel stays distinguishable.
        auto row = [&](std::string metric, double value) {
            CsvRow r = make_row(cfg, c.target, c.alpha, c.kappa, none, c.trial, std::move(metric), value);
            r.kappa = c.kappa;
            rows.push_back(std::move(r));
        };
        row("margin", path_safety_margin(env->map(), path.cells));
        row("path_length", static_cast<double>(path.cells.size() - 1));
        row("reached_goal", path.reached_goal ? 1.0 : 0.0);
        row("path_return", path.total_reward);
        for (std::size_t k = 0; k < path.cells.size(); ++k)
            row("path_cell_" + std::to_string(k), static_cast<double>(env->state_of(path.cells[k]).index));
        for (std::size_t s = 0; s < out.state_visits.size(); ++s)
            row("visits_" + std::to_string(s), static_cast<double>(out.state_visits[s]));
    }
    return rows;
}

namespace {

bool is_per_cell_metric(std::string_view metric) {
    return metric.starts_with("path_cell_") || metric.starts_with("visits_");
}

std::string cell_key(const CsvRow& r) {
    std::ostringstream out;
    out << r.experiment << ',' << r.env << ',' << r.algorithm << ',' << bits(r.alpha) << ',' << bits(r.epsilon)
        << ',' << bits(r.kappa) << ',' << r.perturbation << ',' << bits(r.p) << ',' << r.metric;
    return out.str();
}

} // namespace

std::vector<SummaryRow> summarize(const std::vector<CsvRow>& rows) {
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> values;
    std::map<std::string, std::size_t> index;
    for (const CsvRow& r : rows) {
        if (is_per_cell_metric(r.metric)) continue;
        auto [it, inserted] = index.try_emplace(cell_key(r), out.size());
        if (inserted) {
            SummaryRow s;
            s.key = r;
            s.key.trial = 0;
            s.key.value = 0.0;
            out.push_back(std::move(s));
            values.emplace_back();
        }
        values[it->second].push_back(r.value);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].stats = stats_aggregate(values[i]);
    return out;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
    out << kCsvHeader << '\n';
    for (const CsvRow& r : rows)
        out << r.experiment << ',' << r.env << ',' << r.algorithm << ',' << format_number(r.alpha) << ','
            << format_number(r.epsilon) << ',' << format_number(r.kappa) << ',' << r.perturbation << ','
            << format_number(r.p) << ',' << r.trial << ',' << r.metric << ',' << format_number(r.value) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
    out << kSummaryHeader << '\n';
    for (const SummaryRow& s : summary) {
        const CsvRow& r = s.key;
        out << r.experiment << ',' << r.env << ',' << r.algorithm << ',' << format_number(r.alpha) << ','
            << format_number(r.epsilon) << ',' << format_number(r.kappa) << ',' << r.perturbation << ','
            << format_number(r.p) << ',' << r.metric << ',' << s.stats.n << ',' << format_number(s.stats.mean)
            << ',' << format_number(s.stats.ci95_half_width) << '\n';
    }
}

namespace {

double parse_double(std::string_view text, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw std::runtime_error("line " + std::to_string(line) + ": bad number '" + std::string(text) + "'");
    return v;
}

} // namespace

std::vector<CsvRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("not a raw results CSV: bad header");
    std::vector<CsvRow> rows;
    for (std::size_t n = 2; std::getline(in, line); ++n) {
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest = line;
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
            f.push_back(rest.substr(0, pos));
        f.push_back(rest);
        if (f.size() != 11) throw std::runtime_error("line " + std::to_string(n) + ": expected 11 fields");
        CsvRow r;
        r.experiment = f[0];
        r.env = f[1];
        r.algorithm = f[2];
        r.alpha = parse_double(f[3], n);
        r.epsilon = parse_double(f[4], n);
        r.kappa = parse_double(f[5], n);
        r.perturbation = f[6];
        r.p = parse_double(f[7], n);
        const double trial = parse_double(f[8], n);
        if (trial < 0 || trial != static_cast<double>(static_cast<std::size_t>(trial)))
            throw std::runtime_error("line " + std::to_string(n) + ": bad trial index");
        r.trial = static_cast<std::size_t>(trial);
        r.metric = f[9];
        r.value = parse_double(f[10], n);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

std::string write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
    return path.string();
}

std::string series_label(const CsvRow& r) {
    if (r.experiment == "path") return r.algorithm + " kappa=" + format_number(r.kappa);
    return r.algorithm;
}

std::string render_figure(const std::vector<CsvRow>& rows, const std::vector<SummaryRow>& summary) {
    const CsvRow& first = rows.front();
    if (first.experiment == "path") {
        const auto env = make_env(first.env);
        std::vector<svg::HeatPanel> panels;
        std::map<std::string, std::size_t> index;
        for (const CsvRow& r : rows) {
            if (r.trial != 0) continue;
            auto [it, inserted] = index.try_emplace(series_label(r), panels.size());
            if (inserted) {
                svg::HeatPanel p;
                p.title = series_label(r);
                p.visits.assign(env->num_states(), 0.0);
                panels.push_back(std::move(p));
            }
            svg::HeatPanel& p = panels[it->second];
            if (r.metric.starts_with("visits_")) {
                const std::size_t s = std::stoul(r.metric.substr(7));
                if (s < p.visits.size()) p.visits[s] = r.value;
            } else if (r.metric.starts_with("path_cell_")) {
                p.path.push_back(env->cell_of(StateId{static_cast<std::size_t>(r.value)}));
            } else if (r.metric == "margin") {
                p.title += " margin=" + format_number(r.value);
            }
        }
        return svg::heatmaps(env->map(), panels);
    }

    const bool by_alpha = first.experiment == "early" || first.experiment == "converged";
    std::vector<svg::LinePanel> panels;
    std::map<std::string, std::size_t> panel_index;
    std::vector<std::map<std::string, std::size_t>> series_index;
    for (const SummaryRow& s : summary) {
        const CsvRow& k = s.key;
        const std::string panel = by_alpha ? k.perturbation + (k.perturbation == "none" ? "" : " p=" + format_number(k.p))
                                           : "alpha=" + format_number(k.alpha);
        auto [pit, pnew] = panel_index.try_emplace(panel, panels.size());
        if (pnew) {
            svg::LinePanel p;
            p.title = panel;
            p.xlabel = by_alpha ? "alpha" : "attack probability";
            p.ylabel = "mean return";
            p.log_x = first.experiment == "attack";
            panels.push_back(std::move(p));
            series_index.emplace_back();
        }
        svg::LinePanel& p = panels[pit->second];
        auto [sit, snew] = series_index[pit->second].try_emplace(series_label(k), p.series.size());
        if (snew) p.series.push_back(svg::Series{series_label(k), {}, {}, {}});
        svg::Series& series = p.series[sit->second];
        series.x.push_back(by_alpha ? k.alpha : k.p);
        series.mean.push_back(s.stats.mean);
        series.half_width.push_back(std::isnan(s.stats.ci95_half_width) ? 0.0 : s.stats.ci95_half_width);
    }
    return svg::line_charts(first.experiment + " " + first.env, panels);
}

std::vector<std::string> write_outputs(const std::vector<CsvRow>& rows, const std::vector<SummaryRow>& summary,
                                       const std::string& dir, bool write_raw) {
    if (rows.empty()) throw std::invalid_argument("no rows to write");
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    const std::string stem = rows.front().experiment + "_" + rows.front().env;
    std::vector<std::string> files;
    if (write_raw) {
        std::ostringstream raw;
        write_csv(raw, rows);
        files.push_back(write_text(base / (stem + ".csv"), raw.str()));
    }
    std::ostringstream sum;
    write_summary_csv(sum, summary);
    files.push_back(write_text(base / (stem + "_summary.csv"), sum.str()));
    files.push_back(write_text(base / (stem + ".svg"), render_figure(rows, summary)));
    return files;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result;
    switch (cfg.experiment) {
    case ExperimentKind::early: result.rows = experiment_early(cfg); break;
    case ExperimentKind::converged: result.rows = experiment_converged(cfg); break;
    case ExperimentKind::attack: result.rows = experiment_attack_sweep(cfg); break;
    case ExperimentKind::robustness: result.rows = experiment_robustness(cfg); break;
    case ExperimentKind::path: result.rows = experiment_path_figure(cfg); break;
    }
    result.summary = summarize(result.rows);
    return result;
}

std::vector<std::string> write_experiment_outputs(const ExperimentResult& result, const std::string& dir) {
    return write_outputs(result.rows, result.summary, dir, true);
}

FixedPointCheck check_fixed_point(const TabularEnv& env, const LearnerConfig& cfg, std::uint64_t min_visits) {
    const TrainResult r = train(env, cfg, PerturbationSpec::none());
    TargetKind reference = cfg.target == TargetKind::sarsa ? TargetKind::esarsa : cfg.target;
    KappaSpec spec = cfg.kappa;
    if (cfg.kappa_decay_steps > 0.0) spec.varkappa = 0.0;
    FixedPointResult fp = value_iterate(env, spec, reference, cfg.gamma, cfg.epsilon);
    if (!fp.converged) throw std::runtime_error("value iteration did not converge");
    FixedPointCheck out{0.0, 0, r.total_steps, r.q, std::move(fp.q_star)};
    const std::size_t width = env.action_shape().size();
    for (std::size_t s = 0; s < env.num_states(); ++s)
        for (std::size_t a = 0; a < width; ++a) {
            if (r.visits[s * width + a] < min_visits) continue;
            ++out.compared;
            out.distance = std::max(out.distance, std::abs(r.q(StateId{s}, ActionId{a}) - out.oracle(StateId{s}, ActionId{a})));
        }
    return out;
}

std::vector<std::string> plot_from_csv(const std::string& csv_path, const std::string& dir) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + csv_path);
    const std::vector<CsvRow> rows = read_csv(in);
    if (rows.empty()) throw std::runtime_error(csv_path + " has no data rows");
    return write_outputs(rows, summarize(rows), dir, false);
}

} // namespace robusttd
