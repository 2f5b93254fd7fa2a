#include "robusttd/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace robusttd {

ActionShape ActionShape::single(std::size_t num_actions) {
    if (num_actions == 0) throw std::invalid_argument("action space must not be empty");
    return ActionShape(num_actions, 1, false);
}

ActionShape ActionShape::joint(std::size_t num_a1, std::size_t num_a2) {
    if (num_a1 == 0 || num_a2 == 0) throw std::invalid_argument("action space must not be empty");
    return ActionShape(num_a1, num_a2, true);
}

ActionId ActionShape::flatten(JointAction ja) const {
    if (ja.a1.index >= a1_ || ja.a2.index >= a2_) throw std::out_of_range("joint action out of range");
    return ActionId{ja.a1.index * a2_ + ja.a2.index};
}

JointAction ActionShape::unflatten(ActionId a) const {
    if (a.index >= size()) throw std::out_of_range("action out of range");
    return JointAction{ActionId{a.index / a2_}, ActionId{a.index % a2_}};
}

QTable::QTable(std::size_t num_states, ActionShape shape, double initial_value)
    : num_states_(num_states), shape_(shape) {
    if (num_states == 0) throw std::invalid_argument("qtable needs at least one state");
    if (!std::isfinite(initial_value)) throw std::invalid_argument("qtable initial value must be finite");
    values_.assign(num_states * shape.size(), initial_value);
}

std::size_t QTable::offset(StateId s, ActionId a) const {
    if (s.index >= num_states_) throw std::out_of_range("state out of range");
    if (a.index >= shape_.size()) throw std::out_of_range("action out of range");
    return s.index * shape_.size() + a.index;
}

void QTable::set(StateId s, ActionId a, double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("qtable entries must be finite");
    values_[offset(s, a)] = value;
}

std::span<const double> QTable::row(StateId s) const {
    if (s.index >= num_states_) throw std::out_of_range("state out of range");
    return std::span<const double>(values_).subspan(s.index * shape_.size(), shape_.size());
}

QTable qtable_new(std::size_t num_states, ActionShape shape, double initial_value) {
    return QTable(num_states, shape, initial_value);
}

double sup_norm_distance(const QTable& a, const QTable& b) {
    if (a.num_states() != b.num_states() || !(a.shape() == b.shape()))
        throw std::invalid_argument("qtable shapes differ");
    double worst = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) worst = std::max(worst, std::abs(va[i] - vb[i]));
    return worst;
}

void write_qtable(std::ostream& out, const QTable& q) {
    out << "qtable " << q.num_states();
    if (q.shape().is_joint())
        out << ' ' << q.shape().agent1() << ' ' << q.shape().agent2();
    else
        out << ' ' << q.shape().agent1();
    out << '\n';
    char buf[32];
    for (std::size_t s = 0; s < q.num_states(); ++s) {
        auto row = q.row(StateId{s});
        for (std::size_t a = 0; a < row.size(); ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", row[a]);
            if (a) out << ' ';
            out << buf;
        }
        out << '\n';
    }
}

namespace {

std::size_t parse_count(const std::string& token) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value == 0)
        throw std::invalid_argument("qtable header: bad dimension '" + token + "'");
    return value;
}

} // namespace

QTable read_qtable(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("qtable: missing header");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "qtable") throw std::invalid_argument("qtable: bad header");
    std::vector<std::size_t> dims;
    for (std::string token; header >> token;) dims.push_back(parse_count(token));
    if (dims.size() != 2 && dims.size() != 3) throw std::invalid_argument("qtable: header needs 2 or 3 dimensions");

    ActionShape shape = dims.size() == 2 ? ActionShape::single(dims[1]) : ActionShape::joint(dims[1], dims[2]);
    QTable q(dims[0], shape);
    for (std::size_t s = 0; s < q.num_states(); ++s) {
        if (!std::getline(in, line)) throw std::invalid_argument("qtable: truncated at state " + std::to_string(s));
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t a = 0; a < q.num_actions(); ++a) {
            while (p < end && *p == ' ') ++p;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{}) throw std::invalid_argument("qtable: bad value on state " + std::to_string(s));
            q.set(StateId{s}, ActionId{a}, v);
            p = next;
        }
        while (p < end && *p == ' ') ++p;
        if (p != end) throw std::invalid_argument("qtable: too many values on state " + std::to_string(s));
    }
    return q;
}

void save_qtable(const std::filesystem::path& path, const QTable& q) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_qtable(out, q);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

QTable load_qtable(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_qtable(in);
}

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index over empty range");
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

std::uint64_t stream_tag(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <class Better>
std::size_t extreme_index(std::span<const double> values, Rng& rng, Better better) {
    if (values.empty()) throw std::invalid_argument("empty action row");
    std::size_t best = 0;
    std::size_t ties = 1;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (better(values[i], values[best])) {
            best = i;
            ties = 1;
        } else if (values[i] == values[best]) {
            ++ties;
        }
    }
    if (ties == 1) return best;
    std::size_t pick = rng.uniform_index(ties);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == values[best]) {
            if (pick == 0) return i;
            --pick;
        }
    }
    return best;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
    return h;
}

std::size_t argmax_index(std::span<const double> values, Rng& rng) {
    return extreme_index(values, rng, [](double a, double b) { return a > b; });
}

std::size_t argmin_index(std::span<const double> values, Rng& rng) {
    return extreme_index(values, rng, [](double a, double b) { return a < b; });
}

ActionId greedy_action(const QTable& q, StateId s, Rng& rng) { return ActionId{argmax_index(q.row(s), rng)}; }

ActionId min_action(const QTable& q, StateId s, Rng& rng) { return ActionId{argmin_index(q.row(s), rng)}; }

void check_probability(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0))
        throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

ActionId epsilon_greedy(const QTable& q, StateId s, double epsilon, Rng& rng) {
    check_probability(epsilon, "epsilon");
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
        if (s.index >= q.num_states()) throw std::out_of_range("state out of range");
        return ActionId{rng.uniform_index(q.num_actions())};
    }
    return greedy_action(q, s, rng);
}

std::vector<double> policy_probs(std::span<const double> values, double epsilon) {
    check_probability(epsilon, "epsilon");
    if (values.empty()) throw std::invalid_argument("empty action row");
    const double best = *std::max_element(values.begin(), values.end());
    const auto ties = static_cast<double>(std::count(values.begin(), values.end(), best));
    const double explore = epsilon / static_cast<double>(values.size());
    std::vector<double> probs(values.size(), explore);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] == best) probs[i] += (1.0 - epsilon) / ties;
    return probs;
}

std::vector<double> policy_probs(const QTable& q, StateId s, double epsilon) {
    return policy_probs(q.row(s), epsilon);
}

} // namespace robusttd
