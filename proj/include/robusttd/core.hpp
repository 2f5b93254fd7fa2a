#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace robusttd {

struct StateId {
    std::size_t index = 0;
    friend bool operator==(StateId, StateId) = default;
};

struct ActionId {
    std::size_t index = 0;
    friend bool operator==(ActionId, ActionId) = default;
};

struct JointAction {
    ActionId a1;
    ActionId a2;
    friend bool operator==(const JointAction&, const JointAction&) = default;
};

/// Action space of a single agent, or the product space of two agents.
/// Joint actions are flattened row-major: index = a1 * |A2| + a2.
class ActionShape {
public:
    static ActionShape single(std::size_t num_actions);
    static ActionShape joint(std::size_t num_a1, std::size_t num_a2);

    bool is_joint() const noexcept { return joint_; }
    std::size_t size() const noexcept { return a1_ * a2_; }
    std::size_t agent1() const noexcept { return a1_; }
    // 1 for single-agent shapes.
    std::size_t agent2() const noexcept { return a2_; }

    ActionId flatten(JointAction ja) const;
    JointAction unflatten(ActionId a) const;

    friend bool operator==(const ActionShape&, const ActionShape&) = default;

private:
    ActionShape(std::size_t a1, std::size_t a2, bool joint) : a1_(a1), a2_(a2), joint_(joint) {}
    std::size_t a1_ = 1;
    std::size_t a2_ = 1;
    bool joint_ = false;
};

/// Dense action-value table. Shape is fixed at construction and every entry
/// stays finite.
class QTable {
public:
    QTable(std::size_t num_states, ActionShape shape, double initial_value = 0.0);

    std::size_t num_states() const noexcept { return num_states_; }
    const ActionShape& shape() const noexcept { return shape_; }
    std::size_t num_actions() const noexcept { return shape_.size(); }

    double operator()(StateId s, ActionId a) const { return values_[offset(s, a)]; }
    double operator()(StateId s, JointAction ja) const { return (*this)(s, shape_.flatten(ja)); }
    void set(StateId s, ActionId a, double value);

    std::span<const double> row(StateId s) const;
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    std::size_t offset(StateId s, ActionId a) const;

    std::size_t num_states_;
    ActionShape shape_;
    std::vector<double> values_;
};

QTable qtable_new(std::size_t num_states, ActionShape shape, double initial_value = 0.0);

/// Largest absolute entry-wise difference; shapes must match.
double sup_norm_distance(const QTable& a, const QTable& b);

// Text persistence: header `qtable <num_states> <dims...>` followed by one
// line per state, values printed with 17 significant digits.
void write_qtable(std::ostream& out, const QTable& q);
QTable read_qtable(std::istream& in);
void save_qtable(const std::filesystem::path& path, const QTable& q);
QTable load_qtable(const std::filesystem::path& path);

/// Seeded random stream. Equal seeds give equal draw sequences.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // Uniform in {0, ..., n-1}; n must be positive.
    std::size_t uniform_index(std::size_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Stable 64-bit tag for a stream name (FNV-1a).
std::uint64_t stream_tag(std::string_view name);

/// Derives an independent stream seed from a base seed and a path of tags.
/// The mapping depends only on its arguments, so new draw sites never shift
/// existing streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

// Index selection over a row of values; ties are broken uniformly at random.
// The rng is consumed only when a tie actually occurs.
std::size_t argmax_index(std::span<const double> values, Rng& rng);
std::size_t argmin_index(std::span<const double> values, Rng& rng);

ActionId greedy_action(const QTable& q, StateId s, Rng& rng);
ActionId min_action(const QTable& q, StateId s, Rng& rng);

/// With probability epsilon a uniform action (which may be the greedy one),
/// otherwise greedy_action.
ActionId epsilon_greedy(const QTable& q, StateId s, double epsilon, Rng& rng);

/// Distribution of epsilon_greedy: epsilon/|A| on every action plus
/// (1 - epsilon) split evenly among the maximizers.
std::vector<double> policy_probs(const QTable& q, StateId s, double epsilon);
std::vector<double> policy_probs(std::span<const double> values, double epsilon);

void check_probability(double value, const char* what);

} // namespace robusttd
