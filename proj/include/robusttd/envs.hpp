#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "robusttd/core.hpp"

namespace robusttd {

enum class CellKind : char { free = '.', hazard = 'C', start = 'S', goal = 'G' };

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(Cell, Cell) = default;
};

/// Rectangular grid with exactly one start and one goal. Construction
/// validates the layout, including that the goal is reachable from the start
/// by unit moves that avoid hazards.
class GridMap {
public:
    GridMap(int width, int height, std::vector<CellKind> cells);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool contains(Cell c) const noexcept { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }
    CellKind at(Cell c) const;
    bool is_hazard(Cell c) const { return at(c) == CellKind::hazard; }
    Cell start() const noexcept { return start_; }
    Cell goal() const noexcept { return goal_; }
    const std::vector<Cell>& hazards() const noexcept { return hazards_; }

private:
    int width_;
    int height_;
    std::vector<CellKind> cells_;
    Cell start_;
    Cell goal_;
    std::vector<Cell> hazards_;
};

/// Parses `S`, `G`, `C` (hazard) and `.` rows separated by `\n`.
GridMap load_map(std::string_view text);
GridMap load_map_file(const std::string& path);
std::string render_map(const GridMap& map);
// Strips carriage returns and trailing blank lines, terminates every row with `\n`.
std::string normalize_map_text(std::string_view text);

struct Displacement {
    int drow = 0;
    int dcol = 0;
};

/// Displacement per flattened action index.
struct ActionModel {
    ActionShape shape;
    std::vector<Displacement> moves;

    // {up, down, left, right}
    static ActionModel four_moves();
    // Agent 1 {stay, down, up} x agent 2 {stay, left, right, right-by-2},
    // combined as a vector sum.
    static ActionModel puddle_joint();
};

struct StepResult {
    StateId next;
    double reward = 0.0;
    bool done = false;
};

inline constexpr double kStepReward = -1.0;
inline constexpr double kHazardReward = -100.0;
inline constexpr std::size_t kEpisodeStepCap = 100'000;

/// Finite episodic environment. Transitions are deterministic; stochastic
/// failures and attacks are injected by the caller at execution time.
class TabularEnv {
public:
    virtual ~TabularEnv() = default;

    virtual std::size_t num_states() const = 0;
    virtual const ActionShape& action_shape() const = 0;
    virtual StateId start_state() const = 0;
    virtual bool is_terminal(StateId s) const = 0;
    // Throws std::logic_error when s is terminal.
    virtual StepResult step(StateId s, ActionId a) const = 0;
    // True when step() may be queried for arbitrary (s, a) as a model.
    virtual bool has_model() const { return true; }

    StateId reset() const { return start_state(); }
    StepResult step(StateId s, JointAction ja) const { return step(s, action_shape().flatten(ja)); }
};

/// Grid world shared by Cliff Walking and Puddle World: entering a hazard
/// costs kHazardReward and returns to the start without ending the episode,
/// every other move costs kStepReward, off-grid components clamp to the
/// boundary, and entering the goal ends the episode.
class GridEnv final : public TabularEnv {
public:
    GridEnv(GridMap map, ActionModel model, std::string name);

    std::size_t num_states() const override;
    const ActionShape& action_shape() const override { return model_.shape; }
    StateId start_state() const override { return state_of(map_.start()); }
    bool is_terminal(StateId s) const override { return cell_of(s) == map_.goal(); }
    StepResult step(StateId s, ActionId a) const override;
    using TabularEnv::step;

    const GridMap& map() const noexcept { return map_; }
    const ActionModel& model() const noexcept { return model_; }
    const std::string& name() const noexcept { return name_; }

    StateId state_of(Cell c) const;
    Cell cell_of(StateId s) const;

private:
    GridMap map_;
    ActionModel model_;
    std::string name_;
};

extern const std::string_view kCliffMapText;
extern const std::string_view kPuddleMapText;

GridEnv make_cliff_walking();
GridEnv make_cliff_walking(GridMap map);
GridEnv make_puddle_world();
GridEnv make_puddle_world(GridMap map);

/// "cliff" or "puddle"; an optional map text replaces the default layout.
std::unique_ptr<GridEnv> make_env(std::string_view name, std::string_view map_text = {});

} // namespace robusttd
