#include "robusttd/envs.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "robusttd/oracle.hpp"

namespace robusttd {

namespace {

bool valid_cell_char(char c) { return c == '.' || c == 'C' || c == 'S' || c == 'G'; }

} // namespace

GridMap::GridMap(int width, int height, std::vector<CellKind> cells)
    : width_(width), height_(height), cells_(std::move(cells)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("map dimensions must be positive");
    if (cells_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument("map cell count does not match dimensions");
    int starts = 0;
    int goals = 0;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            switch (cells_[static_cast<std::size_t>(r * width + c)]) {
            case CellKind::start: start_ = {r, c}; ++starts; break;
            case CellKind::goal: goal_ = {r, c}; ++goals; break;
            case CellKind::hazard: hazards_.push_back({r, c}); break;
            case CellKind::free: break;
            }
        }
    }
    if (starts == 0) throw std::invalid_argument("missing start");
    if (starts > 1) throw std::invalid_argument("duplicate start");
    if (goals == 0) throw std::invalid_argument("missing goal");
    if (goals > 1) throw std::invalid_argument("duplicate goal");
    try {
        bfs_shortest_path(*this, ActionModel::four_moves());
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("no safe path from start to goal");
    }
}

CellKind GridMap::at(Cell c) const {
    if (!contains(c)) throw std::out_of_range("cell out of bounds");
    return cells_[static_cast<std::size_t>(c.row * width_ + c.col)];
}

std::string normalize_map_text(std::string_view text) {
    std::vector<std::string> rows;
    std::string current;
    for (char ch : text) {
        if (ch == '\r') continue;
        if (ch == '\n') {
            rows.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) rows.push_back(std::move(current));
    while (!rows.empty() && rows.back().empty()) rows.pop_back();
    std::string out;
    for (const auto& r : rows) {
        out += r;
        out += '\n';
    }
    return out;
}

GridMap load_map(std::string_view text) {
    const std::string normalized = normalize_map_text(text);
    std::vector<std::string> rows;
    std::istringstream in(normalized);
    for (std::string line; std::getline(in, line);) rows.push_back(line);
    if (rows.empty()) throw std::invalid_argument("empty map");
    const std::size_t width = rows.front().size();
    if (width == 0) throw std::invalid_argument("empty map row");
    std::vector<CellKind> cells;
    cells.reserve(width * rows.size());
    for (const auto& r : rows) {
        if (r.size() != width) throw std::invalid_argument("non-rectangular map");
        for (char ch : r) {
            if (!valid_cell_char(ch)) throw std::invalid_argument(std::string("unknown map character '") + ch + "'");
            cells.push_back(static_cast<CellKind>(ch));
        }
    }
    return GridMap(static_cast<int>(width), static_cast<int>(rows.size()), std::move(cells));
}

GridMap load_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open map " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return load_map(buf.str());
}

std::string render_map(const GridMap& map) {
    std::string out;
    out.reserve(static_cast<std::size_t>((map.width() + 1) * map.height()));
    for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c) out.push_back(static_cast<char>(map.at({r, c})));
        out.push_back('\n');
    }
    return out;
}

ActionModel ActionModel::four_moves() {
    return ActionModel{ActionShape::single(4), {{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
}

ActionModel ActionModel::puddle_joint() {
    const int vertical[] = {0, 1, -1};
    const int horizontal[] = {0, -1, 1, 2};
    ActionModel m{ActionShape::joint(3, 4), {}};
    for (int v : vertical)
        for (int h : horizontal) m.moves.push_back({v, h});
    return m;
}

GridEnv::GridEnv(GridMap map, ActionModel model, std::string name)
    : map_(std::move(map)), model_(std::move(model)), name_(std::move(name)) {
    if (model_.moves.size() != model_.shape.size())
        throw std::invalid_argument("action model size does not match its shape");
}

std::size_t GridEnv::num_states() const {
    return static_cast<std::size_t>(map_.width()) * static_cast<std::size_t>(map_.height());
}

StateId GridEnv::state_of(Cell c) const {
    if (!map_.contains(c)) throw std::out_of_range("cell out of bounds");
    return StateId{static_cast<std::size_t>(c.row * map_.width() + c.col)};
}

Cell GridEnv::cell_of(StateId s) const {
    if (s.index >= num_states()) throw std::out_of_range("state out of range");
    const int idx = static_cast<int>(s.index);
    return Cell{idx / map_.width(), idx % map_.width()};
}

StepResult GridEnv::step(StateId s, ActionId a) const {
    const Cell here = cell_of(s);
    if (here == map_.goal()) throw std::logic_error("step from terminal state");
    if (a.index >= model_.moves.size()) throw std::out_of_range("action out of range");
    const Displacement d = model_.moves[a.index];
    const Cell target{std::clamp(here.row + d.drow, 0, map_.height() - 1),
                      std::clamp(here.col + d.dcol, 0, map_.width() - 1)};
    switch (map_.at(target)) {
    case CellKind::hazard: return {start_state(), kHazardReward, false};
    case CellKind::goal: return {state_of(target), kStepReward, true};
    default: return {state_of(target), kStepReward, false};
    }
}

const std::string_view kCliffMapText =
    "............\n"
    "............\n"
    "............\n"
    "SCCCCCCCCCCG\n";

const std::string_view kPuddleMapText =
    "S...CC....\n"
    "....CC....\n"
    "....CC....\n"
    "....CCCCCC\n"
    "..........\n"
    "..........\n"
    "..........\n"
    "..........\n"
    "..........\n"
    ".........G\n";

GridEnv make_cliff_walking(GridMap map) { return GridEnv(std::move(map), ActionModel::four_moves(), "cliff"); }
GridEnv make_cliff_walking() { return make_cliff_walking(load_map(kCliffMapText)); }
GridEnv make_puddle_world(GridMap map) { return GridEnv(std::move(map), ActionModel::puddle_joint(), "puddle"); }
GridEnv make_puddle_world() { return make_puddle_world(load_map(kPuddleMapText)); }

std::unique_ptr<GridEnv> make_env(std::string_view name, std::string_view map_text) {
    if (name == "cliff")
        return std::make_unique<GridEnv>(map_text.empty() ? make_cliff_walking() : make_cliff_walking(load_map(map_text)));
    if (name == "puddle")
        return std::make_unique<GridEnv>(map_text.empty() ? make_puddle_world() : make_puddle_world(load_map(map_text)));
    throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

} // namespace robusttd
