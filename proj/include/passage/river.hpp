#pragma once

// River gridworld generator: a width x height grid of drift states
// flowing left to right, a single port cell as the goal, and the whole
// last column as fail states (the waterfall). From every other cell the
// candidate moves are up-right diagonal, right, down-right diagonal and
// straight back left; moves blocked by a bank, the grid edge or an
// island redistribute their probability equally over the available ones.

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "passage/chain.hpp"

namespace passage {

struct RiverConfig {
    int width = 50;
    int height = 10;
    int port_row = 0;   // top/left bank
    int port_col = 35;  // estimate; the source figure gives no coordinates
    std::set<std::pair<int, int>> obstacles;  // (row, col) island cells
    double p_forward_each = 0.3;
    double p_back = 0.1;
    int t_diag = 2;
    int t_forward = 1;
    int t_back = 5;
};

/// Bidirectional state <-> cell mapping for a generated river.
struct Layout {
    std::vector<std::pair<int, int>> cell_of_state;  // state -> (row, col)
    std::map<std::pair<int, int>, int> state_of_cell;

    int state_at(int row, int col) const {
        auto it = state_of_cell.find({row, col});
        if (it == state_of_cell.end()) throw std::invalid_argument("no state at that cell");
        return it->second;
    }
};

inline void validate_river_config(const RiverConfig& cfg) {
    if (cfg.width < 2 || cfg.height < 1)
        throw std::invalid_argument("grid must be at least 2 columns by 1 row");
    if (std::abs(3.0 * cfg.p_forward_each + cfg.p_back - 1.0) > 1e-9)
        throw std::invalid_argument("3*p_forward_each + p_back must equal 1");
    if (cfg.p_forward_each < 0.0 || cfg.p_back < 0.0)
        throw std::invalid_argument("move probabilities must be non-negative");
    if (cfg.t_diag < 1 || cfg.t_forward < 1 || cfg.t_back < 1)
        throw std::invalid_argument("move times must be >= 1");
    if (cfg.port_row < 0 || cfg.port_row >= cfg.height || cfg.port_col < 0 ||
        cfg.port_col >= cfg.width)
        throw std::invalid_argument("port outside the grid");
    if (cfg.port_col == cfg.width - 1)
        throw std::invalid_argument("port must not be in the waterfall column");
    if (cfg.obstacles.count({cfg.port_row, cfg.port_col}))
        throw std::invalid_argument("port cell is an obstacle");
    for (const auto& [r, c] : cfg.obstacles)
        if (r < 0 || r >= cfg.height || c < 0 || c >= cfg.width)
            throw std::invalid_argument("obstacle outside the grid");
}

inline std::pair<Chain, Layout> build_river(const RiverConfig& cfg) {
    validate_river_config(cfg);

    Layout layout;
    for (int r = 0; r < cfg.height; ++r)
        for (int c = 0; c < cfg.width; ++c) {
            if (cfg.obstacles.count({r, c})) continue;
            layout.state_of_cell[{r, c}] = static_cast<int>(layout.cell_of_state.size());
            layout.cell_of_state.emplace_back(r, c);
        }

    const int n = static_cast<int>(layout.cell_of_state.size());
    Chain chain;
    chain.num_states = n;
    chain.out.resize(n);
    chain.goal.assign(n, false);
    chain.fail.assign(n, false);

    struct Move {
        int dr, dc;
        double prob;
        int time;
    };
    const Move moves[4] = {
        {-1, 1, cfg.p_forward_each, cfg.t_diag},  // up-right diagonal
        {0, 1, cfg.p_forward_each, cfg.t_forward},
        {1, 1, cfg.p_forward_each, cfg.t_diag},
        {0, -1, cfg.p_back, cfg.t_back},
    };

    for (int x = 0; x < n; ++x) {
        const auto [r, c] = layout.cell_of_state[x];
        if (r == cfg.port_row && c == cfg.port_col) {
            chain.goal[x] = true;
            continue;
        }
        if (c == cfg.width - 1) {
            chain.fail[x] = true;
            continue;
        }

        std::vector<Move> available;
        double blocked_mass = 0.0;
        for (const Move& m : moves) {
            const int nr = r + m.dr, nc = c + m.dc;
            const bool ok = nr >= 0 && nr < cfg.height && nc >= 0 && nc < cfg.width &&
                            !cfg.obstacles.count({nr, nc});
            if (ok)
                available.push_back(m);
            else
                blocked_mass += m.prob;
        }
        if (available.empty())
            throw std::invalid_argument("cell (" + std::to_string(r) + "," + std::to_string(c) +
                                        ") has no available moves");

        const double share = blocked_mass / static_cast<double>(available.size());
        for (const Move& m : available)
            chain.out[x].push_back(
                Edge{layout.state_at(r + m.dr, c + m.dc), m.prob + share, m.time});
        std::sort(chain.out[x].begin(), chain.out[x].end(),
                  [](const Edge& a, const Edge& b) { return a.to < b.to; });
    }
    return {std::move(chain), std::move(layout)};
}

}  // namespace passage
