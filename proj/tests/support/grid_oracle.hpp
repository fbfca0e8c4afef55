#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

#include "vlpfleet/sim_world.hpp"

namespace vlp::fixtures {

// Path cost as (straight moves, diagonal moves); a + b*sqrt(2) is unique for integers.
struct MoveCount {
    int straight{0};
    int diagonal{0};
    double value() const { return straight + diagonal * std::numbers::sqrt2; }
    friend bool operator==(MoveCount, MoveCount) = default;
};

inline bool allowed(const OccupancyGrid& g, Cell from, int dc, int dr) {
    if (g.occupied({from.col + dc, from.row + dr})) return false;
    if (dc != 0 && dr != 0) return !g.occupied({from.col + dc, from.row}) && !g.occupied({from.col, from.row + dr});
    return true;
}

// Uniform-cost search over the same move set.
inline std::optional<MoveCount> dijkstra(const OccupancyGrid& g, Cell s, Cell t) {
    if (g.occupied(s) || g.occupied(t)) return std::nullopt;
    const int w = g.width();
    std::vector<double> dist(static_cast<std::size_t>(w) * g.height(), 1e300);
    std::vector<MoveCount> moves(dist.size());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[g.index(s)] = 0.0;
    pq.push({0.0, static_cast<int>(g.index(s))});
    while (!pq.empty()) {
        const auto [d, i] = pq.top();
        pq.pop();
        if (d > dist[i]) continue;
        const Cell c{i % w, i / w};
        for (int dc = -1; dc <= 1; ++dc) {
            for (int dr = -1; dr <= 1; ++dr) {
                if ((dc == 0 && dr == 0) || !allowed(g, c, dc, dr)) continue;
                const int j = static_cast<int>(g.index({c.col + dc, c.row + dr}));
                MoveCount m = moves[i];
                (dc != 0 && dr != 0 ? m.diagonal : m.straight) += 1;
                if (m.value() < dist[j] - 1e-9) {
                    dist[j] = m.value();
                    moves[j] = m;
                    pq.push({dist[j], j});
                }
            }
        }
    }
    if (dist[g.index(t)] > 1e299) return std::nullopt;
    return moves[g.index(t)];
}

inline MoveCount count_moves(const std::vector<Cell>& cells) {
    MoveCount m;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const int dc = std::abs(cells[i].col - cells[i - 1].col);
        const int dr = std::abs(cells[i].row - cells[i - 1].row);
        (dc && dr ? m.diagonal : m.straight) += 1;
    }
    return m;
}

}  // namespace vlp::fixtures
