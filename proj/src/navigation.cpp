#include "vlpfleet/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>

namespace vlp {

const char* to_string(PlanErrc code) {
    switch (code) {
        case PlanErrc::NoPath: return "NoPath";
        case PlanErrc::GoalInObstacle: return "GoalInObstacle";
        case PlanErrc::StartInObstacle: return "StartInObstacle";
    }
    return "Unknown";
}

OccupancyGrid inflate(const OccupancyGrid& grid, double radius) {
    OccupancyGrid out = grid;
    const int reach = static_cast<int>(std::floor(radius / grid.resolution()));
    const double limit2 = (radius / grid.resolution()) * (radius / grid.resolution());
    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) {
            if (!grid.occupied({c, r})) continue;
            for (int dr = -reach; dr <= reach; ++dr) {
                for (int dc = -reach; dc <= reach; ++dc) {
                    const Cell n{c + dc, r + dr};
                    if (dr * dr + dc * dc <= limit2 && out.in_bounds(n)) out.set_occupied(n, true);
                }
            }
        }
    }
    return out;
}

namespace {

constexpr int kMoves[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};

double octile(Cell a, Cell b) {
    const double dx = std::abs(a.col - b.col);
    const double dy = std::abs(a.row - b.row);
    return (dx + dy) + (std::numbers::sqrt2 - 2.0) * std::min(dx, dy);
}

bool move_allowed(const OccupancyGrid& grid, Cell from, int dc, int dr) {
    const Cell to{from.col + dc, from.row + dr};
    if (grid.occupied(to)) return false;
    if (dc != 0 && dr != 0)
        return !grid.occupied({from.col + dc, from.row}) && !grid.occupied({from.col, from.row + dr});
    return true;
}

}  // namespace

std::optional<GridSearchResult> astar(const OccupancyGrid& grid, Cell start, Cell goal) {
    if (grid.occupied(start) || grid.occupied(goal)) return std::nullopt;
    const std::size_t n = static_cast<std::size_t>(grid.width()) * grid.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> g(n, inf);
    std::vector<int> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);

    using Key = std::tuple<double, double, std::size_t>;  // f, h, row-major index
    std::priority_queue<Key, std::vector<Key>, std::greater<>> open;
    const std::size_t s = grid.index(start);
    const std::size_t t = grid.index(goal);
    g[s] = 0.0;
    open.emplace(octile(start, goal), octile(start, goal), s);

    while (!open.empty()) {
        const auto [f, h, idx] = open.top();
        open.pop();
        if (closed[idx]) continue;
        closed[idx] = 1;
        if (idx == t) break;
        const Cell cur{static_cast<int>(idx % grid.width()), static_cast<int>(idx / grid.width())};
        for (const auto& m : kMoves) {
            if (!move_allowed(grid, cur, m[0], m[1])) continue;
            const Cell next{cur.col + m[0], cur.row + m[1]};
            const std::size_t j = grid.index(next);
            if (closed[j]) continue;
            const double cost = g[idx] + ((m[0] != 0 && m[1] != 0) ? std::numbers::sqrt2 : 1.0);
            if (cost < g[j]) {
                g[j] = cost;
                parent[j] = static_cast<int>(idx);
                const double hn = octile(next, goal);
                open.emplace(cost + hn, hn, j);
            }
        }
    }
    if (!closed[t]) return std::nullopt;

    GridSearchResult result;
    result.cost = g[t];
    for (int idx = static_cast<int>(t); idx >= 0; idx = parent[static_cast<std::size_t>(idx)])
        result.cells.push_back({idx % grid.width(), idx / grid.width()});
    std::reverse(result.cells.begin(), result.cells.end());
    return result;
}

Path plan_on_inflated(const OccupancyGrid& inflated, const Pose2D& start, const Goal& goal) {
    const Cell goal_cell = inflated.cell_of({goal.x, goal.y});
    if (inflated.occupied(goal_cell)) throw PlanError(PlanErrc::GoalInObstacle);
    const Cell start_cell = inflated.cell_of(start.position());
    if (inflated.occupied(start_cell)) throw PlanError(PlanErrc::StartInObstacle);
    const auto found = astar(inflated, start_cell, goal_cell);
    if (!found) throw PlanError(PlanErrc::NoPath);

    Path path;
    for (const Cell& c : found->cells) path.waypoints.push_back(inflated.center_of(c));
    // The goal shares the last cell, so replacing the centre keeps waypoint spacing.
    path.waypoints.back() = {goal.x, goal.y};
    if (path.waypoints.size() == 1) path.waypoints.front() = {goal.x, goal.y};
    for (std::size_t i = 1; i < path.waypoints.size(); ++i)
        path.total_length += distance(path.waypoints[i - 1], path.waypoints[i]);
    return path;
}

Path plan_path(const OccupancyGrid& grid, double robot_radius, const Pose2D& start, const Goal& goal) {
    return plan_on_inflated(inflate(grid, robot_radius), start, goal);
}

double distance_to_path(const Path& path, Vec2 p) {
    if (path.waypoints.empty()) return std::numeric_limits<double>::infinity();
    double best = distance(path.waypoints.front(), p);
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        const Vec2 a = path.waypoints[i - 1];
        const Vec2 ab = path.waypoints[i] - a;
        const double len2 = ab.x * ab.x + ab.y * ab.y;
        const double s = len2 > 0.0 ? std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, distance(a + s * ab, p));
    }
    return best;
}

SteerOutput steer(const Pose2D& pose, const Path& path, double goal_tolerance, const SteerLimits& limits) {
    if (path.waypoints.empty()) throw std::invalid_argument("steer needs a non-empty path");
    const Vec2 here = pose.position();
    if (distance(here, path.waypoints.back()) <= goal_tolerance) return Arrived{};

    std::size_t closest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
        const double d = distance(here, path.waypoints[i]);
        if (d < best) {
            best = d;
            closest = i;
        }
    }
    std::size_t target = path.waypoints.size() - 1;
    double along = 0.0;
    for (std::size_t i = closest + 1; i < path.waypoints.size(); ++i) {
        along += distance(path.waypoints[i - 1], path.waypoints[i]);
        if (along >= limits.lookahead) {
            target = i;
            break;
        }
    }

    const Vec2 local = to_local(pose, path.waypoints[target]);
    const double alpha = std::atan2(local.y, local.x);
    const double dist = local.norm();
    VelocityCommand cmd;
    if (std::abs(alpha) > std::numbers::pi / 2) {
        // Target behind: turn in place.
        cmd.omega = std::copysign(std::min(limits.omega_max, 1.0), alpha);
        return cmd;
    }
    cmd.v = limits.v_max;
    if (std::abs(alpha) > std::numbers::pi / 4)
        cmd.v *= std::max(0.2, (std::numbers::pi / 2 - std::abs(alpha)) / (std::numbers::pi / 4));
    const double curvature = 2.0 * std::sin(alpha) / dist;
    cmd.omega = std::clamp(cmd.v * curvature, -limits.omega_max, limits.omega_max);
    return cmd;
}

}  // namespace vlp
