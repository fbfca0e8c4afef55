#pragma once

#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "vlpfleet/geometry.hpp"
#include "vlpfleet/sim_world.hpp"

namespace vlp {

struct Path {
    std::vector<Vec2> waypoints;
    double total_length{0.0};
};

struct Goal {
    double x{0.0};
    double y{0.0};
    double tolerance{0.05};
};

enum class PlanErrc { NoPath, GoalInObstacle, StartInObstacle };

const char* to_string(PlanErrc code);

class PlanError : public std::runtime_error {
public:
    explicit PlanError(PlanErrc code) : std::runtime_error(to_string(code)), code_(code) {}
    PlanErrc code() const noexcept { return code_; }

private:
    PlanErrc code_;
};

inline constexpr double kRobotRadius = 0.11;

/// Cells whose centre is within `radius` of an occupied cell's centre become occupied.
OccupancyGrid inflate(const OccupancyGrid& grid, double radius);

struct GridSearchResult {
    std::vector<Cell> cells;
    double cost{0.0};  // in cell units: 1 per straight move, sqrt(2) per diagonal
};

/// 8-connected A* with octile heuristic; diagonal moves may not cut occupied corners.
/// Ties break on lower f, then lower h, then row-major cell order.
std::optional<GridSearchResult> astar(const OccupancyGrid& grid, Cell start, Cell goal);

/// Plans on the grid inflated by robot_radius. The last waypoint is the exact goal point.
Path plan_path(const OccupancyGrid& grid, double robot_radius, const Pose2D& start, const Goal& goal);
/// Same, reusing a grid that is already inflated.
Path plan_on_inflated(const OccupancyGrid& inflated, const Pose2D& start, const Goal& goal);

struct SteerLimits {
    double lookahead{0.3};
    double v_max{0.22};
    double omega_max{2.84};
};

struct VelocityCommand {
    double v{0.0};
    double omega{0.0};
};

struct Arrived {};

using SteerOutput = std::variant<VelocityCommand, Arrived>;

/// Pure pursuit toward the lookahead point. Arrived once within goal_tolerance of the
/// final waypoint.
SteerOutput steer(const Pose2D& pose, const Path& path, double goal_tolerance = 0.05,
                  const SteerLimits& limits = {});

/// Distance from a point to the nearest path segment.
double distance_to_path(const Path& path, Vec2 p);

}  // namespace vlp
