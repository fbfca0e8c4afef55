#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpfleet/beacon_codec.hpp"
#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/fusion.hpp"
#include "vlpfleet/geometry.hpp"

namespace vlp {

struct Cell {
    int col{0};
    int row{0};
    friend bool operator==(Cell, Cell) = default;
};

/// Row 0 is the southern edge (smallest y). Cells outside the grid count as occupied.
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(int width, int height, double resolution, Vec2 origin);

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }
    Vec2 origin() const { return origin_; }

    bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
    bool occupied(Cell c) const { return !in_bounds(c) || cells_[index(c)] != 0; }
    bool occupied_at(Vec2 p) const { return occupied(cell_of(p)); }
    void set_occupied(Cell c, bool value);
    /// Marks every cell whose center falls inside the axis-aligned box.
    void fill_box(Vec2 lo, Vec2 hi);

    Cell cell_of(Vec2 p) const;
    Vec2 center_of(Cell c) const;
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * width_ + c.col; }
    const std::vector<std::uint8_t>& cells() const { return cells_; }

    /// PGM P5 (0 = occupied, 255 = free, top image row = largest y) plus JSON sidecar
    /// {resolution_m, origin_x_m, origin_y_m} at `<path>.json` by default.
    void save(const std::filesystem::path& pgm, const std::filesystem::path& sidecar) const;
    static OccupancyGrid load(const std::filesystem::path& pgm, const std::filesystem::path& sidecar);

private:
    int width_{0};
    int height_{0};
    double resolution_{0.05};
    Vec2 origin_{};
    std::vector<std::uint8_t> cells_;
};

inline constexpr double kArenaWidth = 8.32;
inline constexpr double kArenaHeight = 4.80;

/// 8.32 m x 4.80 m platform at 5 cm resolution, closed walls, two storage boxes.
OccupancyGrid default_arena();
/// The single ceiling LED of the default arena.
LedBeacon default_beacon();

struct Scan {
    std::vector<double> angles;  // robot frame
    std::vector<double> ranges;
    double max_range{3.5};
};

class PoseInOccupiedCell : public std::runtime_error {
public:
    PoseInOccupiedCell() : std::runtime_error("pose lies in an occupied cell") {}
};

Scan raycast_scan(const Pose2D& pose, const OccupancyGrid& grid, int n_beams = 360,
                  double max_range = 3.5);

/// World-frame hit points of a scan taken from `pose`; max-range beams are dropped.
std::vector<Vec2> scan_endpoints(const Scan& scan, const Pose2D& pose);

bool in_coverage(const Pose2D& pose, const CameraModel& camera, const LedBeacon& beacon);

/// Half-width of the coverage region along the camera x-axis.
double coverage_radius(const CameraModel& camera, const LedBeacon& beacon);

class NoCommonBoundary : public std::runtime_error {
public:
    NoCommonBoundary() : std::runtime_error("no wall point observed by both robots") {}
};

/// Where a robot believes a wall point is: T(est) * T(truth)^-1 * p.
Vec2 perceived_point(const Pose2D& truth, const Pose2D& est, Vec2 p);

struct BoundaryReport {
    double peak{0.0};
    std::size_t matched{0};
};

inline constexpr double kBoundaryMatchRadius = 0.05;

/// Peak distance between the two robots' perceived locations of shared wall points.
/// Throws NoCommonBoundary when no endpoint pair lies within the match radius.
BoundaryReport boundary_report(const Scan& scan_a, const Pose2D& truth_a, const Pose2D& est_a,
                               const Scan& scan_b, const Pose2D& truth_b, const Pose2D& est_b);

double boundary_disagreement(const Scan& scan_a, const Pose2D& truth_a, const Pose2D& est_a,
                             const Scan& scan_b, const Pose2D& truth_b, const Pose2D& est_b);

/// Peak distance between one robot's perceived boundary and the map boundary.
double boundary_error(const Scan& scan, const Pose2D& truth, const Pose2D& est);

struct RobotTruth {
    std::string id;
    Pose2D pose;
    double v{0.0};
    double omega{0.0};
    bool blocked{false};
    std::mt19937_64 rng;
};

struct World {
    OccupancyGrid grid;
    std::vector<RobotTruth> robots;
    ProcessNoise noise{};
    double time{0.0};
    int substeps{10};

    /// Adds a robot whose noise stream is derived from (seed, robot index).
    RobotTruth& add_robot(const std::string& id, const Pose2D& start, std::uint64_t seed);
};

/// Advances every robot by dt in (0, 0.1] with seeded actuation noise; motion halts
/// at the last free sub-step before an occupied cell.
void step(World& world, double dt);

}  // namespace vlp
