#include "vlpfleet/sim_world.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "vlpfleet/pgm.hpp"

namespace vlp {

using nlohmann::json;

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Vec2 origin)
    : width_(width), height_(height), resolution_(resolution), origin_(origin) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (!(resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
    cells_.assign(static_cast<std::size_t>(width) * height, 0);
}

void OccupancyGrid::set_occupied(Cell c, bool value) {
    if (!in_bounds(c)) throw std::out_of_range("cell outside grid");
    cells_[index(c)] = value ? 1 : 0;
}

void OccupancyGrid::fill_box(Vec2 lo, Vec2 hi) {
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            const Vec2 p = center_of({c, r});
            if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y) cells_[index({c, r})] = 1;
        }
    }
}

Cell OccupancyGrid::cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
}

Vec2 OccupancyGrid::center_of(Cell c) const {
    return {origin_.x + (c.col + 0.5) * resolution_, origin_.y + (c.row + 0.5) * resolution_};
}

void OccupancyGrid::save(const std::filesystem::path& pgm, const std::filesystem::path& sidecar) const {
    PgmImage image;
    image.width = width_;
    image.height = height_;
    image.pixels.resize(cells_.size());
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c)
            image.pixels[static_cast<std::size_t>(height_ - 1 - r) * width_ + c] =
                cells_[index({c, r})] ? 0 : 255;
    write_pgm_image(pgm, image);
    std::ofstream meta(sidecar);
    if (!meta) throw std::runtime_error("cannot write " + sidecar.string());
    meta << json{{"resolution_m", resolution_}, {"origin_x_m", origin_.x}, {"origin_y_m", origin_.y}}
                .dump(2)
         << '\n';
}

OccupancyGrid OccupancyGrid::load(const std::filesystem::path& pgm, const std::filesystem::path& sidecar) {
    const PgmImage image = read_pgm_image(pgm);
    std::ifstream in(sidecar);
    if (!in) throw std::runtime_error("cannot open grid sidecar " + sidecar.string());
    json meta;
    try {
        meta = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("grid sidecar is not valid JSON: ") + e.what());
    }
    OccupancyGrid grid(image.width, image.height, meta.at("resolution_m").get<double>(),
                       {meta.value("origin_x_m", 0.0), meta.value("origin_y_m", 0.0)});
    for (int r = 0; r < grid.height_; ++r)
        for (int c = 0; c < grid.width_; ++c)
            grid.cells_[grid.index({c, r})] =
                image.pixels[static_cast<std::size_t>(grid.height_ - 1 - r) * grid.width_ + c] < 128;
    return grid;
}

OccupancyGrid default_arena() {
    constexpr double res = 0.05;
    // One ring of wall cells outside the platform; any cell centred off the platform is wall.
    const int width = static_cast<int>(std::ceil(kArenaWidth / res)) + 2;
    const int height = static_cast<int>(std::ceil(kArenaHeight / res)) + 2;
    OccupancyGrid grid(width, height, res, {-res, -res});
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const Vec2 p = grid.center_of({c, r});
            if (p.x < 0.0 || p.y < 0.0 || p.x > kArenaWidth || p.y > kArenaHeight)
                grid.set_occupied({c, r}, true);
        }
    }
    grid.fill_box({1.40, 3.50}, {2.00, 4.10});
    grid.fill_box({6.20, 0.70}, {7.00, 1.30});
    return grid;
}

LedBeacon default_beacon() { return LedBeacon{}; }

Scan raycast_scan(const Pose2D& pose, const OccupancyGrid& grid, int n_beams, double max_range) {
    const Cell start = grid.cell_of(pose.position());
    if (grid.occupied(start)) throw PoseInOccupiedCell();
    Scan scan;
    scan.max_range = max_range;
    scan.angles.resize(static_cast<std::size_t>(n_beams));
    scan.ranges.resize(static_cast<std::size_t>(n_beams));
    const double res = grid.resolution();
    const double gx = (pose.x - grid.origin().x) / res;
    const double gy = (pose.y - grid.origin().y) / res;
    const double limit = max_range / res;
    constexpr double inf = std::numeric_limits<double>::infinity();

    for (int i = 0; i < n_beams; ++i) {
        const double beam = 2.0 * std::numbers::pi * i / n_beams;
        scan.angles[static_cast<std::size_t>(i)] = beam;
        const double dx = std::cos(pose.theta + beam);
        const double dy = std::sin(pose.theta + beam);
        Cell cell = start;
        const int step_x = dx > 0 ? 1 : -1;
        const int step_y = dy > 0 ? 1 : -1;
        const double delta_x = dx != 0.0 ? std::abs(1.0 / dx) : inf;
        const double delta_y = dy != 0.0 ? std::abs(1.0 / dy) : inf;
        double next_x = dx != 0.0 ? ((dx > 0 ? cell.col + 1 - gx : gx - cell.col) * delta_x) : inf;
        double next_y = dy != 0.0 ? ((dy > 0 ? cell.row + 1 - gy : gy - cell.row) * delta_y) : inf;
        double range = max_range;
        while (true) {
            double t;
            if (next_x < next_y) {
                t = next_x;
                next_x += delta_x;
                cell.col += step_x;
            } else {
                t = next_y;
                next_y += delta_y;
                cell.row += step_y;
            }
            if (t > limit) break;
            if (grid.occupied(cell)) {
                range = std::min(max_range, t * res);
                break;
            }
        }
        scan.ranges[static_cast<std::size_t>(i)] = range;
    }
    return scan;
}

std::vector<Vec2> scan_endpoints(const Scan& scan, const Pose2D& pose) {
    std::vector<Vec2> points;
    points.reserve(scan.ranges.size());
    for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
        if (scan.ranges[i] >= scan.max_range) continue;
        const double a = pose.theta + scan.angles[i];
        points.push_back({pose.x + scan.ranges[i] * std::cos(a), pose.y + scan.ranges[i] * std::sin(a)});
    }
    return points;
}

bool in_coverage(const Pose2D& pose, const CameraModel& camera, const LedBeacon& beacon) {
    return project_led(pose, camera, beacon).has_value();
}

double coverage_radius(const CameraModel& camera, const LedBeacon& beacon) {
    const double h = beacon.height - camera.mount_height;
    return h / camera.fx * std::min(camera.cx, camera.width - 1 - camera.cx) - beacon.diameter / 2.0;
}

Vec2 perceived_point(const Pose2D& truth, const Pose2D& est, Vec2 p) {
    // Identity transform: skip the round trip so exact estimates give exactly zero.
    if (truth.x == est.x && truth.y == est.y && truth.theta == est.theta) return p;
    return to_world(est, to_local(truth, p));
}

BoundaryReport boundary_report(const Scan& scan_a, const Pose2D& truth_a, const Pose2D& est_a,
                               const Scan& scan_b, const Pose2D& truth_b, const Pose2D& est_b) {
    const auto pts_a = scan_endpoints(scan_a, truth_a);
    const auto pts_b = scan_endpoints(scan_b, truth_b);
    BoundaryReport report;
    for (const Vec2& pa : pts_a) {
        const Vec2* nearest = nullptr;
        double best = kBoundaryMatchRadius;
        for (const Vec2& pb : pts_b) {
            const double d = distance(pa, pb);
            if (d <= best) {
                best = d;
                nearest = &pb;
            }
        }
        if (!nearest) continue;
        // Both robots' views of the same physical point, taken midway between the hits.
        const Vec2 shared = 0.5 * (pa + *nearest);
        const double gap =
            distance(perceived_point(truth_a, est_a, shared), perceived_point(truth_b, est_b, shared));
        report.peak = std::max(report.peak, gap);
        ++report.matched;
    }
    if (report.matched == 0) throw NoCommonBoundary();
    return report;
}

double boundary_disagreement(const Scan& scan_a, const Pose2D& truth_a, const Pose2D& est_a,
                             const Scan& scan_b, const Pose2D& truth_b, const Pose2D& est_b) {
    return boundary_report(scan_a, truth_a, est_a, scan_b, truth_b, est_b).peak;
}

double boundary_error(const Scan& scan, const Pose2D& truth, const Pose2D& est) {
    double peak = 0.0;
    for (const Vec2& p : scan_endpoints(scan, truth))
        peak = std::max(peak, distance(perceived_point(truth, est, p), p));
    return peak;
}

RobotTruth& World::add_robot(const std::string& id, const Pose2D& start, std::uint64_t seed) {
    RobotTruth robot;
    robot.id = id;
    robot.pose = start;
    std::seed_seq seq{seed, static_cast<std::uint64_t>(robots.size()), std::uint64_t{0x5eed}};
    robot.rng.seed(seq);
    robots.push_back(std::move(robot));
    return robots.back();
}

void step(World& world, double dt) {
    if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("step dt must be in (0, 0.1]");
    const int n = std::max(1, world.substeps);
    const double h = dt / n;
    for (auto& robot : world.robots) {
        const double scale = motion_scale(robot.v, robot.omega, world.noise);
        const double sv = world.noise.sigma_v * std::sqrt(scale);
        const double sw = world.noise.sigma_omega * std::sqrt(scale);
        std::normal_distribution<double> unit(0.0, 1.0);
        const double v = robot.v + (sv > 0.0 ? sv * unit(robot.rng) : 0.0);
        const double omega = robot.omega + (sw > 0.0 ? sw * unit(robot.rng) : 0.0);
        robot.blocked = false;
        for (int k = 0; k < n; ++k) {
            Pose2D next = robot.pose;
            next.x += v * h * std::cos(robot.pose.theta);
            next.y += v * h * std::sin(robot.pose.theta);
            next.theta = normalize_angle(robot.pose.theta + omega * h);
            if (world.grid.occupied_at(next.position())) {
                robot.blocked = true;
                break;
            }
            robot.pose = next;
        }
    }
    world.time += dt;
}

}  // namespace vlp
