#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/fusion.hpp"
#include "vlpfleet/navigation.hpp"
#include "vlpfleet/pose_estimator.hpp"
#include "vlpfleet/protocol.hpp"
#include "vlpfleet/sim_world.hpp"

namespace vlp {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ScheduledGoal {
    Goal goal{};
    double after_s{0.0};  // not issued before this time, nor before the previous goal ends
};

/// Offset of the robot's initial belief from its true start pose.
struct InitialEstimate {
    double dx{0.0};
    double dy{0.0};
    double dtheta{0.0};
    double sigma_xy{0.01};
    double sigma_theta{0.005};
};

struct RobotSpec {
    std::string id;
    Pose2D start{};
    InitialEstimate estimate{};
    bool operator_goals{false};
    std::vector<ScheduledGoal> goals;
};

struct ScenarioConfig {
    std::string name{"custom"};
    OccupancyGrid grid;
    LedMap leds;
    CameraModel camera{};
    ProcessNoise noise{};
    NoiseParams pixel_noise{};
    std::uint64_t seed{1};
    double duration_s{60.0};
    double control_rate_hz{10.0};
    std::vector<RobotSpec> robots;
};

/// Parses a JSON scenario. Relative file paths resolve against base_dir.
/// Throws ConfigError naming the offending field, e.g. "robots[1].start.x".
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Robot A starts outside LED coverage with a misplaced belief and drives in; robot B
/// waits under the LED, then leaves once both have been measured together.
ScenarioConfig coverage_handoff(std::uint64_t seed);

/// Message channel between one simulated robot and a fleet host.
class RobotLink {
public:
    virtual ~RobotLink() = default;
    virtual void send(const WireMessage& msg) = 0;
    /// Messages received since the last call. Never blocks.
    virtual std::vector<WireMessage> receive() = 0;
};

struct RunOptions {
    std::optional<std::filesystem::path> metrics_csv;
    std::function<std::unique_ptr<RobotLink>(const std::string& robot_id)> link_factory;
    // Wall-clock seconds per simulated second; 0 runs as fast as possible.
    double realtime_factor{0.0};
    std::function<bool()> stop_requested;
};

struct RobotSummary {
    std::string id;
    std::optional<double> entry_error_m;        // first coverage entry from outside
    std::optional<double> corrected_error_m;    // after the third accepted fix of that visit
    std::optional<double> exit_error_m;         // first coverage exit
    std::size_t fixes_accepted{0};
    std::size_t fixes_rejected{0};
    std::size_t frames_decoded{0};
    std::size_t frames_failed{0};
    std::size_t unknown_led{0};
    std::size_t goals_issued{0};
    std::size_t goals_reached{0};
    std::size_t goals_rejected{0};
    std::optional<double> final_goal_error_m;   // true distance to the last reached goal
    double speed_sum_in{0.0};
    std::size_t ticks_in{0};
    double speed_sum_out{0.0};
    std::size_t ticks_out{0};
    std::optional<double> contribution_window_m;   // own boundary error during the shared window
    std::optional<double> contribution_after_m;    // after leaving coverage and driving >= 2 m
};

struct ScenarioSummary {
    std::string name;
    std::uint64_t seed{0};
    std::size_t ticks{0};
    std::vector<RobotSummary> robots;
    // Pairwise boundary disagreement of the first two robots while both are in coverage,
    // decoding and parked.
    std::optional<double> window_peak_m;
    std::size_t window_ticks{0};
    // Same, over every tick both are in coverage and decoding, driving or not.
    std::optional<double> shared_coverage_peak_m;
    double mean_speed_in{0.0};
    double mean_speed_out{0.0};

    nlohmann::json to_json() const;
};

inline constexpr double kPostExitTravel = 2.0;

ScenarioSummary run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Host-side decode of PGM frames: one JSON object per file in path order.
struct DecodeReport {
    std::vector<nlohmann::json> lines;
    bool all_parsed{true};
};

DecodeReport decode_images(const std::vector<std::filesystem::path>& files);
/// Expands a glob of the form dir/pattern (wildcards in the file name only), sorted.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

}  // namespace vlp
