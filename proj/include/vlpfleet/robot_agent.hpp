#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/fusion.hpp"
#include "vlpfleet/navigation.hpp"
#include "vlpfleet/pose_estimator.hpp"
#include "vlpfleet/sim_world.hpp"
#include "vlpfleet/vlp_decoder.hpp"

namespace vlp {

struct AgentConfig {
    std::string id;
    CameraModel camera{};
    LedMap led_map{};
    DecoderParams decoder{};
    ProcessNoise process{};
    SteerLimits limits{};
    double robot_radius{kRobotRadius};
    // Fused pose this far from the current path triggers a replan.
    double replan_distance{0.25};
};

enum class GoalState { Active, Reached, Rejected };

const char* to_string(GoalState state);

struct GoalEvent {
    GoalState state{GoalState::Active};
    Goal goal{};
    std::string reason;
};

struct TickReport {
    std::optional<PositionFix> fix;  // fix applied this tick (from the previous tick's frame)
    bool fix_accepted{false};
    std::optional<DecodeDiag> diagnostic;  // decode outcome of the frame captured this tick
    bool unknown_led{false};
    bool replanned{false};
    VelocityCommand command{};
    std::vector<GoalEvent> events;
};

/// One robot's onboard loop: decode -> fix -> fusion -> steer at the control rate.
/// A frame decoded at tick k yields its fix at tick k+1; the fix is applied to the
/// estimate at capture time and then re-predicted with the odometry since.
class RobotAgent {
public:
    RobotAgent(AgentConfig config, std::shared_ptr<const OccupancyGrid> inflated, FusedState initial);

    const std::string& id() const { return config_.id; }
    const FusedState& state() const { return state_; }
    const std::optional<Goal>& goal() const { return goal_; }
    const Path& path() const { return path_; }
    bool goal_active() const { return goal_.has_value(); }

    /// Plans from the current estimate. Returns Active, or Rejected with the plan error.
    GoalEvent set_goal(const Goal& goal);
    void cancel_goal();

    /// `odometry` is the command executed since the previous tick (absent on the first tick).
    TickReport tick(double t, const std::optional<OdometryDelta>& odometry,
                    const std::optional<FrameImage>& frame);

private:
    AgentConfig config_;
    std::shared_ptr<const OccupancyGrid> inflated_;
    FusedState state_;
    std::optional<VlpDetection> pending_;
    double pending_t_{0.0};
    std::optional<Goal> goal_;
    Path path_;
};

}  // namespace vlp
