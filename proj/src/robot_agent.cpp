#include "vlpfleet/robot_agent.hpp"

#include <cmath>
#include <utility>

namespace vlp {

const char* to_string(GoalState state) {
    switch (state) {
        case GoalState::Active: return "active";
        case GoalState::Reached: return "reached";
        case GoalState::Rejected: return "rejected";
    }
    return "unknown";
}

RobotAgent::RobotAgent(AgentConfig config, std::shared_ptr<const OccupancyGrid> inflated,
                       FusedState initial)
    : config_(std::move(config)), inflated_(std::move(inflated)), state_(std::move(initial)) {}

GoalEvent RobotAgent::set_goal(const Goal& goal) {
    GoalEvent event{GoalState::Active, goal, {}};
    try {
        path_ = plan_on_inflated(*inflated_, state_.pose(), goal);
        goal_ = goal;
    } catch (const PlanError& e) {
        event.state = GoalState::Rejected;
        event.reason = e.what();
    }
    return event;
}

void RobotAgent::cancel_goal() {
    goal_.reset();
    path_ = {};
}

TickReport RobotAgent::tick(double t, const std::optional<OdometryDelta>& odometry,
                            const std::optional<FrameImage>& frame) {
    TickReport report;

    if (pending_) {
        try {
            const LedBeacon& beacon = config_.led_map.lookup(pending_->led_id);
            const double heading_sigma = std::sqrt(std::max(0.0, state_.cov(2, 2)));
            const PositionFix fix = position_from_detection(*pending_, config_.camera, beacon,
                                                            state_.mean(2), heading_sigma, pending_t_);
            const UpdateResult upd = update_vlp(state_, fix);
            state_ = upd.state;
            report.fix = fix;
            report.fix_accepted = upd.accepted;
        } catch (const UnknownLedId&) {
            report.unknown_led = true;
        } catch (const SingularInnovation&) {
        }
        pending_.reset();
    }

    if (odometry) state_ = predict(state_, *odometry, config_.process);
    state_.t = t;

    if (frame) {
        const DecodeResult decoded = decode_frame(*frame, config_.decoder);
        report.diagnostic = decoded.diagnostic;
        if (decoded.detection) {
            pending_ = decoded.detection;
            pending_t_ = t;
        }
    }

    if (goal_) {
        if (distance_to_path(path_, state_.pose().position()) > config_.replan_distance) {
            try {
                path_ = plan_on_inflated(*inflated_, state_.pose(), *goal_);
                report.replanned = true;
            } catch (const PlanError&) {
                // Keep following the old path; it still leads to the goal.
            }
        }
        const SteerOutput out = steer(state_.pose(), path_, goal_->tolerance, config_.limits);
        if (std::holds_alternative<Arrived>(out)) {
            report.events.push_back({GoalState::Reached, *goal_, {}});
            cancel_goal();
        } else {
            report.command = std::get<VelocityCommand>(out);
        }
    }
    return report;
}

}  // namespace vlp
