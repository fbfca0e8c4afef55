#include <gtest/gtest.h>

#include <memory>

#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/robot_agent.hpp"
#include "vlpfleet/sim_world.hpp"

using namespace vlp;

namespace {

RobotAgent make_agent(const Pose2D& belief, LedMap map = LedMap({default_beacon()})) {
    AgentConfig cfg;
    cfg.id = "A";
    cfg.led_map = std::move(map);
    return RobotAgent(cfg, std::make_shared<const OccupancyGrid>(inflate(default_arena(), kRobotRadius)),
                      FusedState::from_pose(belief, 0.1, 0.005));
}

}  // namespace

TEST(RobotAgent, GoalInsideObstacleIsRejected) {
    auto agent = make_agent({1.0, 1.0, 0.0});
    const GoalEvent e = agent.set_goal({1.7, 3.8, 0.05});
    EXPECT_EQ(e.state, GoalState::Rejected);
    EXPECT_EQ(e.reason, "GoalInObstacle");
    EXPECT_FALSE(agent.goal_active());
}

TEST(RobotAgent, FixIsAppliedOneTickAfterCapture) {
    const LedBeacon led = default_beacon();
    const Pose2D truth{led.position.x + 0.1, led.position.y - 0.05, 0.2};
    auto agent = make_agent({truth.x - 0.08, truth.y + 0.05, truth.theta});
    const auto frame = render_frame(truth, CameraModel{}, led, 0.0, NoiseParams{}, 1);

    const TickReport first = agent.tick(0.0, std::nullopt, frame);
    EXPECT_EQ(first.diagnostic, DecodeDiag::Ok);
    EXPECT_FALSE(first.fix);

    const TickReport second = agent.tick(0.1, OdometryDelta{0.0, 0.0, 0.1}, std::nullopt);
    ASSERT_TRUE(second.fix);
    EXPECT_TRUE(second.fix_accepted);
    EXPECT_LT(std::hypot(second.fix->x - truth.x, second.fix->y - truth.y), 0.01);
    const Pose2D est = agent.state().pose();
    EXPECT_LT(std::hypot(est.x - truth.x, est.y - truth.y), 0.02);
}

TEST(RobotAgent, UnknownLedIsCountedNotFused) {
    LedBeacon other = default_beacon();
    other.id = 9;
    const LedBeacon led = default_beacon();
    auto agent = make_agent({led.position.x, led.position.y, 0.0}, LedMap({other}));
    const Pose2D before = agent.state().pose();
    agent.tick(0.0, std::nullopt, render_frame({led.position.x, led.position.y, 0.0}, CameraModel{}, led, 0.0,
                                                NoiseParams{}, 2));
    const TickReport rep = agent.tick(0.1, std::nullopt, std::nullopt);
    EXPECT_TRUE(rep.unknown_led);
    EXPECT_FALSE(rep.fix);
    EXPECT_EQ(agent.state().pose().x, before.x);
}

TEST(RobotAgent, ReachesGoalAndReportsIt) {
    auto agent = make_agent({1.0, 1.0, 0.0});
    ASSERT_EQ(agent.set_goal({1.5, 1.0, 0.05}).state, GoalState::Active);
    std::optional<OdometryDelta> odo;
    bool reached = false;
    for (int k = 0; k < 100 && !reached; ++k) {
        const TickReport rep = agent.tick(0.1 * k, odo, std::nullopt);
        for (const auto& e : rep.events) reached = reached || e.state == GoalState::Reached;
        odo = OdometryDelta{rep.command.v, rep.command.omega, 0.1};
    }
    EXPECT_TRUE(reached);
    EXPECT_FALSE(agent.goal_active());
}
