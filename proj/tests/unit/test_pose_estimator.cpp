#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/pose_estimator.hpp"
#include "vlpfleet/sim_world.hpp"

using namespace vlp;

namespace {

VlpDetection detection_at(double u, double v, int id = 1) {
    VlpDetection d;
    d.led_id = id;
    d.roi.center_u = u;
    d.roi.center_v = v;
    return d;
}

LedBeacon make_beacon(int id, double x, double y) {
    LedBeacon b = default_beacon();
    b.id = id;
    b.position = {x, y};
    return b;
}

}  // namespace

TEST(LedMap, LookupKnownId) {
    const LedMap map({make_beacon(1, 4.16, 2.40)});
    EXPECT_EQ(lookup_led(1, map).id, 1);
    EXPECT_DOUBLE_EQ(lookup_led(1, map).position.x, 4.16);
}

TEST(LedMap, UnknownIdThrows) {
    const LedMap map({make_beacon(1, 4.16, 2.40)});
    try {
        lookup_led(9, map);
        FAIL() << "expected UnknownLedId";
    } catch (const UnknownLedId& e) {
        EXPECT_EQ(e.id(), 9);
    }
}

TEST(LedMap, DuplicateIdsRejectedAtLoad) {
    EXPECT_THROW(LedMap({make_beacon(3, 1.0, 1.0), make_beacon(3, 2.0, 2.0)}), MapLoadError);
    EXPECT_THROW(LedMap::from_json_text(R"({"beacons":[{"id":3,"x_m":1,"y_m":1,"height_m":2.2,"diameter_m":0.18},
                                                       {"id":3,"x_m":2,"y_m":2,"height_m":2.2,"diameter_m":0.18}]})"),
                 MapLoadError);
}

TEST(LedMap, JsonRoundTrip) {
    const LedMap map({make_beacon(1, 4.16, 2.40), make_beacon(200, 1.5, 3.25)});
    const LedMap back = LedMap::from_json_text(map.to_json_text());
    ASSERT_EQ(back.beacons().size(), 2u);
    EXPECT_DOUBLE_EQ(back.lookup(200).position.y, 3.25);
    EXPECT_THROW(LedMap::from_json_text("{\"beacons\": 5}"), MapLoadError);
    EXPECT_THROW(LedMap::from_json_text("not json"), MapLoadError);
}

TEST(PositionFromDetection, PrincipalPointGivesBeaconPosition) {
    const CameraModel cam;
    const LedBeacon led = default_beacon();
    for (double heading : {-3.0, -1.0, 0.0, 0.5, 2.9}) {
        const auto fix = position_from_detection(detection_at(cam.cx, cam.cy), cam, led, heading);
        EXPECT_DOUBLE_EQ(fix.x, led.position.x);
        EXPECT_DOUBLE_EQ(fix.y, led.position.y);
    }
}

TEST(PositionFromDetection, InvertsProjectionOnPoseGrid) {
    const CameraModel cam;
    const LedBeacon led = default_beacon();
    const double r = coverage_radius(cam, led);
    int tested = 0;
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
            for (double heading : {-2.5, -0.7, 0.0, 1.1, 3.0}) {
                const Pose2D pose{led.position.x - r + 2 * r * i / 8.0, led.position.y - r + 2 * r * j / 8.0, heading};
                const auto p = project_led(pose, cam, led);
                if (!p) continue;
                const auto fix = position_from_detection(detection_at(p->u, p->v), cam, led, heading);
                EXPECT_LT(std::hypot(fix.x - pose.x, fix.y - pose.y), 1e-9);
                ++tested;
            }
        }
    }
    EXPECT_GT(tested, 150);
}

TEST(PositionFromDetection, HeadingErrorLeaksIntoPosition) {
    const CameraModel cam;
    const LedBeacon led = default_beacon();
    const double h = led.height - cam.mount_height;
    const double offset = 0.8;
    const double err = 5.0 * std::numbers::pi / 180.0;
    // Camera-frame offset of 0.8 m along the image x axis.
    const auto det = detection_at(cam.cx + cam.fx * offset / h, cam.cy);
    const double heading = 0.3;
    const auto exact = position_from_detection(det, cam, led, heading);
    const auto off = position_from_detection(det, cam, led, heading + err);
    const double e = std::hypot(off.x - exact.x, off.y - exact.y);
    EXPECT_NEAR(e, 2.0 * offset * std::sin(err / 2.0), 1e-12);
    EXPECT_NEAR(e, 0.070, 1e-3);
}

TEST(PositionFromDetection, ErrorNonDecreasingInHeadingError) {
    const CameraModel cam;
    const LedBeacon led = default_beacon();
    for (double du : {20.0, 90.0, 200.0}) {
        const auto det = detection_at(cam.cx + du, cam.cy - 0.5 * du);
        const auto exact = position_from_detection(det, cam, led, 1.0);
        double prev = 0.0;
        for (int k = 0; k <= 90; ++k) {
            const auto fix = position_from_detection(det, cam, led, 1.0 + k * std::numbers::pi / 180.0);
            const double e = std::hypot(fix.x - exact.x, fix.y - exact.y);
            EXPECT_GE(e, prev - 1e-15);
            prev = e;
        }
    }
}

TEST(PositionFromDetection, SigmaPositiveAndGrowsWithOffset) {
    const CameraModel cam;
    const LedBeacon led = default_beacon();
    const auto centre = position_from_detection(detection_at(cam.cx, cam.cy), cam, led, 0.0, 0.0);
    EXPECT_GT(centre.sigma, 0.0);
    double prev = 0.0;
    for (double du : {0.0, 30.0, 80.0, 200.0}) {
        const auto fix = position_from_detection(detection_at(cam.cx + du, cam.cy), cam, led, 0.0, 0.02);
        EXPECT_GT(fix.sigma, prev);
        prev = fix.sigma;
    }
}
