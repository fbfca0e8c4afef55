#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>

#include "vlpfleet/beacon_codec.hpp"
#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/sim_world.hpp"
#include "vlpfleet/vlp_decoder.hpp"

using namespace vlp;

namespace {

NoiseParams noiseless() {
    NoiseParams n;
    n.sigma_px = 0.0;
    return n;
}

LedBeacon beacon(int id) {
    LedBeacon b = default_beacon();
    b.id = id;
    return b;
}

// Uniform in-coverage pose around the LED.
Pose2D random_covered_pose(std::mt19937_64& rng, const CameraModel& cam, const LedBeacon& led) {
    std::uniform_real_distribution<double> off(-0.45, 0.45);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    for (;;) {
        const Pose2D p{led.position.x + off(rng), led.position.y + off(rng), heading(rng)};
        if (in_coverage(p, cam, led)) return p;
    }
}

FrameImage blank(const CameraModel& cam, int level = 10) {
    FrameImage f;
    f.width = cam.width;
    f.height = cam.height;
    f.pixels.assign(static_cast<std::size_t>(cam.width) * cam.height, static_cast<std::uint8_t>(level));
    return f;
}

std::vector<std::uint8_t> bits_of(const std::string& s) {
    std::vector<std::uint8_t> out;
    for (char c : s) out.push_back(c == '1');
    return out;
}

std::string str(const std::vector<std::uint8_t>& v) {
    std::string s;
    for (auto b : v) s += b ? '1' : '0';
    return s;
}

}  // namespace

TEST(DetectRoi, NoLedNoRoi) {
    EXPECT_FALSE(detect_roi(blank(CameraModel{})));
    const auto f = render_frame({1.0, 1.0, 0.0}, CameraModel{}, default_beacon(), 0.0, NoiseParams{}, 3);
    EXPECT_FALSE(detect_roi(f));
}

TEST(DetectRoi, NoiselessCentroidWithinOnePixel) {
    const CameraModel cam;
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const LedBeacon led = beacon(static_cast<int>(rng() % 256));
        const Pose2D pose = random_covered_pose(rng, cam, led);
        const auto truth = project_led(pose, cam, led);
        ASSERT_TRUE(truth);
        const auto f = render_frame(pose, cam, led, 0.1 * i, noiseless(), i);
        const auto roi = detect_roi(f);
        ASSERT_TRUE(roi) << i;
        EXPECT_LE(std::hypot(roi->center_u - truth->u, roi->center_v - truth->v), 1.0) << i;
    }
}

TEST(DetectRoi, NoisyCentroidP95WithinTwoPixels) {
    const CameraModel cam;
    std::mt19937_64 rng(12);
    std::vector<double> err;
    for (int i = 0; i < 200; ++i) {
        const LedBeacon led = beacon(static_cast<int>(rng() % 256));
        const Pose2D pose = random_covered_pose(rng, cam, led);
        const auto truth = project_led(pose, cam, led);
        const auto roi = detect_roi(render_frame(pose, cam, led, 0.1 * i, NoiseParams{}, rng()));
        if (!roi) continue;
        err.push_back(std::hypot(roi->center_u - truth->u, roi->center_v - truth->v));
    }
    ASSERT_GT(err.size(), 190u);
    std::sort(err.begin(), err.end());
    EXPECT_LE(err[err.size() * 95 / 100], 2.0);
}

TEST(DecodeFrame, AmbientRectangleIsNotAnLed) {
    const CameraModel cam;
    for (const auto [w, h] : {std::pair{20, 200}, std::pair{200, 20}}) {
        FrameImage f = blank(cam);
        for (int r = 200; r < 200 + h; ++r)
            for (int c = 250; c < 250 + w; ++c) f.at(c, r) = 230;
        EXPECT_FALSE(decode_frame(f).detection) << w << "x" << h;
    }
}

TEST(DecodeFrame, BackgroundOnlyIsAbsent) {
    const auto result = decode_frame(blank(CameraModel{}));
    EXPECT_FALSE(result.detection);
    EXPECT_EQ(result.diagnostic, DecodeDiag::NoRoi);
}

TEST(BinarizeRows, NoiselessRowsEqualChipLevels) {
    const CameraModel cam;
    const LedBeacon led = beacon(42);
    const Pose2D pose{led.position.x + 0.12, led.position.y - 0.2, 0.7};
    const double t0 = 0.0421;
    const auto f = render_frame(pose, cam, led, t0, noiseless(), 0);
    const auto roi = detect_roi(f);
    ASSERT_TRUE(roi);
    const auto rb = binarize_rows(f, *roi);
    ASSERT_EQ(rb.rows.size(), rb.bits.size());
    ASSERT_GT(rb.rows.size(), 80u);
    const ChipFrame chips = encode_id(led.id);
    for (std::size_t i = 0; i < rb.rows.size(); ++i) {
        const double t = t0 + (rb.rows[i] + 0.5) * cam.row_readout_time;
        EXPECT_EQ(rb.bits[i], level_at(chips, t, led.chip_period)) << "row " << rb.rows[i];
    }
}

TEST(BinarizeRows, FlatBlobGivesAllZeroBits) {
    const CameraModel cam;
    FrameImage f = blank(cam);
    for (int r = 0; r < cam.height; ++r)
        for (int c = 0; c < cam.width; ++c)
            if (std::hypot(c - 320.0, r - 240.0) <= 54.0) f.at(c, r) = 230;
    const auto roi = detect_roi(f);
    ASSERT_TRUE(roi);
    const auto rb = binarize_rows(f, *roi);
    EXPECT_TRUE(std::all_of(rb.bits.begin(), rb.bits.end(), [](auto b) { return b == 0; }));
    EXPECT_FALSE(decode_frame(f).detection);
}

TEST(BinarizeRows, NoisyRowsStayWithinTwoPercentOfNoiseless) {
    const CameraModel cam;
    std::mt19937_64 rng(21);
    for (int s = 0; s < 100; ++s) {
        const LedBeacon led = beacon(static_cast<int>(rng() % 256));
        const Pose2D pose = random_covered_pose(rng, cam, led);
        const double t0 = 0.01 * s;
        const auto clean = render_frame(pose, cam, led, t0, noiseless(), 0);
        const auto noisy = render_frame(pose, cam, led, t0, NoiseParams{}, rng());
        const auto roi = detect_roi(clean);
        ASSERT_TRUE(roi);
        const auto a = binarize_rows(clean, *roi);
        const auto b = binarize_rows(noisy, *roi);
        ASSERT_EQ(a.rows, b.rows);
        std::size_t diff = 0;
        for (std::size_t i = 0; i < a.bits.size(); ++i) diff += a.bits[i] != b.bits[i];
        EXPECT_LE(static_cast<double>(diff), 0.02 * static_cast<double>(a.bits.size())) << "seed " << s;
    }
}

TEST(ChipsFromRows, ExactRuns) {
    const auto est = chips_from_rows(bits_of("111100001111"), 4);
    EXPECT_EQ(str(est.chips), "101");
    EXPECT_EQ(est.rows_per_chip, 4);
}

TEST(ChipsFromRows, SingleFlippedRowIsDespeckled) {
    const std::string clean = "11111111000000001111111100000000";
    std::string flipped = clean;
    flipped[11] = '1';
    EXPECT_EQ(str(chips_from_rows(bits_of(flipped), 8).chips), str(chips_from_rows(bits_of(clean), 8).chips));
    EXPECT_EQ(str(chips_from_rows(bits_of(flipped), 8).chips), "1010");
}

TEST(ChipsFromRows, NoiselessPipelineReproducesChipStream) {
    const CameraModel cam;
    for (int id : {0, 1, 42, 170, 255}) {
        const LedBeacon led = beacon(id);
        const auto f = render_frame({led.position.x, led.position.y, 0.0}, cam, led, 0.003 * id, noiseless(), 0);
        const auto roi = detect_roi(f);
        ASSERT_TRUE(roi);
        const auto est = chips_from_rows(binarize_rows(f, *roi).bits);
        EXPECT_EQ(est.rows_per_chip, 2);
        std::string stream;
        for (int k = 0; k < 8; ++k)
            for (auto c : encode_id(id).chips) stream += c ? '1' : '0';
        // Edge runs may be cut short by the disk boundary.
        const std::string s = str(est.chips);
        const std::string core = s.substr(est.leading_chips, s.size() - est.leading_chips - est.trailing_chips);
        EXPECT_NE(stream.find(core), std::string::npos) << "id " << id << " chips " << s;
        EXPECT_GE(est.chips.size(), 2 * kChipsPerFrame);
    }
}

TEST(DecodeFrame, RandomCoveredPosesNeverDecodeWrongId) {
    const CameraModel cam;
    std::mt19937_64 rng(31);
    int ok = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const LedBeacon led = beacon(static_cast<int>(rng() % 256));
        const Pose2D pose = random_covered_pose(rng, cam, led);
        const auto r = decode_frame(render_frame(pose, cam, led, 0.037 * i, NoiseParams{}, rng()));
        if (r.detection) {
            ASSERT_EQ(r.detection->led_id, led.id) << i;
            ++ok;
        }
    }
    EXPECT_GE(ok, n * 99 / 100);
}

TEST(DecodeFrame, IsPureFunctionOfPixels) {
    const LedBeacon led = beacon(77);
    const auto f = render_frame({led.position.x + 0.2, led.position.y, 1.0}, CameraModel{}, led, 0.2, NoiseParams{}, 8);
    const auto a = decode_frame(f);
    const auto b = decode_frame(f);
    ASSERT_TRUE(a.detection && b.detection);
    EXPECT_EQ(a.detection->led_id, b.detection->led_id);
    EXPECT_EQ(a.detection->roi.center_u, b.detection->roi.center_u);
    EXPECT_EQ(a.detection->quality, b.detection->quality);
}
