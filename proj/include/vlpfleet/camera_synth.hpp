#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vlpfleet/beacon_codec.hpp"
#include "vlpfleet/geometry.hpp"

namespace vlp {

/// Upward-facing pinhole camera with a rolling-shutter readout.
struct CameraModel {
    double fx{1200.0};
    double fy{1200.0};
    double cx{320.0};
    double cy{240.0};
    int width{640};
    int height{480};
    double row_readout_time{60e-6};
    double mount_height{0.20};
    double mount_yaw{0.0};

    void validate() const;
};

struct FrameImage {
    int width{0};
    int height{0};
    std::vector<std::uint8_t> pixels;
    double t0{0.0};
    double row_readout_time{60e-6};

    std::uint8_t at(int col, int row) const {
        return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(col)];
    }
    std::uint8_t& at(int col, int row) {
        return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(col)];
    }
};

/// Image-plane disk of the LED. Pixel centers sit at integer coordinates.
struct LedProjection {
    double u{0.0};
    double v{0.0};
    double radius{0.0};
};

struct Intensities {
    int background{10};
    int led_on{230};
    int led_off{25};
};

struct NoiseParams {
    double sigma_px{8.0};
    Intensities levels{};
};

std::optional<LedProjection> project_led(const Pose2D& robot, const CameraModel& camera,
                                         const LedBeacon& beacon);

/// Renders the frame captured at t0. Deterministic for a fixed seed.
FrameImage render_frame(const Pose2D& robot, const CameraModel& camera, const LedBeacon& beacon,
                        double t0, const NoiseParams& noise, std::uint64_t seed);

/// Binary PGM (P5, maxval 255). Timing metadata travels in a `# vlp t0=... row_readout=...`
/// comment that readers without this library ignore.
void write_pgm(const std::filesystem::path& path, const FrameImage& frame);
FrameImage read_pgm(const std::filesystem::path& path);

}  // namespace vlp
