#include "vlpfleet/camera_synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vlpfleet/pgm.hpp"

namespace vlp {

void CameraModel::validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw std::invalid_argument("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera size must be positive");
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
        throw std::invalid_argument("principal point outside image");
    if (!(row_readout_time > 0.0)) throw std::invalid_argument("row_readout_time must be positive");
}

std::optional<LedProjection> project_led(const Pose2D& robot, const CameraModel& camera,
                                         const LedBeacon& beacon) {
    const double h = beacon.height - camera.mount_height;
    if (!(h > 0.0)) return std::nullopt;
    const Vec2 offset = rotate(beacon.position - robot.position(), -(robot.theta + camera.mount_yaw));
    LedProjection p;
    p.u = camera.cx + camera.fx * offset.x / h;
    p.v = camera.cy + camera.fy * offset.y / h;
    p.radius = camera.fx * (beacon.diameter / 2.0) / h;
    const double right = camera.width - 1;
    const double bottom = camera.height - 1;
    if (p.u - p.radius < 0.0 || p.u + p.radius > right || p.v - p.radius < 0.0 ||
        p.v + p.radius > bottom)
        return std::nullopt;
    return p;
}

FrameImage render_frame(const Pose2D& robot, const CameraModel& camera, const LedBeacon& beacon,
                        double t0, const NoiseParams& noise, std::uint64_t seed) {
    FrameImage frame;
    frame.width = camera.width;
    frame.height = camera.height;
    frame.t0 = t0;
    frame.row_readout_time = camera.row_readout_time;

    std::vector<double> clean(static_cast<std::size_t>(camera.width) * camera.height,
                              noise.levels.background);
    if (const auto disk = project_led(robot, camera, beacon)) {
        const ChipFrame chips = encode_id(beacon.id);
        const int row_lo = static_cast<int>(std::ceil(disk->v - disk->radius));
        const int row_hi = static_cast<int>(std::floor(disk->v + disk->radius));
        for (int r = std::max(row_lo, 0); r <= std::min(row_hi, camera.height - 1); ++r) {
            const double dy = r - disk->v;
            const double half = std::sqrt(std::max(0.0, disk->radius * disk->radius - dy * dy));
            const int c_lo = std::max(0, static_cast<int>(std::ceil(disk->u - half)));
            const int c_hi = std::min(camera.width - 1, static_cast<int>(std::floor(disk->u + half)));
            const double t_row = t0 + (r + 0.5) * camera.row_readout_time;
            const int level = level_at(chips, t_row, beacon.chip_period) ? noise.levels.led_on
                                                                         : noise.levels.led_off;
            for (int c = c_lo; c <= c_hi; ++c)
                clean[static_cast<std::size_t>(r) * camera.width + c] = level;
        }
    }

    frame.pixels.resize(clean.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> grain(0.0, noise.sigma_px > 0.0 ? noise.sigma_px : 1.0);
    const bool noisy = noise.sigma_px > 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double value = noisy ? clean[i] + grain(rng) : clean[i];
        frame.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
    }
    return frame;
}

void write_pgm(const std::filesystem::path& path, const FrameImage& frame) {
    PgmImage image{frame.width, frame.height, frame.pixels, {}};
    std::ostringstream meta;
    meta.precision(17);
    meta << " vlp t0=" << frame.t0 << " row_readout=" << frame.row_readout_time;
    image.comments.push_back(meta.str());
    write_pgm_image(path, image);
}

FrameImage read_pgm(const std::filesystem::path& path) {
    PgmImage image = read_pgm_image(path);
    FrameImage frame;
    frame.width = image.width;
    frame.height = image.height;
    frame.pixels = std::move(image.pixels);
    for (const auto& comment : image.comments) {
        std::istringstream in(comment);
        std::string tag;
        in >> tag;
        if (tag != "vlp") continue;
        std::string field;
        while (in >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) continue;
            const auto key = field.substr(0, eq);
            const double value = std::stod(field.substr(eq + 1));
            if (key == "t0") frame.t0 = value;
            if (key == "row_readout") frame.row_readout_time = value;
        }
    }
    return frame;
}

}  // namespace vlp
