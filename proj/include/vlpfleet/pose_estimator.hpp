#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpfleet/beacon_codec.hpp"
#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/vlp_decoder.hpp"

namespace vlp {

class UnknownLedId : public std::runtime_error {
public:
    explicit UnknownLedId(int id)
        : std::runtime_error("unknown LED id " + std::to_string(id)), id_(id) {}
    int id() const noexcept { return id_; }

private:
    int id_;
};

class MapLoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Surveyed ceiling LEDs keyed by transmitted ID.
class LedMap {
public:
    LedMap() = default;
    /// Throws MapLoadError on duplicate ids or invalid beacons.
    explicit LedMap(const std::vector<LedBeacon>& beacons);

    /// Format: {"beacons": [{"id", "x_m", "y_m", "height_m", "diameter_m"}]}.
    static LedMap from_json_text(const std::string& text);
    static LedMap load(const std::filesystem::path& path);
    std::string to_json_text() const;

    const LedBeacon& lookup(int id) const;
    const std::map<int, LedBeacon>& beacons() const { return beacons_; }
    bool empty() const { return beacons_.empty(); }

private:
    std::map<int, LedBeacon> beacons_;
};

inline const LedBeacon& lookup_led(int id, const LedMap& map) { return map.lookup(id); }

struct PositionFix {
    double x{0.0};
    double y{0.0};
    double sigma{0.0};
    double t{0.0};
    int led_id{0};
};

/// Pixel-level centroid uncertainty assumed for a fix.
inline constexpr double kCentroidSigmaPx = 2.0;

/// Inverts the pinhole projection of the detected LED disk. A single round LED
/// carries no bearing, so the heading is the current fused estimate and its
/// uncertainty leaks into the fix in proportion to the horizontal offset.
PositionFix position_from_detection(const VlpDetection& det, const CameraModel& camera,
                                    const LedBeacon& beacon, double heading,
                                    double heading_sigma = 0.0, double t = 0.0);

}  // namespace vlp
