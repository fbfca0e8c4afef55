#include "vlpfleet/pose_estimator.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iterator>

namespace vlp {

using nlohmann::json;

LedMap::LedMap(const std::vector<LedBeacon>& beacons) {
    for (const auto& b : beacons) {
        try {
            b.validate();
        } catch (const std::invalid_argument& e) {
            throw MapLoadError(e.what());
        }
        if (!beacons_.emplace(b.id, b).second)
            throw MapLoadError("duplicate LED id " + std::to_string(b.id));
    }
}

LedMap LedMap::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MapLoadError(std::string("LED map is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("beacons") || !doc["beacons"].is_array())
        throw MapLoadError("LED map needs a \"beacons\" array");
    std::vector<LedBeacon> beacons;
    for (const auto& item : doc["beacons"]) {
        try {
            LedBeacon b;
            b.id = item.at("id").get<int>();
            b.position = {item.at("x_m").get<double>(), item.at("y_m").get<double>()};
            b.height = item.value("height_m", b.height);
            b.diameter = item.value("diameter_m", b.diameter);
            b.chip_period = item.value("chip_period_s", b.chip_period);
            beacons.push_back(b);
        } catch (const json::exception& e) {
            throw MapLoadError(std::string("bad beacon entry: ") + e.what());
        }
    }
    return LedMap(beacons);
}

LedMap LedMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MapLoadError("cannot open LED map " + path.string());
    return from_json_text({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::string LedMap::to_json_text() const {
    json doc{{"beacons", json::array()}};
    for (const auto& [id, b] : beacons_) {
        doc["beacons"].push_back({{"id", id},
                                  {"x_m", b.position.x},
                                  {"y_m", b.position.y},
                                  {"height_m", b.height},
                                  {"diameter_m", b.diameter},
                                  {"chip_period_s", b.chip_period}});
    }
    return doc.dump(2);
}

const LedBeacon& LedMap::lookup(int id) const {
    const auto it = beacons_.find(id);
    if (it == beacons_.end()) throw UnknownLedId(id);
    return it->second;
}

PositionFix position_from_detection(const VlpDetection& det, const CameraModel& camera,
                                    const LedBeacon& beacon, double heading, double heading_sigma,
                                    double t) {
    const double h = beacon.height - camera.mount_height;
    const Vec2 offset{(det.roi.center_u - camera.cx) / camera.fx * h,
                      (det.roi.center_v - camera.cy) / camera.fy * h};
    const Vec2 world_offset = rotate(offset, heading + camera.mount_yaw);
    PositionFix fix;
    fix.x = beacon.position.x - world_offset.x;
    fix.y = beacon.position.y - world_offset.y;
    fix.sigma = kCentroidSigmaPx / camera.fx * h + std::abs(heading_sigma) * offset.norm();
    fix.t = t;
    fix.led_id = det.led_id;
    return fix;
}

}  // namespace vlp
