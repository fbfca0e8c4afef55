#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "vlpfleet/beacon_codec.hpp"
#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/pose_estimator.hpp"
#include "vlpfleet/protocol.hpp"
#include "vlpfleet/scenario.hpp"
#include "vlpfleet/vlp_decoder.hpp"

namespace py = pybind11;

namespace {

using Image = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

vlp::FrameImage to_frame(const Image& image, double t0) {
    if (image.ndim() != 2) throw py::value_error("expected a 2-D uint8 image");
    vlp::FrameImage frame;
    frame.height = static_cast<int>(image.shape(0));
    frame.width = static_cast<int>(image.shape(1));
    frame.t0 = t0;
    frame.pixels.assign(image.data(), image.data() + image.size());
    return frame;
}

vlp::LedBeacon beacon_with_id(int led_id) {
    vlp::LedBeacon beacon;
    beacon.id = led_id;
    return beacon;
}

}  // namespace

PYBIND11_MODULE(_vlpfleet, m) {
    m.doc() = "Visible light positioning core";

    py::register_exception<vlp::CodecError>(m, "CodecError", PyExc_ValueError);
    py::register_exception<vlp::ProtocolError>(m, "ProtocolError", PyExc_ValueError);
    py::register_exception<vlp::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("encode_id", [](int id) {
        const auto frame = vlp::encode_id(id);
        return std::vector<int>(frame.chips.begin(), frame.chips.end());
    }, py::arg("led_id"), "24-chip frame for an LED id in [0, 255].");

    m.def("decode_chips", [](const std::vector<int>& chips) {
        std::vector<std::uint8_t> c(chips.begin(), chips.end());
        return vlp::decode_chips(c);
    }, py::arg("chips"));

    m.def("render_frame", [](double x, double y, double theta, int led_id, double t0, double sigma_px,
                             std::uint64_t seed) {
        vlp::NoiseParams noise;
        noise.sigma_px = sigma_px;
        const auto frame = vlp::render_frame({x, y, theta}, vlp::CameraModel{}, beacon_with_id(led_id), t0, noise, seed);
        Image out({frame.height, frame.width});
        std::memcpy(out.mutable_data(), frame.pixels.data(), frame.pixels.size());
        return out;
    }, py::arg("x"), py::arg("y"), py::arg("theta"), py::arg("led_id") = 1, py::arg("t0") = 0.0,
       py::arg("sigma_px") = 8.0, py::arg("seed") = 0,
       "Camera frame of the default LED seen from robot pose (x, y, theta).");

    m.def("decode_frame", [](const Image& image, double t0) -> py::object {
        const auto result = vlp::decode_frame(to_frame(image, t0));
        py::dict d;
        d["diagnostic"] = vlp::to_string(result.diagnostic);
        if (!result.detection) {
            d["led_id"] = py::none();
            return std::move(d);
        }
        d["led_id"] = result.detection->led_id;
        d["u"] = result.detection->roi.center_u;
        d["v"] = result.detection->roi.center_v;
        d["radius"] = result.detection->roi.radius;
        d["quality"] = result.detection->quality;
        return std::move(d);
    }, py::arg("image"), py::arg("t0") = 0.0);

    m.def("locate", [](const Image& image, double heading, double t0) -> py::object {
        const auto result = vlp::decode_frame(to_frame(image, t0));
        if (!result.detection) return py::none();
        const auto fix = vlp::position_from_detection(*result.detection, vlp::CameraModel{},
                                                      beacon_with_id(result.detection->led_id), heading);
        return py::make_tuple(fix.x, fix.y, fix.sigma);
    }, py::arg("image"), py::arg("heading"), py::arg("t0") = 0.0,
       "Robot position from a frame of the default LED, given the true heading.");

    m.def("encode_message", [](const std::string& json_text) {
        const auto bytes = vlp::encode_message(vlp::from_json_text(json_text));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }, py::arg("json_text"), "Length-prefixed wire frame for a JSON message.");

    m.def("decode_message", [](const py::bytes& data) {
        const std::string s = data;
        std::size_t consumed = 0;
        const auto msg = vlp::decode_message(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()), &consumed);
        return py::make_tuple(vlp::to_json_text(msg), consumed);
    }, py::arg("data"), "Returns (json_text, bytes_consumed) for the first frame.");

    m.def("run_coverage_handoff", [](std::uint64_t seed, std::optional<std::string> metrics_csv) {
        vlp::RunOptions options;
        if (metrics_csv) options.metrics_csv = *metrics_csv;
        py::gil_scoped_release release;
        return vlp::run_scenario(vlp::coverage_handoff(seed), options).to_json().dump();
    }, py::arg("seed") = 1, py::arg("metrics_csv") = py::none(), "Summary JSON text.");

    m.def("run_scenario_file", [](const std::string& path, std::optional<std::string> metrics_csv) {
        const auto config = vlp::load_scenario(path);
        vlp::RunOptions options;
        if (metrics_csv) options.metrics_csv = *metrics_csv;
        py::gil_scoped_release release;
        return vlp::run_scenario(config, options).to_json().dump();
    }, py::arg("path"), py::arg("metrics_csv") = py::none());
}
