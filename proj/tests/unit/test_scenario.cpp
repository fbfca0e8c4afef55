#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vlpfleet/camera_synth.hpp"
#include "vlpfleet/fleet.hpp"
#include "vlpfleet/pgm.hpp"
#include "vlpfleet/scenario.hpp"

using namespace vlp;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
      "arena": "builtin", "led_map": "builtin", "seed": 3, "duration_s": 5,
      "robots": [
        {"id": "A", "start": {"x": 1.0, "y": 1.0, "theta": 0.0}},
        {"id": "B", "start": {"x": 2.0, "y": 1.0, "theta": 0.0}}
      ]})");
}

std::string field_of(const json& doc) {
    try {
        parse_scenario(doc, ".");
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace

TEST(ParseScenario, MinimalDocumentUsesDefaults) {
    const auto cfg = parse_scenario(minimal(), ".");
    EXPECT_EQ(cfg.robots.size(), 2u);
    EXPECT_EQ(cfg.seed, 3u);
    EXPECT_DOUBLE_EQ(cfg.control_rate_hz, 10.0);
    EXPECT_TRUE(cfg.robots[0].operator_goals);
    EXPECT_EQ(cfg.leds.beacons().size(), 1u);
}

TEST(ParseScenario, ErrorsNameTheField) {
    auto doc = minimal();
    doc["robots"][1]["start"]["x"] = "far";
    EXPECT_EQ(field_of(doc), "robots[1].start.x");

    doc = minimal();
    doc["robots"][1]["id"] = "A";
    EXPECT_EQ(field_of(doc), "robots[1].id");

    doc = minimal();
    doc["robots"][0]["start"] = {{"x", 1.7}, {"y", 3.8}, {"theta", 0.0}};  // inside a box obstacle
    EXPECT_EQ(field_of(doc), "robots[0].start");

    doc = minimal();
    doc["control_rate_hz"] = 5;
    EXPECT_EQ(field_of(doc), "control_rate_hz");

    doc = minimal();
    doc["robots"] = json::array();
    EXPECT_EQ(field_of(doc), "robots");

    doc = minimal();
    doc["robots"][0]["goals"] = json::array({{{"x", 1.0}}});
    EXPECT_EQ(field_of(doc), "robots[0].goals[0].y");

    doc = minimal();
    doc["led_map"] = "no_such_map.json";
    EXPECT_EQ(field_of(doc), "led_map");

    doc = minimal();
    doc["seed"] = -1;
    EXPECT_EQ(field_of(doc), "seed");
}

TEST(LoadScenario, MissingFileAndBadJson) {
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
    TempDir dir("vlp_scenario_bad");
    std::ofstream(dir.path() / "bad.json") << "{ not json";
    EXPECT_THROW(load_scenario(dir.path() / "bad.json"), ConfigError);
}

TEST(LoadScenario, ShippedHandoffMatchesBuiltin) {
    const auto file = load_scenario(std::filesystem::path(VLPFLEET_SOURCE_DIR) / "scenarios/coverage_handoff.json");
    const auto builtin = coverage_handoff(7);
    ASSERT_EQ(file.robots.size(), builtin.robots.size());
    EXPECT_EQ(file.seed, builtin.seed);
    EXPECT_DOUBLE_EQ(file.duration_s, builtin.duration_s);
    for (std::size_t i = 0; i < file.robots.size(); ++i) {
        EXPECT_EQ(file.robots[i].id, builtin.robots[i].id);
        EXPECT_DOUBLE_EQ(file.robots[i].start.x, builtin.robots[i].start.x);
        EXPECT_DOUBLE_EQ(file.robots[i].start.y, builtin.robots[i].start.y);
        EXPECT_EQ(file.robots[i].goals.size(), builtin.robots[i].goals.size());
    }
}

TEST(RunScenario, SameSeedGivesIdenticalMetrics) {
    TempDir dir("vlp_scenario_det");
    auto cfg = coverage_handoff(11);
    cfg.duration_s = 8.0;
    RunOptions a;
    a.metrics_csv = dir.path() / "a.csv";
    RunOptions b;
    b.metrics_csv = dir.path() / "b.csv";
    const auto sa = run_scenario(cfg, a);
    const auto sb = run_scenario(cfg, b);
    EXPECT_EQ(sa.to_json().dump(), sb.to_json().dump());
    const std::string csv = slurp(*a.metrics_csv);
    EXPECT_EQ(csv, slurp(*b.metrics_csv));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), MetricsCsvWriter::kHeader);
    // One row per robot per tick.
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 1 + 2 * sa.ticks);
}

TEST(RunScenario, NoiselessParkedPairAgreesToPixelResolution) {
    auto doc = minimal();
    const LedBeacon led = default_beacon();
    doc["noise"] = {{"sigma_v", 0.0}, {"sigma_omega", 0.0}, {"sigma_px", 0.0}};
    doc["robots"][0]["start"] = {{"x", led.position.x - 0.1}, {"y", led.position.y}, {"theta", 0.0}};
    doc["robots"][1]["start"] = {{"x", led.position.x + 0.1}, {"y", led.position.y}, {"theta", 0.0}};
    const auto summary = run_scenario(parse_scenario(doc, "."));
    ASSERT_TRUE(summary.window_peak_m);
    EXPECT_GT(summary.window_ticks, 0u);
    // Centroids are exact to a pixel, which is about 2 mm on the floor at this height.
    EXPECT_LT(*summary.window_peak_m, 0.005);
    for (const auto& r : summary.robots) EXPECT_EQ(r.fixes_rejected, 0u);
}

TEST(DecodeImages, GoldenCorpusDecodesEveryId) {
    TempDir dir("vlp_golden");
    const CameraModel cam;
    std::vector<std::filesystem::path> files;
    const int ids[] = {0, 1, 7, 42, 93, 128, 170, 200, 254, 255};
    for (int i = 0; i < 10; ++i) {
        LedBeacon led = default_beacon();
        led.id = ids[i];
        const Pose2D pose{led.position.x + 0.03 * i - 0.15, led.position.y + 0.02 * i - 0.1, 0.3 * i};
        const auto frame = render_frame(pose, cam, led, 0.0173 * i, NoiseParams{}, 500 + i);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%02d.pgm", i);
        write_pgm(dir.path() / name, frame);
        files.push_back(dir.path() / name);
    }
    const auto globbed = expand_glob((dir.path() / "frame_*.pgm").string());
    ASSERT_EQ(globbed, files);
    const auto report = decode_images(globbed);
    ASSERT_TRUE(report.all_parsed);
    ASSERT_EQ(report.lines.size(), 10u);
    for (int i = 0; i < 10; ++i) {
        ASSERT_FALSE(report.lines[i]["led_id"].is_null()) << report.lines[i].dump();
        EXPECT_EQ(report.lines[i]["led_id"].get<int>(), ids[i]);
    }
}

TEST(DecodeImages, EmptyGlobAndBrokenFile) {
    TempDir dir("vlp_decode_bad");
    EXPECT_TRUE(expand_glob((dir.path() / "*.pgm").string()).empty());
    const auto empty = decode_images({});
    EXPECT_TRUE(empty.all_parsed);
    EXPECT_TRUE(empty.lines.empty());

    std::ofstream(dir.path() / "text.pgm") << "plain text";
    const auto report = decode_images(expand_glob((dir.path() / "*.pgm").string()));
    ASSERT_EQ(report.lines.size(), 1u);
    EXPECT_FALSE(report.all_parsed);
    EXPECT_TRUE(report.lines[0].contains("error"));
}
