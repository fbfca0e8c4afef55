#include "vlpfleet/scenario.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numbers>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <thread>

#include "vlpfleet/fleet.hpp"
#include "vlpfleet/pgm.hpp"
#include "vlpfleet/robot_agent.hpp"
#include "vlpfleet/vlp_decoder.hpp"

namespace vlp {

using nlohmann::json;

namespace {

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number_at(const json& obj, const char* key, const std::string& path, std::optional<double> fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(path + "." + key, "is required");
    }
    if (!v->is_number()) throw ConfigError(path + "." + key, "must be a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + "." + key, "must be finite");
    return d;
}

double positive_at(const json& obj, const char* key, const std::string& path, std::optional<double> fallback) {
    const double d = number_at(obj, key, path, fallback);
    if (!(d > 0.0)) throw ConfigError(path + "." + key, "must be positive");
    return d;
}

const json& object_at(const json& obj, const char* key, const std::string& path) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError(path + "." + key, "is required");
    if (!v->is_object()) throw ConfigError(path + "." + key, "must be an object");
    return *v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file, const std::string& field) {
    std::filesystem::path p(file);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) throw ConfigError(field, "file not found: " + p.string());
    return p;
}

Pose2D pose_at(const json& obj, const std::string& path) {
    return {number_at(obj, "x", path, std::nullopt), number_at(obj, "y", path, std::nullopt),
            number_at(obj, "theta", path, 0.0)};
}

std::uint64_t render_seed(std::uint64_t seed, std::size_t robot, std::size_t tick) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(robot), static_cast<std::uint64_t>(tick),
                      std::uint64_t{0xca3e7a}};
    std::mt19937_64 gen(seq);
    return gen();
}

const LedBeacon* visible_beacon(const Pose2D& pose, const CameraModel& camera, const LedMap& leds) {
    for (const auto& [id, beacon] : leds.beacons())
        if (project_led(pose, camera, beacon)) return &beacon;
    return nullptr;
}

WireMessage make_message(MessageType type, const std::string& robot_id, std::uint64_t& seq, std::uint64_t t_ms,
                         nlohmann::ordered_json payload) {
    WireMessage msg;
    msg.type = type;
    msg.robot_id = robot_id;
    msg.seq = ++seq;
    msg.t_ms = t_ms;
    msg.payload = std::move(payload);
    return msg;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("$", "scenario must be a JSON object");
    ScenarioConfig cfg;
    if (const json* name = find(doc, "name")) {
        if (!name->is_string()) throw ConfigError("name", "must be a string");
        cfg.name = name->get<std::string>();
    }

    const json* arena = find(doc, "arena");
    if (!arena || (arena->is_string() && arena->get<std::string>() == "builtin")) {
        cfg.grid = default_arena();
    } else if (arena->is_object()) {
        const json* pgm = find(*arena, "pgm");
        if (!pgm || !pgm->is_string()) throw ConfigError("arena.pgm", "must be a file name");
        const auto pgm_path = resolve(base_dir, pgm->get<std::string>(), "arena.pgm");
        std::filesystem::path sidecar = pgm_path;
        sidecar += ".json";
        if (const json* sc = find(*arena, "sidecar")) {
            if (!sc->is_string()) throw ConfigError("arena.sidecar", "must be a file name");
            sidecar = resolve(base_dir, sc->get<std::string>(), "arena.sidecar");
        } else if (!std::filesystem::exists(sidecar)) {
            throw ConfigError("arena.sidecar", "file not found: " + sidecar.string());
        }
        try {
            cfg.grid = OccupancyGrid::load(pgm_path, sidecar);
        } catch (const std::exception& e) {
            throw ConfigError("arena", e.what());
        }
    } else {
        throw ConfigError("arena", "must be \"builtin\" or {pgm, sidecar}");
    }

    const json* leds = find(doc, "led_map");
    if (!leds || (leds->is_string() && leds->get<std::string>() == "builtin")) {
        cfg.leds = LedMap({default_beacon()});
    } else if (leds->is_string()) {
        try {
            cfg.leds = LedMap::load(resolve(base_dir, leds->get<std::string>(), "led_map"));
        } catch (const MapLoadError& e) {
            throw ConfigError("led_map", e.what());
        }
    } else {
        throw ConfigError("led_map", "must be \"builtin\" or a file name");
    }
    if (cfg.leds.empty()) throw ConfigError("led_map", "needs at least one beacon");

    if (const json* cam = find(doc, "camera")) {
        if (!cam->is_object()) throw ConfigError("camera", "must be an object");
        CameraModel c;
        c.fx = positive_at(*cam, "fx", "camera", c.fx);
        c.fy = positive_at(*cam, "fy", "camera", c.fy);
        c.cx = number_at(*cam, "cx", "camera", c.cx);
        c.cy = number_at(*cam, "cy", "camera", c.cy);
        c.width = static_cast<int>(positive_at(*cam, "width", "camera", c.width));
        c.height = static_cast<int>(positive_at(*cam, "height", "camera", c.height));
        c.row_readout_time = positive_at(*cam, "row_readout_s", "camera", c.row_readout_time);
        c.mount_height = number_at(*cam, "mount_height_m", "camera", c.mount_height);
        c.mount_yaw = number_at(*cam, "mount_yaw_rad", "camera", c.mount_yaw);
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("camera", e.what());
        }
        cfg.camera = c;
    }
    for (const auto& [id, b] : cfg.leds.beacons())
        if (!(b.height > cfg.camera.mount_height))
            throw ConfigError("camera.mount_height_m", "must be below every LED");

    if (const json* noise = find(doc, "noise")) {
        if (!noise->is_object()) throw ConfigError("noise", "must be an object");
        cfg.noise.sigma_v = number_at(*noise, "sigma_v", "noise", cfg.noise.sigma_v);
        cfg.noise.sigma_omega = number_at(*noise, "sigma_omega", "noise", cfg.noise.sigma_omega);
        cfg.pixel_noise.sigma_px = number_at(*noise, "sigma_px", "noise", cfg.pixel_noise.sigma_px);
        if (cfg.noise.sigma_v < 0.0) throw ConfigError("noise.sigma_v", "must not be negative");
        if (cfg.noise.sigma_omega < 0.0) throw ConfigError("noise.sigma_omega", "must not be negative");
        if (cfg.pixel_noise.sigma_px < 0.0) throw ConfigError("noise.sigma_px", "must not be negative");
    }

    if (const json* seed = find(doc, "seed")) {
        if (!seed->is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
        cfg.seed = seed->get<std::uint64_t>();
    }
    cfg.duration_s = positive_at(doc, "duration_s", "$", cfg.duration_s);
    cfg.control_rate_hz = positive_at(doc, "control_rate_hz", "$", cfg.control_rate_hz);
    if (cfg.control_rate_hz < 10.0) throw ConfigError("control_rate_hz", "must be at least 10 Hz");

    const json* robots = find(doc, "robots");
    if (!robots || !robots->is_array() || robots->empty()) throw ConfigError("robots", "must be a non-empty array");
    static const std::regex id_pattern("[A-Za-z0-9_-]{1,32}");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < robots->size(); ++i) {
        const std::string path = "robots[" + std::to_string(i) + "]";
        const json& r = (*robots)[i];
        if (!r.is_object()) throw ConfigError(path, "must be an object");
        RobotSpec spec;
        const json* id = find(r, "id");
        if (!id || !id->is_string() || !std::regex_match(id->get<std::string>(), id_pattern))
            throw ConfigError(path + ".id", "must be 1-32 characters of [A-Za-z0-9_-]");
        spec.id = id->get<std::string>();
        if (!ids.insert(spec.id).second) throw ConfigError(path + ".id", "duplicate robot id " + spec.id);
        spec.start = pose_at(object_at(r, "start", path), path + ".start");
        if (cfg.grid.occupied_at(spec.start.position())) throw ConfigError(path + ".start", "lies in an occupied cell");
        if (const json* est = find(r, "initial_estimate")) {
            const std::string ep = path + ".initial_estimate";
            if (!est->is_object()) throw ConfigError(ep, "must be an object");
            InitialEstimate& e = spec.estimate;
            e.dx = number_at(*est, "dx", ep, e.dx);
            e.dy = number_at(*est, "dy", ep, e.dy);
            e.dtheta = number_at(*est, "dtheta", ep, e.dtheta);
            e.sigma_xy = positive_at(*est, "sigma_xy", ep, e.sigma_xy);
            e.sigma_theta = positive_at(*est, "sigma_theta", ep, e.sigma_theta);
        }
        const json* goals = find(r, "goals");
        if (!goals || (goals->is_string() && goals->get<std::string>() == "operator")) {
            spec.operator_goals = true;
        } else if (goals->is_array()) {
            for (std::size_t g = 0; g < goals->size(); ++g) {
                const std::string gp = path + ".goals[" + std::to_string(g) + "]";
                const json& item = (*goals)[g];
                if (!item.is_object()) throw ConfigError(gp, "must be an object");
                ScheduledGoal sg;
                sg.goal.x = number_at(item, "x", gp, std::nullopt);
                sg.goal.y = number_at(item, "y", gp, std::nullopt);
                sg.goal.tolerance = positive_at(item, "tolerance", gp, sg.goal.tolerance);
                sg.after_s = number_at(item, "after_s", gp, 0.0);
                spec.goals.push_back(sg);
            }
        } else {
            throw ConfigError(path + ".goals", "must be \"operator\" or an array");
        }
        cfg.robots.push_back(std::move(spec));
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(doc, path.parent_path());
}

ScenarioConfig coverage_handoff(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.name = "coverage-handoff";
    cfg.grid = default_arena();
    cfg.leds = LedMap({default_beacon()});
    cfg.seed = seed;
    cfg.duration_s = 40.0;

    RobotSpec a;
    a.id = "A";
    a.start = {0.80, 2.40, 0.0};
    // Placed by hand: the belief starts ~15 cm off.
    a.estimate = {-0.14, 0.06, 0.0, 0.20, 0.005};
    a.goals = {{{4.45, 2.40, 0.05}, 0.0}};

    RobotSpec b;
    b.id = "B";
    b.start = {4.10, 2.64, std::numbers::pi / 2};
    b.goals = {{{5.90, 4.45, 0.05}, 24.0}};

    cfg.robots = {a, b};
    return cfg;
}

json ScenarioSummary::to_json() const {
    json doc;
    doc["name"] = name;
    doc["seed"] = seed;
    doc["ticks"] = ticks;
    doc["window_peak_m"] = optional_number(window_peak_m);
    doc["window_ticks"] = window_ticks;
    doc["shared_coverage_peak_m"] = optional_number(shared_coverage_peak_m);
    doc["mean_speed_in"] = mean_speed_in;
    doc["mean_speed_out"] = mean_speed_out;
    json list = json::array();
    for (const auto& r : robots) {
        list.push_back({{"id", r.id},
                        {"entry_error_m", optional_number(r.entry_error_m)},
                        {"corrected_error_m", optional_number(r.corrected_error_m)},
                        {"exit_error_m", optional_number(r.exit_error_m)},
                        {"fixes_accepted", r.fixes_accepted},
                        {"fixes_rejected", r.fixes_rejected},
                        {"frames_decoded", r.frames_decoded},
                        {"frames_failed", r.frames_failed},
                        {"unknown_led", r.unknown_led},
                        {"goals_issued", r.goals_issued},
                        {"goals_reached", r.goals_reached},
                        {"goals_rejected", r.goals_rejected},
                        {"final_goal_error_m", optional_number(r.final_goal_error_m)},
                        {"contribution_window_m", optional_number(r.contribution_window_m)},
                        {"contribution_after_m", optional_number(r.contribution_after_m)}});
    }
    doc["robots"] = std::move(list);
    return doc;
}

namespace {

struct RobotRun {
    std::unique_ptr<RobotAgent> agent;
    std::unique_ptr<RobotLink> link;
    std::uint64_t seq{0};
    std::size_t next_goal{0};
    VelocityCommand last_cmd{};
    std::deque<double> fix_times;
    bool prev_in_coverage{false};
    bool entry_pending{false};
    std::size_t visit_accepted{0};
    int ticks_since_accept{1 << 20};
    bool exit_tracking{false};
    double travelled_since_exit{0.0};
    Vec2 last_position{};
};

}  // namespace

ScenarioSummary run_scenario(const ScenarioConfig& config, const RunOptions& options) {
    const double dt = 1.0 / config.control_rate_hz;
    const auto ticks = static_cast<std::size_t>(std::llround(config.duration_s * config.control_rate_hz));

    World world;
    world.grid = config.grid;
    world.noise = config.noise;
    const auto inflated = std::make_shared<const OccupancyGrid>(inflate(config.grid, kRobotRadius));

    ScenarioSummary summary;
    summary.name = config.name;
    summary.seed = config.seed;

    std::vector<RobotRun> runs(config.robots.size());
    for (std::size_t i = 0; i < config.robots.size(); ++i) {
        const RobotSpec& spec = config.robots[i];
        world.add_robot(spec.id, spec.start, config.seed);
        AgentConfig ac;
        ac.id = spec.id;
        ac.camera = config.camera;
        ac.led_map = config.leds;
        ac.process = config.noise;
        const Pose2D believed{spec.start.x + spec.estimate.dx, spec.start.y + spec.estimate.dy,
                              spec.start.theta + spec.estimate.dtheta};
        runs[i].agent = std::make_unique<RobotAgent>(
            ac, inflated, FusedState::from_pose(believed, spec.estimate.sigma_xy, spec.estimate.sigma_theta));
        runs[i].last_position = spec.start.position();
        runs[i].prev_in_coverage = visible_beacon(spec.start, config.camera, config.leds) != nullptr;
        if (options.link_factory) {
            runs[i].link = options.link_factory(spec.id);
            if (runs[i].link)
                runs[i].link->send(make_message(MessageType::Hello, spec.id, runs[i].seq, 0, {{"role", "robot"}}));
        }
        summary.robots.push_back({});
        summary.robots.back().id = spec.id;
    }

    std::optional<MetricsCsvWriter> csv;
    if (options.metrics_csv) csv.emplace(*options.metrics_csv);

    const auto wall_start = std::chrono::steady_clock::now();
    const std::size_t n = runs.size();
    std::vector<Scan> scans(n);
    std::vector<bool> in_cov(n);
    std::vector<Pose2D> estimates(n);

    for (std::size_t k = 0; k < ticks; ++k) {
        if (options.stop_requested && options.stop_requested()) break;
        const double t = static_cast<double>(k) * dt;
        const auto t_ms = static_cast<std::uint64_t>(std::llround(t * 1000.0));

        for (std::size_t i = 0; i < n; ++i) {
            RobotRun& run = runs[i];
            RobotSummary& stats = summary.robots[i];
            const RobotSpec& spec = config.robots[i];
            RobotAgent& agent = *run.agent;
            std::vector<GoalEvent> events;

            if (run.link) {
                for (const WireMessage& msg : run.link->receive()) {
                    if (msg.type != MessageType::Goal) continue;
                    Goal g{msg.payload.at("x").get<double>(), msg.payload.at("y").get<double>(),
                           msg.payload.value("tolerance", 0.05)};
                    events.push_back(agent.set_goal(g));
                }
            }
            if (!spec.operator_goals && !agent.goal_active() && run.next_goal < spec.goals.size() &&
                t + 1e-9 >= spec.goals[run.next_goal].after_s) {
                events.push_back(agent.set_goal(spec.goals[run.next_goal].goal));
                ++run.next_goal;
            }
            for (const auto& e : events) {
                ++stats.goals_issued;
                if (e.state == GoalState::Rejected) ++stats.goals_rejected;
            }

            const Pose2D truth = world.robots[i].pose;
            const LedBeacon* beacon = visible_beacon(truth, config.camera, config.leds);
            in_cov[i] = beacon != nullptr;
            // Out of coverage the frame holds no LED disk; decoding it would only find background.
            std::optional<FrameImage> frame;
            if (beacon)
                frame = render_frame(truth, config.camera, *beacon, t, config.pixel_noise,
                                     render_seed(config.seed, i, k));
            std::optional<OdometryDelta> odo;
            if (k > 0) odo = OdometryDelta{run.last_cmd.v, run.last_cmd.omega, dt};
            const bool navigating_before = agent.goal_active();
            TickReport report = agent.tick(t, odo, frame);
            for (auto& e : report.events) events.push_back(e);

            if (report.fix) {
                run.fix_times.push_back(t);
                if (report.fix_accepted) {
                    ++stats.fixes_accepted;
                    ++run.visit_accepted;
                    run.ticks_since_accept = 0;
                } else {
                    ++stats.fixes_rejected;
                    ++run.ticks_since_accept;
                }
            } else {
                ++run.ticks_since_accept;
            }
            while (!run.fix_times.empty() && t - run.fix_times.front() >= kFixRateWindowMs / 1000.0)
                run.fix_times.pop_front();
            if (report.unknown_led) ++stats.unknown_led;
            if (report.diagnostic) {
                if (*report.diagnostic == DecodeDiag::Ok)
                    ++stats.frames_decoded;
                else
                    ++stats.frames_failed;
            }

            estimates[i] = agent.state().pose();
            const double err = distance(estimates[i].position(), truth.position());
            if (in_cov[i] && !run.prev_in_coverage) {
                run.visit_accepted = 0;
                if (!stats.entry_error_m) {
                    stats.entry_error_m = err;
                    run.entry_pending = true;
                }
            }
            if (run.entry_pending && run.visit_accepted >= 3) {
                stats.corrected_error_m = err;
                run.entry_pending = false;
            }
            if (!in_cov[i] && run.prev_in_coverage && !stats.exit_error_m) stats.exit_error_m = err;

            for (const auto& e : events) {
                if (e.state == GoalState::Reached) {
                    ++stats.goals_reached;
                    stats.final_goal_error_m = distance(truth.position(), {e.goal.x, e.goal.y});
                }
            }

            if (navigating_before && agent.goal_active()) {
                (in_cov[i] ? stats.speed_sum_in : stats.speed_sum_out) += report.command.v;
                ++(in_cov[i] ? stats.ticks_in : stats.ticks_out);
            }

            world.robots[i].v = report.command.v;
            world.robots[i].omega = report.command.omega;
            run.last_cmd = report.command;

            if (run.link) {
                const FusedState& s = agent.state();
                nlohmann::ordered_json cov = nlohmann::ordered_json::array();
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) cov.push_back(s.cov(r, c));
                run.link->send(make_message(MessageType::Pose, spec.id, run.seq, t_ms,
                                            {{"x", s.mean(0)},
                                             {"y", s.mean(1)},
                                             {"theta", s.mean(2)},
                                             {"cov", std::move(cov)},
                                             {"in_coverage", static_cast<bool>(in_cov[i])}}));
                if (report.fix)
                    run.link->send(make_message(MessageType::VlpFix, spec.id, run.seq, t_ms,
                                                {{"led_id", report.fix->led_id},
                                                 {"x", report.fix->x},
                                                 {"y", report.fix->y},
                                                 {"sigma", report.fix->sigma},
                                                 {"accepted", report.fix_accepted}}));
                for (const auto& e : events) {
                    nlohmann::ordered_json p{{"state", to_string(e.state)}, {"x", e.goal.x}, {"y", e.goal.y}};
                    if (!e.reason.empty()) p["reason"] = e.reason;
                    run.link->send(make_message(MessageType::GoalStatus, spec.id, run.seq, t_ms, std::move(p)));
                }
            }
        }

        for (std::size_t i = 0; i < n; ++i) scans[i] = raycast_scan(world.robots[i].pose, world.grid);

        std::vector<std::optional<double>> peaks(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                try {
                    const double p = boundary_disagreement(scans[i], world.robots[i].pose, estimates[i], scans[j],
                                                           world.robots[j].pose, estimates[j]);
                    peaks[i] = std::max(peaks[i].value_or(0.0), p);
                    peaks[j] = std::max(peaks[j].value_or(0.0), p);
                } catch (const NoCommonBoundary&) {
                }
            }
        }

        // Shared coverage: the first two robots both in coverage, each past its entry
        // correction (three accepted fixes this visit) and still receiving fixes. The
        // measurement window is the part of it where neither robot is driving.
        if (n >= 2) {
            bool shared = true;
            bool parked = true;
            for (std::size_t i = 0; i < 2; ++i) {
                shared = shared && in_cov[i] && runs[i].visit_accepted >= 3 && runs[i].ticks_since_accept <= 1;
                parked = parked && !runs[i].agent->goal_active();
            }
            if (shared) {
                try {
                    const double p = boundary_disagreement(scans[0], world.robots[0].pose, estimates[0], scans[1],
                                                           world.robots[1].pose, estimates[1]);
                    summary.shared_coverage_peak_m = std::max(summary.shared_coverage_peak_m.value_or(0.0), p);
                    if (parked) {
                        summary.window_peak_m = std::max(summary.window_peak_m.value_or(0.0), p);
                        ++summary.window_ticks;
                        for (std::size_t i = 0; i < 2; ++i) {
                            const double c = boundary_error(scans[i], world.robots[i].pose, estimates[i]);
                            auto& slot = summary.robots[i].contribution_window_m;
                            slot = std::max(slot.value_or(0.0), c);
                        }
                    }
                } catch (const NoCommonBoundary&) {
                }
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            RobotRun& run = runs[i];
            const Pose2D& truth = world.robots[i].pose;
            if (summary.window_ticks > 0 && !in_cov[i] && run.prev_in_coverage) {
                run.exit_tracking = true;
                run.travelled_since_exit = 0.0;
            }
            if (run.exit_tracking) {
                if (in_cov[i]) {
                    run.exit_tracking = false;
                } else {
                    run.travelled_since_exit += distance(truth.position(), run.last_position);
                    if (run.travelled_since_exit >= kPostExitTravel) {
                        const double c = boundary_error(scans[i], truth, estimates[i]);
                        auto& slot = summary.robots[i].contribution_after_m;
                        slot = std::max(slot.value_or(0.0), c);
                    }
                }
            }
            run.last_position = truth.position();
            run.prev_in_coverage = in_cov[i];

            const double fix_rate = static_cast<double>(run.fix_times.size()) / (kFixRateWindowMs / 1000.0);
            if (csv) {
                MetricsRow row;
                row.t_ms = t_ms;
                row.robot_id = config.robots[i].id;
                row.true_x = truth.x;
                row.true_y = truth.y;
                row.est_x = estimates[i].x;
                row.est_y = estimates[i].y;
                row.err_m = distance(truth.position(), estimates[i].position());
                row.in_coverage = in_cov[i];
                row.fix_rate = fix_rate;
                row.boundary_peak_m = peaks[i];
                csv->write(row);
            }
            if (run.link) {
                run.link->send(make_message(MessageType::Metric, config.robots[i].id, run.seq, t_ms,
                                            {{"name", "err_m"},
                                             {"value", distance(truth.position(), estimates[i].position())}}));
                if (peaks[i])
                    run.link->send(make_message(MessageType::Metric, config.robots[i].id, run.seq, t_ms,
                                                {{"name", "boundary_peak_m"}, {"value", *peaks[i]}}));
                run.link->send(make_message(MessageType::Metric, config.robots[i].id, run.seq, t_ms,
                                            {{"name", "fix_rate"}, {"value", fix_rate}}));
            }
        }

        step(world, dt);
        ++summary.ticks;

        if (options.realtime_factor > 0.0) {
            const auto due = wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                              std::chrono::duration<double>((t + dt) * options.realtime_factor));
            std::this_thread::sleep_until(due);
        }
    }

    double sum_in = 0.0, sum_out = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (const auto& r : summary.robots) {
        sum_in += r.speed_sum_in;
        n_in += r.ticks_in;
        sum_out += r.speed_sum_out;
        n_out += r.ticks_out;
    }
    summary.mean_speed_in = n_in ? sum_in / static_cast<double>(n_in) : 0.0;
    summary.mean_speed_out = n_out ? sum_out / static_cast<double>(n_out) : 0.0;
    return summary;
}

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
    std::vector<std::filesystem::path> out;
    glob_t g{};
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    ::globfree(&g);
    return out;
}

DecodeReport decode_images(const std::vector<std::filesystem::path>& files) {
    DecodeReport report;
    for (const auto& file : files) {
        json line;
        line["file"] = file.string();
        try {
            const FrameImage frame = read_pgm(file);
            const DecodeResult r = decode_frame(frame);
            if (r.detection) {
                line["led_id"] = r.detection->led_id;
                line["u"] = r.detection->roi.center_u;
                line["v"] = r.detection->roi.center_v;
                line["quality"] = r.detection->quality;
            } else {
                line["led_id"] = nullptr;
                line["u"] = nullptr;
                line["v"] = nullptr;
                line["quality"] = 0.0;
            }
            line["diagnostic"] = to_string(r.diagnostic);
        } catch (const std::exception& e) {
            line["error"] = e.what();
            report.all_parsed = false;
        }
        report.lines.push_back(std::move(line));
    }
    return report;
}

}  // namespace vlp
