#include "vlpfleet/fleet.hpp"

#include <cstdio>

namespace vlp {

using ojson = nlohmann::ordered_json;

double RobotRecord::fix_rate(std::uint64_t now_ms) const {
    std::size_t n = 0;
    for (const std::uint64_t t : fix_times_ms)
        if (t <= now_ms && now_ms - t < kFixRateWindowMs) ++n;
    return static_cast<double>(n) / (static_cast<double>(kFixRateWindowMs) / 1000.0);
}

WireMessage make_map_message(const OccupancyGrid& grid, const LedMap& leds, const std::string& robot_id,
                             std::uint64_t seq, std::uint64_t t_ms) {
    WireMessage msg;
    msg.type = MessageType::Map;
    msg.robot_id = robot_id;
    msg.seq = seq;
    msg.t_ms = t_ms;
    std::string cells;
    cells.reserve(grid.cells().size());
    for (const auto c : grid.cells()) cells.push_back(c ? '1' : '0');
    ojson beacons = ojson::array();
    for (const auto& [id, b] : leds.beacons()) {
        beacons.push_back({{"id", id},
                           {"x_m", b.position.x},
                           {"y_m", b.position.y},
                           {"height_m", b.height},
                           {"diameter_m", b.diameter}});
    }
    msg.payload = {{"resolution_m", grid.resolution()},
                   {"origin_x_m", grid.origin().x},
                   {"origin_y_m", grid.origin().y},
                   {"width", grid.width()},
                   {"height", grid.height()},
                   {"cells", std::move(cells)},
                   {"beacons", std::move(beacons)}};
    return msg;
}

WireMessage make_error(const std::string& robot_id, std::uint64_t t_ms, const std::string& code,
                       const std::string& message) {
    WireMessage msg;
    msg.type = MessageType::Error;
    msg.robot_id = robot_id.empty() ? "host" : robot_id;
    msg.t_ms = t_ms;
    msg.payload = {{"code", code}, {"message", message}};
    return msg;
}

namespace {

Outbound reply(WireMessage msg) { return {Outbound::To::Sender, {}, std::move(msg)}; }
Outbound to_consoles(const WireMessage& msg) { return {Outbound::To::Consoles, {}, msg}; }

}  // namespace

std::vector<Outbound> session_handle(FleetState& state, SessionInfo& session, const WireMessage& msg,
                                     const HostContext& context) {
    std::vector<Outbound> out;
    auto error = [&](const std::string& code, const std::string& text) {
        ++state.errors_sent;
        out.push_back(reply(make_error(context.host_id, msg.t_ms, code, text)));
        return out;
    };

    if (msg.type == MessageType::Hello) {
        const std::string& role = msg.payload.at("role").get_ref<const std::string&>();
        session.has_seq = true;
        session.last_seq = msg.seq;
        if (role == "robot") {
            session.role = Role::Robot;
            session.robot_id = msg.robot_id;
            RobotRecord& rec = state.robots[msg.robot_id];
            rec.connected = true;
            rec.has_seq = false;
        } else {
            session.role = Role::Console;
        }
        WireMessage map = context.map_message;
        map.robot_id = msg.robot_id;
        map.t_ms = msg.t_ms;
        out.push_back(reply(std::move(map)));
        return out;
    }
    if (session.role == Role::Unknown) return error("hello_required", "send HELLO first");
    if (msg.type == MessageType::Error) return out;
    if (msg.type == MessageType::MapReq) {
        WireMessage map = context.map_message;
        map.robot_id = msg.robot_id;
        map.t_ms = msg.t_ms;
        out.push_back(reply(std::move(map)));
        return out;
    }
    if (msg.type == MessageType::Map) return error("unexpected", "MAP is sent by the host only");

    if (msg.type == MessageType::Goal) {
        if (session.has_seq && msg.seq <= session.last_seq) {
            ++state.stale_dropped;
            return out;
        }
        session.has_seq = true;
        session.last_seq = msg.seq;
        const auto it = state.robots.find(msg.robot_id);
        if (it == state.robots.end()) return error("unknown_robot", "unknown robot " + msg.robot_id);
        if (!it->second.connected) return error("robot_offline", "robot " + msg.robot_id + " is offline");
        out.push_back({Outbound::To::Robot, msg.robot_id, msg});
        return out;
    }

    // Robot telemetry.
    if (session.role != Role::Robot) return error("not_a_robot", "telemetry requires a robot session");
    if (msg.robot_id != session.robot_id)
        return error("robot_mismatch", "session is registered as " + session.robot_id);
    RobotRecord& rec = state.robots[session.robot_id];
    if (rec.has_seq && msg.seq <= rec.last_seq) {
        ++state.stale_dropped;
        return out;
    }
    rec.has_seq = true;
    rec.last_seq = msg.seq;
    const ojson& p = msg.payload;
    switch (msg.type) {
        case MessageType::Pose: {
            rec.pose = {msg.seq, msg.t_ms, p.at("x").get<double>(), p.at("y").get<double>(),
                        p.at("theta").get<double>()};
            for (std::size_t i = 0; i < 9; ++i) rec.cov[i] = p.at("cov").at(i).get<double>();
            rec.in_coverage = p.at("in_coverage").get<bool>();
            rec.trajectory.push_back(rec.pose);
            break;
        }
        case MessageType::VlpFix:
            rec.fix_times_ms.push_back(msg.t_ms);
            while (!rec.fix_times_ms.empty() && msg.t_ms - rec.fix_times_ms.front() >= kFixRateWindowMs)
                rec.fix_times_ms.pop_front();
            break;
        case MessageType::Metric:
            rec.metrics[p.at("name").get<std::string>()] = p.at("value").get<double>();
            break;
        case MessageType::GoalStatus:
            rec.goal_state = p.at("state").get<std::string>();
            rec.goal_x = p.at("x").get<double>();
            rec.goal_y = p.at("y").get<double>();
            break;
        default:
            break;
    }
    out.push_back(to_consoles(msg));
    return out;
}

void session_closed(FleetState& state, const SessionInfo& session) {
    if (session.role != Role::Robot) return;
    const auto it = state.robots.find(session.robot_id);
    if (it != state.robots.end()) it->second.connected = false;
}

MetricsCsvWriter::MetricsCsvWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
    out_ << kHeader << '\n';
}

void MetricsCsvWriter::write(const MetricsRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%d,%.3f,", row.true_x, row.true_y, row.est_x,
                  row.est_y, row.err_m, row.in_coverage ? 1 : 0, row.fix_rate);
    out_ << row.t_ms << ',' << row.robot_id << ',' << buf;
    if (row.boundary_peak_m) {
        std::snprintf(buf, sizeof buf, "%.6f", *row.boundary_peak_m);
        out_ << buf;
    }
    out_ << '\n';
}

}  // namespace vlp
