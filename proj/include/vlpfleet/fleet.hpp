#pragma once

#include <boost/circular_buffer.hpp>

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vlpfleet/pose_estimator.hpp"
#include "vlpfleet/protocol.hpp"
#include "vlpfleet/sim_world.hpp"

namespace vlp {

inline constexpr std::size_t kTrajectoryCapacity = 10'000;
inline constexpr std::uint64_t kFixRateWindowMs = 5'000;

struct PoseSample {
    std::uint64_t seq{0};
    std::uint64_t t_ms{0};
    double x{0.0};
    double y{0.0};
    double theta{0.0};
};

struct RobotRecord {
    bool connected{false};
    std::uint64_t last_seq{0};
    bool has_seq{false};
    PoseSample pose{};
    std::array<double, 9> cov{};
    bool in_coverage{false};
    std::string goal_state;  // empty until the first GOAL_STATUS
    double goal_x{0.0};
    double goal_y{0.0};
    std::deque<std::uint64_t> fix_times_ms;
    std::map<std::string, double> metrics;
    boost::circular_buffer<PoseSample> trajectory{kTrajectoryCapacity};

    /// Fixes per second over the trailing window ending at now_ms.
    double fix_rate(std::uint64_t now_ms) const;
};

struct FleetState {
    std::map<std::string, RobotRecord> robots;
    std::uint64_t stale_dropped{0};
    std::uint64_t errors_sent{0};
};

enum class Role { Unknown, Robot, Console };

/// What the host knows about one connection.
struct SessionInfo {
    Role role{Role::Unknown};
    std::string robot_id;  // registered robot for robot sessions
    std::uint64_t last_seq{0};
    bool has_seq{false};
};

struct Outbound {
    enum class To { Sender, Robot, Consoles };
    To to{To::Sender};
    std::string robot_id;  // target robot for To::Robot
    WireMessage msg;
};

/// Static context the host replies with.
struct HostContext {
    WireMessage map_message;
    std::string host_id{"host"};
};

/// MAP message describing the grid and LED map.
WireMessage make_map_message(const OccupancyGrid& grid, const LedMap& leds, const std::string& robot_id,
                             std::uint64_t seq, std::uint64_t t_ms);
WireMessage make_error(const std::string& robot_id, std::uint64_t t_ms, const std::string& code,
                       const std::string& message);

/// Applies one decoded message to the fleet and returns the messages to send.
std::vector<Outbound> session_handle(FleetState& state, SessionInfo& session, const WireMessage& msg,
                                     const HostContext& context);

/// Marks the robot of a closed session offline; its history is kept.
void session_closed(FleetState& state, const SessionInfo& session);

struct MetricsRow {
    std::uint64_t t_ms{0};
    std::string robot_id;
    double true_x{0.0};
    double true_y{0.0};
    double est_x{0.0};
    double est_y{0.0};
    double err_m{0.0};
    bool in_coverage{false};
    double fix_rate{0.0};
    std::optional<double> boundary_peak_m;
};

/// Append-only metrics.csv with a fixed column order and fixed-precision numbers.
class MetricsCsvWriter {
public:
    explicit MetricsCsvWriter(const std::filesystem::path& path);
    void write(const MetricsRow& row);
    void flush() { out_.flush(); }

    static constexpr const char* kHeader =
        "t_ms,robot_id,true_x,true_y,est_x,est_y,err_m,in_coverage,fix_rate,boundary_peak_m";

private:
    std::ofstream out_;
};

}  // namespace vlp
