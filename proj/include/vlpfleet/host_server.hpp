#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "vlpfleet/fleet.hpp"
#include "vlpfleet/scenario.hpp"

namespace vlp {

struct HostOptions {
    std::string bind_address{"127.0.0.1"};
    std::uint16_t robot_port{7801};  // 0 picks a free port
    std::uint16_t http_port{7800};
    std::filesystem::path console_dir{"console"};
};

/// Fleet host: robot TCP listener, console HTTP + WebSocket feed, shared FleetState.
/// All sessions run on one I/O thread, which is the only writer of the fleet state.
class HostServer {
public:
    HostServer(HostOptions options, HostContext context);
    ~HostServer();
    HostServer(const HostServer&) = delete;
    HostServer& operator=(const HostServer&) = delete;

    /// Binds both listeners and starts the I/O thread. Throws on bind failure.
    void start();
    void stop();

    std::uint16_t robot_port() const;
    std::uint16_t http_port() const;

    /// Copy of the fleet state taken under the state lock.
    FleetState snapshot() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Robot-side TCP client speaking the framed protocol.
std::unique_ptr<RobotLink> connect_robot_link(const std::string& host, std::uint16_t port);

}  // namespace vlp
