#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>

#include "vlpfleet/host_server.hpp"
#include "vlpfleet/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

// VLP_FLEET_SEED wins over the config file.
void apply_seed_override(vlp::ScenarioConfig& config) {
    const char* env = std::getenv("VLP_FLEET_SEED");
    if (!env || !*env) return;
    try {
        std::size_t used = 0;
        const unsigned long long seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        config.seed = seed;
    } catch (const std::exception&) {
        throw vlp::ConfigError("VLP_FLEET_SEED", "not an unsigned integer");
    }
}

int summary_exit(const vlp::ScenarioSummary& summary) {
    std::cout << summary.to_json().dump(2) << '\n';
    for (const auto& r : summary.robots)
        if (r.goals_rejected > 0) return kExitPartial;
    return kExitOk;
}

int run_headless(vlp::ScenarioConfig config, const std::string& metrics) {
    vlp::RunOptions options;
    if (!metrics.empty()) options.metrics_csv = metrics;
    options.stop_requested = [] { return g_stop.load(); };
    return summary_exit(vlp::run_scenario(config, options));
}

struct ServeArgs {
    std::string bind{"127.0.0.1"};
    std::uint16_t http_port{7800};
    std::uint16_t robot_port{7801};
    std::string console_dir{VLPFLEET_CONSOLE_DIR};
    double realtime{1.0};
};

int run_serve(const vlp::ScenarioConfig& config, const std::string& metrics, const ServeArgs& args) {
    vlp::HostContext context;
    context.map_message = vlp::make_map_message(config.grid, config.leds, context.host_id, 0, 0);
    vlp::HostServer host({args.bind, args.robot_port, args.http_port, args.console_dir}, context);
    host.start();
    std::cerr << "console: http://" << args.bind << ':' << host.http_port() << "/  robots: tcp " << args.bind
              << ':' << host.robot_port() << '\n';

    vlp::RunOptions options;
    if (!metrics.empty()) options.metrics_csv = metrics;
    options.realtime_factor = args.realtime;
    options.stop_requested = [] { return g_stop.load(); };
    const std::uint16_t port = host.robot_port();
    const std::string address = args.bind;
    options.link_factory = [&](const std::string&) { return vlp::connect_robot_link(address, port); };
    const auto summary = vlp::run_scenario(config, options);
    host.stop();
    return summary_exit(summary);
}

int run_decode(const std::string& pattern) {
    const auto report = vlp::decode_images(vlp::expand_glob(pattern));
    for (const auto& line : report.lines) std::cout << line.dump() << '\n';
    return report.all_parsed ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-robot visible light positioning simulator and fleet host"};
    app.require_subcommand(1);

    std::string config_path;
    std::string metrics{"metrics.csv"};

    auto* simulate = app.add_subcommand("simulate", "Run a scenario headless");
    simulate->add_option("config", config_path, "Scenario JSON")->required();
    simulate->add_option("--metrics", metrics, "Per-tick metrics CSV (empty to skip)");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Run a scenario with the fleet host and operator console");
    serve->add_option("config", config_path, "Scenario JSON")->required();
    serve->add_option("--metrics", metrics, "Per-tick metrics CSV (empty to skip)");
    serve->add_option("--bind", serve_args.bind, "Listen address");
    serve->add_option("--http-port", serve_args.http_port, "Console HTTP/WebSocket port");
    serve->add_option("--robot-port", serve_args.robot_port, "Robot TCP port");
    serve->add_option("--console-dir", serve_args.console_dir, "Static console files");
    serve->add_option("--realtime", serve_args.realtime, "Wall seconds per simulated second (0 = unpaced)")
        ->check(CLI::NonNegativeNumber);

    std::string pattern;
    auto* decode = app.add_subcommand("decode", "Decode LED ids from PGM frames");
    decode->add_option("glob", pattern, "File glob, e.g. frames/*.pgm")->required();

    auto* experiment = app.add_subcommand("experiment", "Run a builtin experiment");
    experiment->require_subcommand(1);
    auto* handoff = experiment->add_subcommand("coverage-handoff", "Two-robot LED coverage handoff");
    std::optional<std::uint64_t> seed;
    handoff->add_option("--seed", seed, "Random seed");
    handoff->add_option("--metrics", metrics, "Per-tick metrics CSV (empty to skip)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    try {
        if (*decode) return run_decode(pattern);
        if (*handoff) {
            vlp::ScenarioConfig config = vlp::coverage_handoff(1);
            if (seed)
                config.seed = *seed;
            else
                apply_seed_override(config);
            return run_headless(std::move(config), metrics);
        }
        vlp::ScenarioConfig config = vlp::load_scenario(config_path);
        apply_seed_override(config);
        if (*simulate) return run_headless(std::move(config), metrics);
        return run_serve(config, metrics, serve_args);
    } catch (const vlp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPartial;
    }
}
