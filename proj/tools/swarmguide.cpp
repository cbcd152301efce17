// swarmguide: headless scenario runner and live simulation server.
//
//   swarmguide run <scenario> [--out <path>] [--format csv|structured] [--duration-s <f>]
//   swarmguide validate <scenario>
//   swarmguide serve <scenario> [--port N] [--rate-div N]
//
// Exit codes: 0 success, 2 scenario (or usage) error, 3 runtime error.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "swarmguide/scenario.hpp"
#include "swarmguide/sim_server.hpp"

namespace {

constexpr int kExitScenario = 2;
constexpr int kExitRuntime = 3;

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int)
{
    g_stop = 1;
}

int run_command(const std::string& path, const std::string& out_path,
                const std::optional<std::string>& format_text, const std::optional<double>& duration)
{
    using namespace swarmguide;
    ScenarioConfig config;
    try {
        config = load_scenario_file(path);
        if (duration) {
            config.duration = *duration;
            validate_scenario(config);
        }
        if (format_text) {
            const auto format = parse_log_format(*format_text);
            if (!format) {
                std::cerr << "error: unsupported format '" << *format_text << "'\n";
                return kExitScenario;
            }
            config.format = *format;
        }
    } catch (const ConfigError& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return kExitScenario;
    }

    const auto result = run_scenario(config);
    const auto document = export_log(result.log, config.format);
    if (out_path.empty() || out_path == "-") {
        std::cout << document;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out || !(out << document)) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return kExitRuntime;
        }
    }
    if (result.failure) {
        std::cerr << "error: tick " << result.failure->tick << ": " << result.failure->message
                  << " (partial log written)\n";
        return kExitRuntime;
    }
    return 0;
}

int validate_command(const std::string& path)
{
    try {
        const auto config = swarmguide::load_scenario_file(path);
        std::cout << "ok: " << (config.name.empty() ? path : config.name) << ", "
                  << config.tick_count() << " ticks at " << config.world.rate_hz << " Hz\n";
        return 0;
    } catch (const swarmguide::ConfigError& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return kExitScenario;
    }
}

int serve_command(const std::string& path, std::optional<int> port, int rate_div)
{
    using namespace swarmguide;
    ScenarioConfig config;
    try {
        config = load_scenario_file(path);
    } catch (const ConfigError& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return kExitScenario;
    }

    ServerOptions options;
    options.host.rate_div = rate_div;
    if (port) {
        options.port = static_cast<std::uint16_t>(*port);
    } else if (const char* env = std::getenv("SWARMGUIDE_PORT")) {
        options.port = static_cast<std::uint16_t>(std::atoi(env));
    }

    try {
        SimServer server(config.world, config.hand.position_at(0.0), options);
        server.start();
        std::cout << "serving on ws://" << options.address << ":" << server.port() << "/\n"
                  << std::flush;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_stop) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Human-guided impedance formation simulator"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out_path;
    std::optional<std::string> format;
    std::optional<double> duration;
    auto* run = app.add_subcommand("run", "Run a scenario headless and export its log");
    run->add_option("scenario", scenario, "Scenario file")->required();
    run->add_option("--out", out_path, "Output path (default: stdout)");
    run->add_option("--format", format, "csv or structured");
    run->add_option("--duration-s", duration, "Override the scenario duration");

    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", scenario, "Scenario file")->required();

    std::optional<int> port;
    int rate_div = 2;
    auto* serve = app.add_subcommand("serve", "Run the live WebSocket server");
    serve->add_option("scenario", scenario, "Scenario file")->required();
    serve->add_option("--port", port, "Listen port (default $SWARMGUIDE_PORT or 8765)")
        ->check(CLI::Range(0, 65535));
    serve->add_option("--rate-div", rate_div, "Send state every N ticks")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitScenario;
    }

    if (*run) {
        return run_command(scenario, out_path, format, duration);
    }
    if (*validate) {
        return validate_command(scenario);
    }
    return serve_command(scenario, port, rate_div);
}
