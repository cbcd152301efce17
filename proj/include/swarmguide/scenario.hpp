#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "swarmguide/errors.hpp"
#include "swarmguide/tactile.hpp"
#include "swarmguide/vehicle_sim.hpp"

namespace swarmguide {

enum class Interpolation { Hold, Linear, Smoothstep };

std::string_view to_string(Interpolation mode);

// Reaching `position` at `time`, moving from the previous waypoint as `mode`.
struct Waypoint {
    double time = 0.0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Interpolation mode = Interpolation::Linear;
};

/**
 * Piecewise hand path. Before the first waypoint and after the last one the
 * hand holds still. Hold segments jump at their end time; smoothstep
 * segments are cubic Hermite curves whose end slopes match an adjacent
 * linear segment's velocity (zero otherwise), so hold -> smoothstep ->
 * linear gives a constant-acceleration ramp when the smoothstep covers half
 * the distance the linear speed would.
 */
class HandTrajectory {
public:
    HandTrajectory() = default;
    explicit HandTrajectory(std::vector<Waypoint> waypoints);

    Eigen::Vector3d position_at(double t) const;
    const std::vector<Waypoint>& waypoints() const { return waypoints_; }
    double end_time() const;

private:
    Eigen::Vector3d segment_velocity(std::size_t segment) const;

    std::vector<Waypoint> waypoints_;
};

enum class LogFormat { Csv, Structured };

std::optional<LogFormat> parse_log_format(std::string_view text);

struct ScenarioConfig {
    std::string name;
    WorldConfig world;
    double duration = 10.0;  // s
    HandTrajectory hand;
    LogFormat format = LogFormat::Csv;

    std::uint64_t tick_count() const;
};

inline const Eigen::Vector3d kDefaultHandPosition{0.0, 0.0, 1.0};

// Diagnostic pointing at a field of a scenario document.
class ScenarioError : public ConfigError {
public:
    ScenarioError(std::string field, int line, const std::string& message);

    const std::string& field() const { return field_; }
    int line() const { return line_; }  // 1-based, 0 when unknown

private:
    std::string field_;
    int line_;
};

/**
 * Parses a scenario document. Omitted fields take their defaults; unknown
 * fields, malformed values and invariant violations throw ScenarioError.
 */
ScenarioConfig load_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::string& path);

// Re-checks every invariant of an assembled config (e.g. after overrides).
void validate_scenario(const ScenarioConfig& config);

struct LogRow {
    std::uint64_t tick = 0;
    double time = 0.0;
    Eigen::Vector3d hand_position = Eigen::Vector3d::Zero();
    Eigen::Vector3d hand_velocity = Eigen::Vector3d::Zero();
    LinkVectors raw_displacement{};
    LinkVectors correction{};
    VehiclePositions goal{};
    VehiclePositions position{};
    double spread = 1.0;
    double spread_rate = 0.0;
    ShapeClass shape = ShapeClass::Regular;
    RateClass rate = RateClass::Constant;
    PatternId pattern = PatternId::None;

    bool operator==(const LogRow&) const = default;
};

struct LogTable {
    std::vector<LogRow> rows;

    bool operator==(const LogTable&) const = default;
};

// Column names in export order.
const std::vector<std::string>& log_columns();

LogRow make_log_row(const WorldState& world, PatternId pattern);

struct TickFailure {
    std::uint64_t tick = 0;
    std::string message;
};

struct RunResult {
    LogTable log;
    std::optional<TickFailure> failure;  // set when the run stopped early

    bool ok() const { return !failure.has_value(); }
};

// Deterministic run from the nominal spawn to the scenario duration.
RunResult run_scenario(const ScenarioConfig& config);

std::string export_log(const LogTable& log, LogFormat format);

// Inverse of export_log; throws ConfigError on malformed input.
LogTable import_log(std::string_view text, LogFormat format);

}  // namespace swarmguide
