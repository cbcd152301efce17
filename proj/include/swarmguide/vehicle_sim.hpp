#pragma once

#include <array>
#include <cstdint>
#include <vector>
#include <optional>

#include <Eigen/Dense>

#include "swarmguide/formation.hpp"
#include "swarmguide/impedance.hpp"

namespace swarmguide {

struct PidGains {
    double kp = 8.0;                 // 1/s^2
    double ki = 0.4;                 // 1/s^3
    double kd = 5.0;                 // 1/s
    double accel_limit = 6.0;        // m/s^2, bound on |a|
    double integrator_limit = 0.25;  // m*s, per axis

    void validate() const;
};

struct VehicleState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d integrator = Eigen::Vector3d::Zero();
    Eigen::Vector3d previous_error = Eigen::Vector3d::Zero();

    bool operator==(const VehicleState&) const = default;
};

struct PidOutput {
    Eigen::Vector3d acceleration;
    VehicleState state;  // controller fields updated, kinematics untouched
};

/**
 * a = Kp e + Ki int(e) + Kd de/dt per axis, e = goal - position. The
 * integrator is clamped per axis and the command is scaled to |a| <= limit.
 * The derivative is the backward difference of the error.
 */
PidOutput pid_step(const PidGains& gains, const VehicleState& state, const Eigen::Vector3d& goal,
                   double dt);

// Semi-implicit Euler: v += a dt, then p += v dt. Throws ParameterError when dt <= 0.
VehicleState vehicle_step(const VehicleState& state, const Eigen::Vector3d& acceleration, double dt);

enum class HeadingMode { Fixed, HandVelocity };

struct WorldConfig {
    ImpedanceParams impedance;
    FormationConfig formation;
    MetricsConfig metrics;
    PidGains pid;
    double rate_hz = 80.0;
    double velocity_window = 0.2;  // s
    HeadingMode heading_mode = HeadingMode::Fixed;
    // HandVelocity mode only: smoothing constant and the speed above which
    // the heading follows the hand.
    double heading_time_constant = 0.5;
    double heading_min_speed = 0.2;

    double period() const { return 1.0 / rate_hz; }
    void validate() const;
};

struct WorldState {
    HandInput hand;
    std::vector<HandSample> hand_history;  // newest last, trimmed to the velocity window
    std::array<VehicleState, kVehicleCount> vehicles{};
    std::array<ImpedanceLinkState, kLinkCount> links{};
    FormationGoals goals;
    FormationMetrics metrics;
    Eigen::Vector3d heading = Eigen::Vector3d::UnitX();
    Eigen::Vector3d smoothed_hand_velocity = Eigen::Vector3d::Zero();
    std::uint64_t tick = 0;
    double period = 1.0 / 80.0;

    // Always tick * period; never accumulated.
    double time() const { return static_cast<double>(tick) * period; }
};

// Precomputed, immutable inputs of world_tick.
struct WorldContext {
    WorldConfig config;
    DiscreteModel model;
};

// Validates the config and builds the discrete impedance model.
WorldContext make_context(const WorldConfig& config);

/**
 * World at tick 0: vehicles at rest on the nominal rhombus behind `hand`,
 * links relaxed, goals equal to the layout.
 */
WorldState spawn_world(const WorldContext& context, const Eigen::Vector3d& hand);

/**
 * One fixed-period step: ingest the hand sample, estimate its velocity,
 * hand force, step every link (clamped), goals from actual positions, PID
 * and kinematics per vehicle, metrics. Pure; any failure throws and leaves
 * `world` untouched. The sample's timestamp must not precede world.time().
 */
WorldState world_tick(const WorldState& world, const HandSample& sample,
                      const WorldContext& context);

}  // namespace swarmguide
