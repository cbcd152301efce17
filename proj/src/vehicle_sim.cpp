#include "swarmguide/vehicle_sim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "swarmguide/errors.hpp"

namespace swarmguide {

void PidGains::validate() const
{
    if (!(std::isfinite(kp) && kp > 0.0)) {
        throw ParameterError(fmt::format("pid kp must be > 0, got {}", kp));
    }
    if (!(std::isfinite(ki) && ki >= 0.0)) {
        throw ParameterError(fmt::format("pid ki must be >= 0, got {}", ki));
    }
    if (!(std::isfinite(kd) && kd >= 0.0)) {
        throw ParameterError(fmt::format("pid kd must be >= 0, got {}", kd));
    }
    if (!(std::isfinite(accel_limit) && accel_limit > 0.0)) {
        throw ParameterError(fmt::format("pid accel limit must be > 0, got {}", accel_limit));
    }
    if (!(std::isfinite(integrator_limit) && integrator_limit >= 0.0)) {
        throw ParameterError(
            fmt::format("pid integrator limit must be >= 0, got {}", integrator_limit));
    }
}

PidOutput pid_step(const PidGains& gains, const VehicleState& state, const Eigen::Vector3d& goal,
                   double dt)
{
    if (!(std::isfinite(dt) && dt > 0.0)) {
        throw ParameterError(fmt::format("pid dt must be > 0, got {}", dt));
    }
    if (!goal.allFinite() || !state.position.allFinite() || !state.integrator.allFinite() ||
        !state.previous_error.allFinite()) {
        throw NumericError("non-finite pid input");
    }

    const Eigen::Vector3d error = goal - state.position;
    Eigen::Vector3d integrator = state.integrator + error * dt;
    for (int axis = 0; axis < 3; ++axis) {
        integrator[axis] =
            std::clamp(integrator[axis], -gains.integrator_limit, gains.integrator_limit);
    }
    const Eigen::Vector3d derivative = (error - state.previous_error) / dt;

    Eigen::Vector3d accel = gains.kp * error + gains.ki * integrator + gains.kd * derivative;
    const double magnitude = accel.stableNorm();
    if (magnitude > gains.accel_limit) {
        accel *= gains.accel_limit / magnitude;
    }

    PidOutput out{accel, state};
    out.state.integrator = integrator;
    out.state.previous_error = error;
    return out;
}

VehicleState vehicle_step(const VehicleState& state, const Eigen::Vector3d& acceleration, double dt)
{
    if (!(std::isfinite(dt) && dt > 0.0)) {
        throw ParameterError(fmt::format("vehicle dt must be > 0, got {}", dt));
    }
    if (!acceleration.allFinite()) {
        throw NumericError("non-finite vehicle acceleration");
    }
    VehicleState next = state;
    next.velocity = state.velocity + acceleration * dt;
    next.position = state.position + next.velocity * dt;
    return next;
}

void WorldConfig::validate() const
{
    impedance.validate();
    formation.validate();
    metrics.validate();
    pid.validate();
    if (!(std::isfinite(rate_hz) && rate_hz > 0.0)) {
        throw ParameterError(fmt::format("rate must be > 0 Hz, got {}", rate_hz));
    }
    if (!(std::isfinite(velocity_window) && velocity_window > 0.0)) {
        throw ParameterError(fmt::format("velocity window must be > 0, got {}", velocity_window));
    }
    if (!(std::isfinite(heading_time_constant) && heading_time_constant >= 0.0)) {
        throw ParameterError("heading time constant must be >= 0");
    }
    if (!(std::isfinite(heading_min_speed) && heading_min_speed >= 0.0)) {
        throw ParameterError("heading min speed must be >= 0");
    }
}

WorldContext make_context(const WorldConfig& config)
{
    config.validate();
    return WorldContext{config, build_discrete_model(config.impedance, config.period())};
}

namespace {

VehiclePositions positions_of(const std::array<VehicleState, kVehicleCount>& vehicles)
{
    VehiclePositions out;
    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        out[i] = vehicles[i].position;
    }
    return out;
}

}  // namespace

WorldState spawn_world(const WorldContext& context, const Eigen::Vector3d& hand)
{
    if (!hand.allFinite()) {
        throw NumericError("non-finite spawn hand position");
    }
    const auto& config = context.config;
    WorldState world;
    world.period = config.period();
    world.heading = make_frame(config.formation.heading).heading;
    world.hand.position = hand;
    world.hand_history.push_back(HandSample{0.0, hand});

    const auto layout = nominal_layout(config.formation, hand, world.heading);
    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        world.vehicles[i].position = layout[i];
    }
    world.goals.goals = layout;
    world.metrics = formation_metrics(hand, layout, config.formation, config.metrics,
                                      std::nullopt, world.period);
    return world;
}

WorldState world_tick(const WorldState& world, const HandSample& sample,
                      const WorldContext& context)
{
    const auto& config = context.config;
    if (!sample.position.allFinite() || !std::isfinite(sample.time)) {
        throw NumericError("non-finite hand sample");
    }
    if (sample.time < world.time() - 1e-9) {
        throw InputError(fmt::format("hand sample at t={} precedes world time {}", sample.time,
                                     world.time()));
    }

    WorldState next = world;
    next.tick = world.tick + 1;
    const double now = next.time();
    const double dt = world.period;

    // Ingest, restamped to the tick boundary.
    next.hand_history.push_back(HandSample{now, sample.position});
    const double keep_after = now - config.velocity_window - 2.0 * dt;
    const auto stale = std::find_if(next.hand_history.begin(), next.hand_history.end(),
                                    [&](const HandSample& s) { return s.time >= keep_after; });
    next.hand_history.erase(next.hand_history.begin(), stale);

    const auto estimate = estimate_hand_velocity(next.hand_history, config.velocity_window);
    next.hand.time = now;
    next.hand.position = sample.position;
    next.hand.velocity = cap_speed(estimate.velocity, config.formation.max_hand_speed);
    next.hand.cold = estimate.cold;

    if (config.heading_mode == HeadingMode::HandVelocity) {
        const double alpha = config.heading_time_constant > 0.0
                                 ? -std::expm1(-dt / config.heading_time_constant)
                                 : 1.0;
        next.smoothed_hand_velocity += alpha * (next.hand.velocity - next.smoothed_hand_velocity);
        const Eigen::Vector3d planar(next.smoothed_hand_velocity.x(),
                                     next.smoothed_hand_velocity.y(), 0.0);
        if (planar.norm() > config.heading_min_speed) {
            next.heading = planar.normalized();
        }
    }

    const Eigen::Vector3d force = hand_force(config.formation.velocity_gain, next.hand.velocity);
    for (auto& link : next.links) {
        link = step_link(context.model, link, force, config.formation.correction_limit);
    }

    LinkVectors corrections;
    for (std::size_t i = 0; i < kLinkCount; ++i) {
        corrections[i] = next.links[i].correction;
    }
    const auto frame = make_frame(next.heading);
    next.goals = compute_goals(sample.position, positions_of(world.vehicles), corrections,
                               config.formation, frame);

    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        const auto command = pid_step(config.pid, next.vehicles[i], next.goals.goals[i], dt);
        if (!command.acceleration.allFinite()) {
            throw NumericError(fmt::format("vehicle {} state diverged", i + 1));
        }
        next.vehicles[i] = vehicle_step(command.state, command.acceleration, dt);
        if (!next.vehicles[i].position.allFinite() || !next.vehicles[i].velocity.allFinite()) {
            throw NumericError(fmt::format("vehicle {} state diverged", i + 1));
        }
    }

    next.metrics = formation_metrics(sample.position, positions_of(next.vehicles),
                                     config.formation, config.metrics, world.metrics, dt);
    return next;
}

}  // namespace swarmguide
