#include <cmath>
#include <exception>

#include "swarmguide/scenario.hpp"

namespace swarmguide {

LogRow make_log_row(const WorldState& world, PatternId pattern)
{
    LogRow row;
    row.tick = world.tick;
    row.time = world.time();
    row.hand_position = world.hand.position;
    row.hand_velocity = world.hand.velocity;
    for (std::size_t i = 0; i < kLinkCount; ++i) {
        row.raw_displacement[i] = world.links[i].displacement;
        row.correction[i] = world.links[i].correction;
    }
    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        row.goal[i] = world.goals.goals[i];
        row.position[i] = world.vehicles[i].position;
    }
    row.spread = world.metrics.spread;
    row.spread_rate = world.metrics.spread_rate;
    row.shape = world.metrics.shape;
    row.rate = world.metrics.rate;
    row.pattern = pattern;
    return row;
}

namespace {

std::int64_t tick_time_us(std::uint64_t tick, double rate_hz)
{
    return std::llround(static_cast<double>(tick) * 1e6 / rate_hz);
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config)
{
    validate_scenario(config);
    const auto context = make_context(config.world);
    const auto ticks = config.tick_count();

    RunResult result;
    result.log.rows.reserve(ticks + 1);

    WorldState world = spawn_world(context, config.hand.position_at(0.0));
    TactileScheduler tactile;
    // The scheduler sees metrics of time t only after advancing to t.
    tactile.advance(0);
    tactile.update_metrics(world.metrics);
    result.log.rows.push_back(make_log_row(world, tactile.active_pattern()));

    for (std::uint64_t k = 1; k <= ticks; ++k) {
        try {
            const double t = static_cast<double>(k) * world.period;
            world = world_tick(world, HandSample{t, config.hand.position_at(t)}, context);
            tactile.advance(tick_time_us(k, config.world.rate_hz));
            tactile.update_metrics(world.metrics);
        } catch (const std::exception& e) {
            result.failure = TickFailure{k, e.what()};
            break;
        }
        result.log.rows.push_back(make_log_row(world, tactile.active_pattern()));
    }
    return result;
}

}  // namespace swarmguide
