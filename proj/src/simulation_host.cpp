#include <cmath>
#include <exception>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "swarmguide/errors.hpp"
#include "swarmguide/sim_server.hpp"

namespace swarmguide {

namespace {

SharedText share(std::string text)
{
    return std::make_shared<const std::string>(std::move(text));
}

SharedText error_reply(std::string_view reason)
{
    return share(nlohmann::json{{"type", "error"}, {"reason", reason}}.dump());
}

}  // namespace

SimulationHost::SimulationHost(const WorldConfig& config, const Eigen::Vector3d& spawn_hand,
                               MessageSink& sink, HostOptions options)
    : context_(make_context(config)),
      spawn_hand_(spawn_hand),
      sink_(sink),
      options_(options),
      world_(spawn_world(context_, spawn_hand)),
      hand_(spawn_hand)
{
    if (options_.rate_div < 1) {
        throw ParameterError(fmt::format("rate divider must be >= 1, got {}", options_.rate_div));
    }
    tactile_.advance(0);
    tactile_.update_metrics(world_.metrics);
}

void SimulationHost::enqueue(ClientId client, InputMessage message)
{
    const std::lock_guard lock(queue_mutex_);
    queue_.push_back(Pending{client, std::move(message)});
}

std::int64_t SimulationHost::sim_time_us() const
{
    return std::llround(static_cast<double>(world_.tick) * 1e6 / context_.config.rate_hz);
}

void SimulationHost::apply(const Pending& pending, std::optional<Eigen::Vector3d>& hand)
{
    if (const auto* input = std::get_if<HandPositionInput>(&pending.message)) {
        hand = input->position;
        return;
    }
    if (const auto* command = std::get_if<CommandInput>(&pending.message)) {
        switch (command->command) {
        case Command::Pause:
            paused_ = true;
            break;
        case Command::Resume:
            paused_ = false;
            break;
        case Command::Reset: {
            // Respawn around the current hand; ticks keep counting.
            const auto tick = world_.tick;
            world_ = spawn_world(context_, hand_);
            world_.tick = tick;
            world_.hand.time = world_.time();
            world_.hand_history = {HandSample{world_.time(), hand_}};
            break;
        }
        }
        sink_.send_to(pending.client,
                      share(nlohmann::json{{"type", "ack"}, {"command", to_string(command->command)}}
                                .dump()));
        return;
    }
    const auto& param = std::get<SetParamInput>(pending.message);
    try {
        context_ = make_context(apply_param(context_.config, param.name, param.value));
        sink_.send_to(pending.client, share(nlohmann::json{{"type", "ack"},
                                                           {"command", "set_param"},
                                                           {"name", param.name},
                                                           {"value", param.value}}
                                                .dump()));
    } catch (const ParameterError& e) {
        sink_.send_to(pending.client, error_reply(e.what()));
    }
}

bool SimulationHost::run_tick()
{
    std::vector<Pending> pending;
    {
        const std::lock_guard lock(queue_mutex_);
        pending.swap(queue_);
    }
    std::optional<Eigen::Vector3d> newest_hand;
    for (const auto& p : pending) {
        apply(p, newest_hand);
    }
    if (newest_hand) {
        hand_ = *newest_hand;
    }

    if (paused_) {
        if (++paused_ticks_ % static_cast<std::uint64_t>(options_.rate_div) == 0) {
            ++heartbeats_;
            publish_state();
        }
        return false;
    }

    try {
        world_ = world_tick(world_, HandSample{world_.time() + world_.period, hand_}, context_);
    } catch (const std::exception& e) {
        sink_.broadcast_event(error_reply(fmt::format("tick failed, world reset: {}", e.what())));
        const auto tick = world_.tick + 1;
        world_ = spawn_world(context_, hand_);
        world_.tick = tick;
        world_.hand_history = {HandSample{world_.time(), hand_}};
    }
    publish_frames(tactile_.advance(sim_time_us()));
    tactile_.update_metrics(world_.metrics);

    if (world_.tick % static_cast<std::uint64_t>(options_.rate_div) == 0) {
        publish_state();
    }
    return true;
}

void SimulationHost::advance_tactile(std::int64_t now_us)
{
    if (paused_) {
        return;
    }
    publish_frames(tactile_.advance(now_us));
}

void SimulationHost::publish_frames(const std::vector<ScheduledFrame>& frames)
{
    for (const auto& frame : frames) {
        sink_.broadcast_event(share(encode_frame(frame)));
    }
}

void SimulationHost::publish_state()
{
    const auto message =
        make_state_message(world_, tactile_.active_pattern(), tactile_.active_frame(), paused_);
    sink_.broadcast_state(share(encode_state(message)));
}

RealtimeLoop::RealtimeLoop(SimulationHost& host) : host_(host) {}

RealtimeLoop::~RealtimeLoop()
{
    stop();
}

void RealtimeLoop::start()
{
    if (running_.exchange(true)) {
        return;
    }
    thread_ = std::thread([this] { run(); });
}

void RealtimeLoop::stop()
{
    if (!running_.exchange(false)) {
        return;
    }
    wake_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::vector<std::chrono::steady_clock::time_point> RealtimeLoop::tick_times() const
{
    const std::lock_guard lock(mutex_);
    return tick_times_;
}

void RealtimeLoop::run()
{
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / host_.config().rate_hz));
    auto next = clock::now() + period;

    auto sleep_until = [&](clock::time_point when) {
        std::unique_lock lock(mutex_);
        wake_.wait_until(lock, when, [&] { return !running_.load(); });
    };

    while (running_.load()) {
        // Tactile frames that start strictly between two ticks.
        if (!host_.paused()) {
            if (const auto event = host_.next_tactile_us(); event && *event > host_.sim_time_us()) {
                const auto offset = std::chrono::microseconds(*event - host_.sim_time_us());
                const auto when = next - period + offset;
                if (when < next) {
                    sleep_until(when);
                    if (!running_.load()) {
                        break;
                    }
                    host_.advance_tactile(*event);
                    continue;
                }
            }
        }

        sleep_until(next);
        if (!running_.load()) {
            break;
        }
        host_.run_tick();
        {
            const std::lock_guard lock(mutex_);
            tick_times_.push_back(clock::now());
        }
        next += period;
    }
}

}  // namespace swarmguide
