#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "swarmguide/protocol.hpp"
#include "swarmguide/tactile.hpp"
#include "swarmguide/vehicle_sim.hpp"

namespace swarmguide {

using ClientId = std::uint64_t;
using SharedText = std::shared_ptr<const std::string>;

// Where the host sends encoded messages. Implementations must not block.
class MessageSink {
public:
    virtual ~MessageSink() = default;
    virtual void broadcast_state(SharedText message) = 0;
    virtual void broadcast_event(SharedText message) = 0;
    virtual void send_to(ClientId client, SharedText message) = 0;
};

struct HostOptions {
    int rate_div = 2;  // state broadcast every rate_div ticks
};

/**
 * The authoritative live session: world, tactile stream and the input queue.
 * Network threads only call enqueue(); everything else runs on the loop
 * thread (or a test driving it directly).
 */
class SimulationHost {
public:
    SimulationHost(const WorldConfig& config, const Eigen::Vector3d& spawn_hand, MessageSink& sink,
                   HostOptions options = {});

    // Thread-safe. Applied at the next tick boundary, in arrival order.
    void enqueue(ClientId client, InputMessage message);

    // Drains the queue and advances one tick (or emits a heartbeat when
    // paused). Returns true if the world advanced.
    bool run_tick();

    // Emits tactile frames due up to sim time `now_us` (between ticks).
    void advance_tactile(std::int64_t now_us);

    std::optional<std::int64_t> next_tactile_us() const { return tactile_.next_event_us(); }
    std::int64_t sim_time_us() const;

    const WorldState& world() const { return world_; }
    const WorldConfig& config() const { return context_.config; }
    bool paused() const { return paused_; }
    std::uint64_t heartbeat_count() const { return heartbeats_; }

private:
    struct Pending {
        ClientId client;
        InputMessage message;
    };

    void apply(const Pending& pending, std::optional<Eigen::Vector3d>& hand);
    void publish_frames(const std::vector<ScheduledFrame>& frames);
    void publish_state();

    WorldContext context_;
    Eigen::Vector3d spawn_hand_;
    MessageSink& sink_;
    HostOptions options_;

    WorldState world_;
    TactileScheduler tactile_;
    Eigen::Vector3d hand_;
    bool paused_ = false;
    std::uint64_t heartbeats_ = 0;
    std::uint64_t paused_ticks_ = 0;

    std::mutex queue_mutex_;
    std::vector<Pending> queue_;
};

/**
 * Drives a SimulationHost in real time on its own thread: ticks on an
 * absolute 1/rate schedule (late ticks run back to back, none are skipped)
 * and wakes between ticks for tactile frame starts.
 */
class RealtimeLoop {
public:
    explicit RealtimeLoop(SimulationHost& host);
    ~RealtimeLoop();

    RealtimeLoop(const RealtimeLoop&) = delete;
    RealtimeLoop& operator=(const RealtimeLoop&) = delete;

    void start();
    void stop();

    // Wall-clock instants of every tick executed so far (steady clock).
    std::vector<std::chrono::steady_clock::time_point> tick_times() const;

private:
    void run();

    SimulationHost& host_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    mutable std::mutex mutex_;
    std::condition_variable wake_;
    std::vector<std::chrono::steady_clock::time_point> tick_times_;
};

struct ServerOptions {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8765;  // 0 picks a free port
    HostOptions host;
};

/**
 * WebSocket front end. The first client to connect holds the hand role;
 * others are observers. The role is released when its holder disconnects
 * and passes to the next client that sends input.
 */
class SimServer {
public:
    SimServer(const WorldConfig& config, const Eigen::Vector3d& spawn_hand, ServerOptions options);
    ~SimServer();

    SimServer(const SimServer&) = delete;
    SimServer& operator=(const SimServer&) = delete;

    void start();
    void stop();
    std::uint16_t port() const;

    std::vector<std::chrono::steady_clock::time_point> tick_times() const;
    const SimulationHost& host() const;

private:
    class Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace swarmguide
