#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "swarmguide/errors.hpp"
#include "swarmguide/sim_server.hpp"

using namespace swarmguide;

namespace {

struct RecordingSink : MessageSink {
    std::vector<std::string> states;
    std::vector<std::string> events;
    std::vector<std::pair<ClientId, std::string>> direct;

    void broadcast_state(SharedText m) override { states.push_back(*m); }
    void broadcast_event(SharedText m) override { events.push_back(*m); }
    void send_to(ClientId c, SharedText m) override { direct.emplace_back(c, *m); }
};

const Eigen::Vector3d kSpawn(0, 0, 1);

}  // namespace

TEST_SUITE("host")
{
    TEST_CASE("state broadcast every rate_div ticks with increasing ticks")
    {
        RecordingSink sink;
        SimulationHost host(WorldConfig{}, kSpawn, sink, HostOptions{3});
        for (int k = 0; k < 30; ++k) {
            CHECK(host.run_tick());
        }
        REQUIRE(sink.states.size() == 10);
        std::uint64_t previous = 0;
        for (const auto& text : sink.states) {
            const auto m = decode_state(text);
            CHECK(m.tick % 3 == 0);
            CHECK(m.tick > previous);
            previous = m.tick;
        }
        CHECK_THROWS_AS(SimulationHost(WorldConfig{}, kSpawn, sink, HostOptions{0}), ParameterError);
    }

    TEST_CASE("hand input is latest-wins per tick")
    {
        RecordingSink sink;
        SimulationHost host(WorldConfig{}, kSpawn, sink, HostOptions{1});
        host.enqueue(1, HandPositionInput{0, {0.1, 0, 1}});
        host.enqueue(1, HandPositionInput{0, {0.2, 0, 1}});
        host.enqueue(1, HandPositionInput{0, {0.3, 0, 1}});
        host.run_tick();
        CHECK(host.world().hand.position == Eigen::Vector3d(0.3, 0, 1));
        // History holds only the spawn sample and the newest one.
        CHECK(host.world().hand_history.size() == 2);
        host.run_tick();
        CHECK(host.world().hand.position == Eigen::Vector3d(0.3, 0, 1));
    }

    TEST_CASE("commands apply in arrival order and are acknowledged")
    {
        RecordingSink sink;
        SimulationHost host(WorldConfig{}, kSpawn, sink, HostOptions{1});
        host.enqueue(4, CommandInput{Command::Pause});
        host.enqueue(4, CommandInput{Command::Resume});
        CHECK(host.run_tick());
        CHECK_FALSE(host.paused());

        host.enqueue(4, CommandInput{Command::Resume});
        host.enqueue(4, CommandInput{Command::Pause});
        CHECK_FALSE(host.run_tick());
        CHECK(host.paused());

        REQUIRE(sink.direct.size() == 4);
        const std::vector<std::string> expected{"pause", "resume", "resume", "pause"};
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(sink.direct[i].first == 4);
            const auto reply = nlohmann::json::parse(sink.direct[i].second);
            CHECK(reply["type"] == "ack");
            CHECK(reply["command"] == expected[i]);
        }
    }

    TEST_CASE("paused world sends heartbeats with an unchanged tick")
    {
        RecordingSink sink;
        SimulationHost host(WorldConfig{}, kSpawn, sink, HostOptions{2});
        for (int k = 0; k < 10; ++k) host.run_tick();
        host.enqueue(1, CommandInput{Command::Pause});
        sink.states.clear();
        for (int k = 0; k < 20; ++k) {
            CHECK_FALSE(host.run_tick());
        }
        CHECK(host.heartbeat_count() == 10);
        REQUIRE(sink.states.size() == 10);
        for (const auto& text : sink.states) {
            const auto m = decode_state(text);
            CHECK(m.tick == 10);
            CHECK(m.paused);
        }
        host.enqueue(1, CommandInput{Command::Resume});
        CHECK(host.run_tick());
        CHECK(host.world().tick == 11);
    }

    TEST_CASE("set_param: accepted values take effect, rejected ones leave the state alone")
    {
        RecordingSink sink;
        SimulationHost host(WorldConfig{}, kSpawn, sink, HostOptions{1});
        host.enqueue(2, SetParamInput{"K_v", -3.0});
        host.run_tick();
        CHECK(host.config().formation.velocity_gain == -3.0);
        REQUIRE(sink.direct.size() == 1);
        CHECK(nlohmann::json::parse(sink.direct[0].second)["type"] == "ack");

        host.enqueue(2, SetParamInput{"M_d", -1.0});
        const auto before = host.config();
        host.run_tick();
        CHECK(host.config().impedance.mass == before.impedance.mass);
        REQUIRE(sink.direct.size() == 2);
        const auto reply = nlohmann::json::parse(sink.direct[1].second);
        CHECK(reply["type"] == "error");
        CHECK(reply["reason"].get<std::string>().find("mass") != std::string::npos);
    }

    TEST_CASE("reset respawns around the current hand without rewinding ticks")
    {
        RecordingSink sink;
        SimulationHost host(WorldConfig{}, kSpawn, sink, HostOptions{1});
        for (int k = 0; k < 40; ++k) {
            host.enqueue(1, HandPositionInput{0, {0.02 * k, 0, 1}});
            host.run_tick();
        }
        CHECK(host.world().links[0].correction.norm() > 0.0);
        host.enqueue(1, CommandInput{Command::Reset});
        host.run_tick();
        CHECK(host.world().tick == 41);
        for (const auto& link : host.world().links) {
            CHECK(link.correction.norm() < 1e-12);
        }
    }

    TEST_CASE("tactile frames are emitted at their own start times")
    {
        RecordingSink sink;
        SimulationHost host(WorldConfig{}, kSpawn, sink, HostOptions{2});
        // Stretch the formation so a non-silent pattern gets selected.
        for (int k = 0; k < 80; ++k) {
            host.enqueue(1, HandPositionInput{0, {0.0125 * 1.5 * k, 0, 1}});
            host.run_tick();
        }
        std::vector<ScheduledFrame> frames;
        auto collect = [&] {
            for (const auto& e : sink.events) frames.push_back(decode_frame(e));
            sink.events.clear();
        };
        collect();
        for (int k = 0; k < 400; ++k) {
            while (const auto next = host.next_tactile_us()) {
                if (*next > host.sim_time_us() + 12500) break;
                if (*next <= host.sim_time_us()) break;
                host.advance_tactile(*next);
                collect();
            }
            host.run_tick();
            collect();
        }
        REQUIRE_FALSE(frames.empty());
        for (std::size_t i = 1; i < frames.size(); ++i) {
            CHECK(frames[i].start_us > frames[i - 1].start_us);
        }
        for (const auto& f : frames) {
            CHECK((f.duration_ms == 200 || f.duration_ms == 300));
        }
    }
}
