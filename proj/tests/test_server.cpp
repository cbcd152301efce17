#include <chrono>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <doctest.h>
#include <nlohmann/json.hpp>

#include "swarmguide/formation.hpp"
#include "swarmguide/sim_server.hpp"

using namespace swarmguide;
namespace beast = boost::beast;
namespace net = boost::asio;
using net::ip::tcp;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

class Client {
public:
    explicit Client(std::uint16_t port) : ws_(ioc_)
    {
        tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/");
    }

    void send(const std::string& text) { ws_.write(net::buffer(text)); }

    std::string read()
    {
        beast::flat_buffer buffer;
        ws_.read(buffer);
        return beast::buffers_to_string(buffer.data());
    }

    // Skips state and tactile traffic until a message of `type` arrives.
    json read_type(const std::string& type)
    {
        for (;;) {
            auto message = json::parse(read());
            if (message["type"] == type) {
                return message;
            }
        }
    }

    void drop()
    {
        beast::error_code ec;
        ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
        ws_.next_layer().close(ec);
    }

private:
    net::io_context ioc_;
    beast::websocket::stream<tcp::socket> ws_;
};

std::string hand_message(double t_ms, const Eigen::Vector3d& p)
{
    return encode_input(HandPositionInput{t_ms, p});
}

// Scripted drag along +x: rest 1 s, ramp to 1 m/s over 1 s, cruise 4 s,
// ramp down over 1 s, rest.
double drag_x(double t)
{
    if (t < 1.0) return 0.0;
    if (t < 2.0) return 0.5 * (t - 1.0) * (t - 1.0);
    if (t < 6.0) return 0.5 + (t - 2.0);
    if (t < 7.0) return 4.5 + (t - 6.0) - 0.5 * (t - 6.0) * (t - 6.0);
    return 5.0;
}

}  // namespace

TEST_SUITE("server")
{
    TEST_CASE("roles, rejected input and surviving protocol errors")
    {
        SimServer server(WorldConfig{}, {0, 0, 1}, ServerOptions{"127.0.0.1", 0, {}});
        server.start();
        REQUIRE(server.port() != 0);

        Client a(server.port());
        const auto hello_a = a.read_type("hello");
        CHECK(hello_a["role"] == "hand");
        CHECK(hello_a["rate_hz"] == 80.0);
        CHECK(hello_a["rate_div"] == 2);

        Client b(server.port());
        CHECK(b.read_type("hello")["role"] == "observer");
        b.send(hand_message(0, {1, 0, 1}));
        CHECK(b.read_type("error")["reason"].get<std::string>().find("hand role") != std::string::npos);

        a.send("{not json");
        CHECK(a.read_type("error")["reason"].get<std::string>().find("malformed") != std::string::npos);
        a.send(R"({"type":"set_param","name":"M_d","value":-1})");
        CHECK(a.read_type("error").contains("reason"));
        a.send(R"({"type":"set_param","name":"K_v","value":-7})");
        const auto ack = a.read_type("ack");
        CHECK(ack["name"] == "K_v");
        CHECK(ack["value"] == -7.0);

        a.send(R"({"type":"command","command":"pause"})");
        CHECK(a.read_type("ack")["command"] == "pause");
        const auto first = decode_state(a.read_type("state").dump());
        const auto second = decode_state(a.read_type("state").dump());
        CHECK(first.paused);
        CHECK(second.tick == first.tick);

        // Holder leaves; the observer takes the role on its next input.
        a.drop();
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        b.send(R"({"type":"command","command":"resume"})");
        CHECK(b.read_type("role")["role"] == "hand");
        CHECK(b.read_type("ack")["command"] == "resume");
        server.stop();
    }

    TEST_CASE("live drag at 60 Hz: 80 Hz cadence with a stalled client, lag order and opposition sign")
    {
        WorldConfig config;
        SimServer server(config, {0, 0, 1}, ServerOptions{"127.0.0.1", 0, {}});
        server.start();

        // The hand holder never reads after its hello, so its socket backs up.
        Client hand(server.port());
        REQUIRE(hand.read_type("hello")["role"] == "hand");
        Client observer(server.port());
        REQUIRE(observer.read_type("hello")["role"] == "observer");

        std::vector<StateMessage> states;
        std::thread reader([&] {
            for (;;) {
                const auto text = observer.read();
                if (text.find("\"type\":\"state\"") == std::string::npos) continue;
                states.push_back(decode_state(text));
                if (states.back().time > 12.5) return;
            }
        });

        const auto start = Clock::now();
        const auto period = std::chrono::microseconds(16667);
        for (int k = 0;; ++k) {
            const auto when = start + k * period;
            const double t = std::chrono::duration<double>(when - start).count();
            if (t > 10.0) break;
            std::this_thread::sleep_until(when);
            hand.send(hand_message(t * 1000.0, {drag_x(t), 0, 1}));
        }
        reader.join();
        const auto ticks = server.tick_times();
        server.stop();

        // Cadence: every 10 s window holds 800 +- 1 ticks.
        REQUIRE(ticks.size() > 900);
        std::size_t worst = 0;
        for (std::size_t i = 0; i + 1 < ticks.size(); i += 40) {
            const auto end = ticks[i] + std::chrono::seconds(10);
            if (end > ticks.back()) break;
            std::size_t n = 0;
            for (std::size_t j = i; j < ticks.size() && ticks[j] < end; ++j) ++n;
            worst = std::max<std::size_t>(worst, n > 800 ? n - 800 : 800 - n);
        }
        CHECK(worst <= 1);

        // States arrive in order at 40 Hz.
        REQUIRE(states.size() > 400);
        for (std::size_t i = 1; i < states.size(); ++i) {
            CHECK(states[i].tick > states[i - 1].tick);
        }

        double t_move = -1.0;
        for (const auto& s : states) {
            if (s.hand.x() > 0.0) {
                t_move = s.time;
                break;
            }
        }
        REQUIRE(t_move > 0.0);

        // Lag order while cruising.
        const Eigen::Vector3d heading = Eigen::Vector3d::UnitX();
        int cruising = 0;
        for (const auto& s : states) {
            if (s.time < t_move + 1.5 || s.time > t_move + 5.0) continue;
            ++cruising;
            const auto layout = nominal_layout(config.formation, s.hand, heading);
            std::array<double, kVehicleCount> d{};
            for (std::size_t i = 0; i < kVehicleCount; ++i) {
                d[i] = (s.positions[i] - layout[i]).norm();
            }
            CHECK(d[3] >= d[1]);
            CHECK(d[3] >= d[2]);
            CHECK(d[1] >= d[0]);
            CHECK(d[2] >= d[0]);
        }
        CHECK(cruising > 100);

        // Opposition sign after 0.5 s of sustained forward motion above 0.05 m/s.
        int checked = 0;
        for (std::size_t j = 0; j < states.size(); ++j) {
            std::size_t i = j;
            while (i > 0 && states[j].time - states[i - 1].time <= 0.5) --i;
            if (states[j].time - states[i].time < 0.45) continue;
            bool sustained = true;
            for (std::size_t k = i + 1; k <= j && sustained; ++k) {
                const double v = (states[k].hand.x() - states[k - 1].hand.x()) /
                                 (states[k].time - states[k - 1].time);
                sustained = v > 0.05;
            }
            if (!sustained) continue;
            ++checked;
            for (const auto& c : states[j].corrections) {
                CHECK(c.x() < 0.0);
            }
        }
        CHECK(checked > 150);
    }
}
