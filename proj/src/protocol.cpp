#include "swarmguide/protocol.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "swarmguide/errors.hpp"

namespace swarmguide {

using nlohmann::json;

double round_significant(double value, int digits)
{
    if (value == 0.0 || !std::isfinite(value)) {
        return value;
    }
    std::array<char, 64> buffer{};
    const auto end = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value,
                                   std::chars_format::scientific, digits - 1)
                         .ptr;
    double rounded = 0.0;
    std::from_chars(buffer.data(), end, rounded);
    return rounded;
}

StateMessage make_state_message(const WorldState& world, PatternId pattern,
                                const std::optional<ScheduledFrame>& frame, bool paused)
{
    StateMessage m;
    m.tick = world.tick;
    m.time = world.time();
    m.paused = paused;
    m.hand = world.hand.position;
    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        m.positions[i] = world.vehicles[i].position;
        m.goals[i] = world.goals.goals[i];
    }
    for (std::size_t i = 0; i < kLinkCount; ++i) {
        m.corrections[i] = world.links[i].correction;
    }
    m.spread = world.metrics.spread;
    m.shape = world.metrics.shape;
    m.rate = world.metrics.rate;
    m.pattern = pattern;
    m.frame = frame;
    return m;
}

namespace {

Eigen::Vector3d round_vector(const Eigen::Vector3d& v)
{
    return {round_significant(v.x()), round_significant(v.y()), round_significant(v.z())};
}

// 6 significant digits, shortest form; -0 is normalised to 0.
std::string number(double value)
{
    if (value == 0.0) {
        return "0";
    }
    return fmt::format("{}", round_significant(value));
}

std::string vector_text(const Eigen::Vector3d& v)
{
    return fmt::format("[{},{},{}]", number(v.x()), number(v.y()), number(v.z()));
}

std::string fingers_text(const FingerLevels& fingers)
{
    return fmt::format("[{},{},{},{},{}]", frequency_hz(fingers[0]), frequency_hz(fingers[1]),
                       frequency_hz(fingers[2]), frequency_hz(fingers[3]),
                       frequency_hz(fingers[4]));
}

std::string frame_body(const ScheduledFrame& frame)
{
    return fmt::format(
        "\"wave_id\":{},\"pattern\":\"{}\",\"frame_index\":{},\"t_start_ms\":{},"
        "\"duration_ms\":{},\"fingers\":{}",
        frame.wave_id, to_string(frame.pattern), frame.frame_index,
        fmt::format("{}", frame.t_start_ms()), frame.duration_ms, fingers_text(frame.fingers));
}

Eigen::Vector3d read_vector(const json& node, const char* what)
{
    if (!node.is_array() || node.size() != 3) {
        throw ProtocolError(fmt::format("{}: expected [x, y, z]", what));
    }
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
        if (!node[i].is_number()) {
            throw ProtocolError(fmt::format("{}: expected numbers", what));
        }
        v[i] = node[i].get<double>();
    }
    if (!v.allFinite()) {
        throw ProtocolError(fmt::format("{}: non-finite value", what));
    }
    return v;
}

ScheduledFrame read_frame(const json& node)
{
    ScheduledFrame frame;
    frame.wave_id = node.at("wave_id").get<std::uint64_t>();
    const auto pattern = parse_pattern(node.at("pattern").get<std::string>());
    if (!pattern) {
        throw ProtocolError("frame: unknown pattern");
    }
    frame.pattern = *pattern;
    frame.frame_index = node.at("frame_index").get<int>();
    frame.start_us = std::llround(node.at("t_start_ms").get<double>() * 1000.0);
    frame.duration_ms = node.at("duration_ms").get<int>();
    const auto& fingers = node.at("fingers");
    if (!fingers.is_array() || fingers.size() != kFingerCount) {
        throw ProtocolError("frame: expected 5 fingers");
    }
    for (std::size_t i = 0; i < kFingerCount; ++i) {
        const auto level = level_from_hz(fingers[i].get<int>());
        if (!level) {
            throw ProtocolError("frame: finger level must be 0, 150, 200 or 250");
        }
        frame.fingers[i] = *level;
    }
    return frame;
}

json parse_object(std::string_view bytes)
{
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("malformed JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
        throw ProtocolError("message must be an object with a string 'type'");
    }
    return doc;
}

struct Tunable {
    std::string_view name;
    bool (*accepts)(double);
    const char* requirement;
};

constexpr std::array<Tunable, 10> kTunables{{
    {"K_v", [](double) { return true; }, "finite"},
    {"limit", [](double v) { return v > 0.0; }, "> 0"},
    {"M_d", [](double v) { return v > 0.0; }, "> 0"},
    {"D_d", [](double v) { return v >= 0.0; }, ">= 0"},
    {"K_d", [](double v) { return v > 0.0; }, "> 0"},
    {"W", [](double v) { return v >= 0.0; }, ">= 0"},
    {"L_1", [](double v) { return v > 0.0; }, "> 0"},
    {"L_2", [](double v) { return v > 0.0; }, "> 0"},
    {"L_3", [](double v) { return v > 0.0; }, "> 0"},
    {"L_4", [](double v) { return v > 0.0; }, "> 0"},
}};

const Tunable* find_tunable(std::string_view name)
{
    for (const auto& t : kTunables) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

}  // namespace

StateMessage quantize(const StateMessage& message)
{
    StateMessage m = message;
    m.time = round_significant(m.time);
    m.hand = round_vector(m.hand);
    for (auto& p : m.positions) {
        p = round_vector(p);
    }
    for (auto& g : m.goals) {
        g = round_vector(g);
    }
    for (auto& c : m.corrections) {
        c = round_vector(c);
    }
    m.spread = round_significant(m.spread);
    // Canonical zero, matching the encoder.
    auto fix_zero = [](Eigen::Vector3d& v) {
        for (int i = 0; i < 3; ++i) {
            if (v[i] == 0.0) {
                v[i] = 0.0;
            }
        }
    };
    fix_zero(m.hand);
    for (auto* group : {&m.positions, &m.goals}) {
        for (auto& v : *group) {
            fix_zero(v);
        }
    }
    for (auto& v : m.corrections) {
        fix_zero(v);
    }
    if (m.time == 0.0) {
        m.time = 0.0;
    }
    if (m.spread == 0.0) {
        m.spread = 0.0;
    }
    return m;
}

std::string encode_state(const StateMessage& m)
{
    std::string out = fmt::format("{{\"type\":\"state\",\"tick\":{},\"t\":{},\"paused\":{},\"hand\":{}",
                                  m.tick, number(m.time), m.paused ? "true" : "false",
                                  vector_text(m.hand));
    out += ",\"vehicles\":[";
    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        out += fmt::format("{}{{\"pos\":{},\"goal\":{}}}", i ? "," : "", vector_text(m.positions[i]),
                           vector_text(m.goals[i]));
    }
    out += "],\"links\":{";
    for (std::size_t i = 0; i < kLinkCount; ++i) {
        out += fmt::format("{}\"{}\":{}", i ? "," : "", link_name(kAllLinks[i]),
                           vector_text(m.corrections[i]));
    }
    out += fmt::format("}},\"spread\":{},\"shape\":\"{}\",\"rate\":\"{}\",\"pattern\":\"{}\",\"frame\":",
                       number(m.spread), to_string(m.shape), to_string(m.rate),
                       to_string(m.pattern));
    out += m.frame ? fmt::format("{{{}}}", frame_body(*m.frame)) : std::string("null");
    out += "}";
    return out;
}

StateMessage decode_state(std::string_view bytes)
{
    const json doc = parse_object(bytes);
    if (doc["type"] != "state") {
        throw ProtocolError("not a state message");
    }
    try {
        StateMessage m;
        m.tick = doc.at("tick").get<std::uint64_t>();
        m.time = doc.at("t").get<double>();
        m.paused = doc.at("paused").get<bool>();
        m.hand = read_vector(doc.at("hand"), "hand");
        const auto& vehicles = doc.at("vehicles");
        if (!vehicles.is_array() || vehicles.size() != kVehicleCount) {
            throw ProtocolError("vehicles: expected 4 entries");
        }
        for (std::size_t i = 0; i < kVehicleCount; ++i) {
            m.positions[i] = read_vector(vehicles[i].at("pos"), "vehicles.pos");
            m.goals[i] = read_vector(vehicles[i].at("goal"), "vehicles.goal");
        }
        const auto& links = doc.at("links");
        for (std::size_t i = 0; i < kLinkCount; ++i) {
            m.corrections[i] = read_vector(links.at(std::string(link_name(kAllLinks[i]))), "links");
        }
        m.spread = doc.at("spread").get<double>();
        const auto shape = parse_shape(doc.at("shape").get<std::string>());
        const auto rate = parse_rate(doc.at("rate").get<std::string>());
        const auto pattern = parse_pattern(doc.at("pattern").get<std::string>());
        if (!shape || !rate || !pattern) {
            throw ProtocolError("unknown shape, rate or pattern label");
        }
        m.shape = *shape;
        m.rate = *rate;
        m.pattern = *pattern;
        if (!doc.at("frame").is_null()) {
            m.frame = read_frame(doc.at("frame"));
        }
        return m;
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("state message: {}", e.what()));
    }
}

std::string encode_frame(const ScheduledFrame& frame)
{
    return fmt::format("{{\"type\":\"tactile\",{}}}", frame_body(frame));
}

ScheduledFrame decode_frame(std::string_view bytes)
{
    const json doc = parse_object(bytes);
    if (doc["type"] != "tactile") {
        throw ProtocolError("not a tactile message");
    }
    try {
        return read_frame(doc);
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("tactile message: {}", e.what()));
    }
}

std::string_view to_string(Command command)
{
    switch (command) {
    case Command::Reset: return "reset";
    case Command::Pause: return "pause";
    case Command::Resume: return "resume";
    }
    return "?";
}

bool is_tunable(std::string_view name)
{
    return find_tunable(name) != nullptr;
}

InputMessage decode_input(std::string_view bytes)
{
    const json doc = parse_object(bytes);
    const auto type = doc["type"].get<std::string>();
    if (type == "hand") {
        HandPositionInput hand;
        if (doc.contains("t_ms")) {
            if (!doc["t_ms"].is_number()) {
                throw ProtocolError("hand: t_ms must be a number");
            }
            hand.client_time_ms = doc["t_ms"].get<double>();
        }
        if (!doc.contains("position")) {
            throw ProtocolError("hand: missing position");
        }
        hand.position = read_vector(doc["position"], "hand.position");
        return hand;
    }
    if (type == "command") {
        if (!doc.contains("command") || !doc["command"].is_string()) {
            throw ProtocolError("command: missing command name");
        }
        const auto name = doc["command"].get<std::string>();
        for (auto command : {Command::Reset, Command::Pause, Command::Resume}) {
            if (to_string(command) == name) {
                return CommandInput{command};
            }
        }
        throw ProtocolError(fmt::format("command: unknown command '{}'", name));
    }
    if (type == "set_param") {
        if (!doc.contains("name") || !doc["name"].is_string()) {
            throw ProtocolError("set_param: missing name");
        }
        if (!doc.contains("value") || !doc["value"].is_number()) {
            throw ProtocolError("set_param: value must be a number");
        }
        SetParamInput param{doc["name"].get<std::string>(), doc["value"].get<double>()};
        const auto* tunable = find_tunable(param.name);
        if (!tunable) {
            throw ProtocolError(fmt::format("set_param: '{}' is not tunable", param.name));
        }
        if (!std::isfinite(param.value) || !tunable->accepts(param.value)) {
            throw ProtocolError(fmt::format("set_param: {} must be {} (got {})", param.name,
                                            tunable->requirement, param.value));
        }
        return param;
    }
    throw ProtocolError(fmt::format("unknown message type '{}'", type));
}

std::string encode_input(const InputMessage& message)
{
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HandPositionInput>) {
                return fmt::format("{{\"type\":\"hand\",\"t_ms\":{},\"position\":{}}}",
                                   fmt::format("{}", m.client_time_ms),
                                   fmt::format("[{},{},{}]", m.position.x(), m.position.y(),
                                               m.position.z()));
            } else if constexpr (std::is_same_v<T, CommandInput>) {
                return fmt::format("{{\"type\":\"command\",\"command\":\"{}\"}}",
                                   to_string(m.command));
            } else {
                return json{{"type", "set_param"}, {"name", m.name}, {"value", m.value}}.dump();
            }
        },
        message);
}

WorldConfig apply_param(const WorldConfig& config, std::string_view name, double value)
{
    WorldConfig next = config;
    if (name == "K_v") {
        next.formation.velocity_gain = value;
    } else if (name == "limit") {
        next.formation.correction_limit = value;
    } else if (name == "M_d") {
        next.impedance.mass = value;
    } else if (name == "D_d") {
        next.impedance.damping = value;
    } else if (name == "K_d") {
        next.impedance.stiffness = value;
    } else if (name == "W") {
        next.formation.lateral_width = value;
    } else if (name == "L_1") {
        next.formation.offsets[0] = value;
    } else if (name == "L_2") {
        next.formation.offsets[1] = value;
    } else if (name == "L_3") {
        next.formation.offsets[2] = value;
    } else if (name == "L_4") {
        next.formation.offsets[3] = value;
    } else {
        throw ParameterError(fmt::format("'{}' is not a tunable parameter", name));
    }
    next.validate();
    return next;
}

}  // namespace swarmguide
