#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "swarmguide/scenario.hpp"

namespace swarmguide {

ScenarioError::ScenarioError(std::string field, int line, const std::string& message)
    : ConfigError(line > 0 ? fmt::format("line {}: {}: {}", line, field, message)
                           : fmt::format("{}: {}", field, message)),
      field_(std::move(field)),
      line_(line)
{
}

std::optional<LogFormat> parse_log_format(std::string_view text)
{
    if (text == "csv") {
        return LogFormat::Csv;
    }
    if (text == "structured") {
        return LogFormat::Structured;
    }
    return std::nullopt;
}

std::uint64_t ScenarioConfig::tick_count() const
{
    return static_cast<std::uint64_t>(std::llround(duration * world.rate_hz));
}

namespace {

int line_of(const YAML::Node& node)
{
    const auto mark = node.Mark();
    return mark.line >= 0 ? mark.line + 1 : 0;
}

std::string join(const std::string& parent, std::string_view key)
{
    return parent.empty() ? std::string(key) : fmt::format("{}.{}", parent, key);
}

// A mapping node whose keys are restricted to a known set.
class Section {
public:
    Section(const YAML::Node& node, std::string path, std::initializer_list<std::string_view> allowed)
        : node_(node), path_(std::move(path))
    {
        if (node_.IsNull()) {
            return;
        }
        if (!node_.IsMap()) {
            throw ScenarioError(path_.empty() ? "<document>" : path_, line_of(node_),
                                "expected a mapping");
        }
        for (const auto& entry : node_) {
            const auto key = entry.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw ScenarioError(join(path_, key), line_of(entry.first), "unknown field");
            }
        }
    }

    std::optional<YAML::Node> get(std::string_view key) const
    {
        if (!node_.IsMap()) {
            return std::nullopt;
        }
        const YAML::Node child = node_[std::string(key)];
        if (!child.IsDefined()) {
            return std::nullopt;
        }
        return child;
    }

    std::string path(std::string_view key) const { return join(path_, key); }

    void read_number(std::string_view key, double& out) const
    {
        if (auto child = get(key)) {
            out = number(*child, path(key));
        }
    }

    template <typename Check>
    void read_number(std::string_view key, double& out, Check check, const char* requirement) const
    {
        if (auto child = get(key)) {
            out = number(*child, path(key));
            if (!check(out)) {
                throw ScenarioError(path(key), line_of(*child),
                                    fmt::format("{} (got {})", requirement, out));
            }
        }
    }

    static double number(const YAML::Node& node, const std::string& path)
    {
        if (!node.IsScalar()) {
            throw ScenarioError(path, line_of(node), "expected a number");
        }
        double value = 0.0;
        try {
            value = node.as<double>();
        } catch (const YAML::BadConversion&) {
            throw ScenarioError(path, line_of(node),
                                fmt::format("expected a number, got '{}'", node.Scalar()));
        }
        if (!std::isfinite(value)) {
            throw ScenarioError(path, line_of(node), "must be finite");
        }
        return value;
    }

    static std::string text(const YAML::Node& node, const std::string& path)
    {
        if (!node.IsScalar()) {
            throw ScenarioError(path, line_of(node), "expected a string");
        }
        return node.Scalar();
    }

    template <std::size_t N>
    static std::array<double, N> numbers(const YAML::Node& node, const std::string& path)
    {
        if (!node.IsSequence() || node.size() != N) {
            throw ScenarioError(path, line_of(node), fmt::format("expected a list of {} numbers", N));
        }
        std::array<double, N> out{};
        for (std::size_t i = 0; i < N; ++i) {
            out[i] = number(node[i], fmt::format("{}[{}]", path, i));
        }
        return out;
    }

    static Eigen::Vector3d vector3(const YAML::Node& node, const std::string& path)
    {
        const auto v = numbers<3>(node, path);
        return {v[0], v[1], v[2]};
    }

private:
    YAML::Node node_;
    std::string path_;
};

bool positive(double v) { return v > 0.0; }
bool non_negative(double v) { return v >= 0.0; }

void read_impedance(const Section& root, ImpedanceParams& params)
{
    const auto node = root.get("impedance");
    if (!node) {
        return;
    }
    const Section s(*node, "impedance", {"mass_kg", "damping_ns_per_m", "stiffness_n_per_m"});
    s.read_number("mass_kg", params.mass, positive, "must be > 0");
    s.read_number("damping_ns_per_m", params.damping, non_negative, "must be >= 0");
    s.read_number("stiffness_n_per_m", params.stiffness, positive, "must be > 0");
}

void read_formation(const Section& root, WorldConfig& world)
{
    const auto node = root.get("formation");
    if (!node) {
        return;
    }
    auto& f = world.formation;
    const Section s(*node, "formation",
                    {"hand_gain_ns_per_m", "correction_limit_m", "offsets_m", "lateral_width_m",
                     "max_hand_speed_mps", "heading", "heading_mode", "leader_correction"});
    s.read_number("hand_gain_ns_per_m", f.velocity_gain);
    s.read_number("correction_limit_m", f.correction_limit, positive, "must be > 0");
    s.read_number("lateral_width_m", f.lateral_width, non_negative, "must be >= 0");
    s.read_number("max_hand_speed_mps", f.max_hand_speed, positive, "must be > 0");
    if (auto offsets = s.get("offsets_m")) {
        f.offsets = Section::numbers<4>(*offsets, s.path("offsets_m"));
        for (std::size_t i = 0; i < f.offsets.size(); ++i) {
            if (!(f.offsets[i] > 0.0)) {
                throw ScenarioError(fmt::format("formation.offsets_m[{}]", i), line_of(*offsets),
                                    fmt::format("must be > 0 (got {})", f.offsets[i]));
            }
        }
    }
    if (auto heading = s.get("heading")) {
        f.heading = Section::vector3(*heading, s.path("heading"));
        if (f.heading.norm() < 1e-12) {
            throw ScenarioError(s.path("heading"), line_of(*heading), "must be non-zero");
        }
    }
    if (auto mode = s.get("heading_mode")) {
        const auto value = Section::text(*mode, s.path("heading_mode"));
        if (value == "fixed") {
            world.heading_mode = HeadingMode::Fixed;
        } else if (value == "hand_velocity") {
            world.heading_mode = HeadingMode::HandVelocity;
        } else {
            throw ScenarioError(s.path("heading_mode"), line_of(*mode),
                                fmt::format("expected fixed or hand_velocity, got '{}'", value));
        }
    }
    if (auto leader = s.get("leader_correction")) {
        const auto value = Section::text(*leader, s.path("leader_correction"));
        if (value == "lagging") {
            f.leader_correction = LeaderCorrection::Lagging;
        } else if (value == "leading") {
            f.leader_correction = LeaderCorrection::Leading;
        } else {
            throw ScenarioError(s.path("leader_correction"), line_of(*leader),
                                fmt::format("expected lagging or leading, got '{}'", value));
        }
    }
}

void read_pid(const Section& root, PidGains& pid)
{
    const auto node = root.get("pid");
    if (!node) {
        return;
    }
    const Section s(*node, "pid",
                    {"kp_per_s2", "ki_per_s3", "kd_per_s", "accel_limit_mps2", "integrator_limit_ms"});
    s.read_number("kp_per_s2", pid.kp, positive, "must be > 0");
    s.read_number("ki_per_s3", pid.ki, non_negative, "must be >= 0");
    s.read_number("kd_per_s", pid.kd, non_negative, "must be >= 0");
    s.read_number("accel_limit_mps2", pid.accel_limit, positive, "must be > 0");
    s.read_number("integrator_limit_ms", pid.integrator_limit, non_negative, "must be >= 0");
}

void read_metrics(const Section& root, MetricsConfig& metrics)
{
    const auto node = root.get("metrics");
    if (!node) {
        return;
    }
    const Section s(*node, "metrics", {"shape_band", "rate_deadband_per_s", "rate_time_constant_s"});
    s.read_number(
        "shape_band", metrics.shape_band, [](double v) { return v > 0.0 && v < 1.0; },
        "must be in (0, 1)");
    s.read_number("rate_deadband_per_s", metrics.rate_deadband, non_negative, "must be >= 0");
    s.read_number("rate_time_constant_s", metrics.rate_time_constant, non_negative,
                  "must be >= 0");
}

Interpolation parse_interpolation(const YAML::Node& node, const std::string& path)
{
    const auto value = Section::text(node, path);
    if (value == "hold") {
        return Interpolation::Hold;
    }
    if (value == "linear") {
        return Interpolation::Linear;
    }
    if (value == "smoothstep") {
        return Interpolation::Smoothstep;
    }
    throw ScenarioError(path, line_of(node),
                        fmt::format("expected hold, linear or smoothstep, got '{}'", value));
}

HandTrajectory read_hand(const Section& root)
{
    const auto node = root.get("hand");
    if (!node) {
        return {};
    }
    const Section s(*node, "hand", {"waypoints"});
    const auto list = s.get("waypoints");
    if (!list || list->IsNull()) {
        return {};
    }
    if (!list->IsSequence()) {
        throw ScenarioError("hand.waypoints", line_of(*list), "expected a list");
    }

    std::vector<Waypoint> waypoints;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const auto path = fmt::format("hand.waypoints[{}]", i);
        const YAML::Node item = (*list)[i];
        const Section w(item, path, {"t_s", "position_m", "interp"});
        Waypoint waypoint;
        const auto t = w.get("t_s");
        const auto position = w.get("position_m");
        if (!t) {
            throw ScenarioError(w.path("t_s"), line_of(item), "required");
        }
        if (!position) {
            throw ScenarioError(w.path("position_m"), line_of(item), "required");
        }
        waypoint.time = Section::number(*t, w.path("t_s"));
        waypoint.position = Section::vector3(*position, w.path("position_m"));
        if (auto interp = w.get("interp")) {
            waypoint.mode = parse_interpolation(*interp, w.path("interp"));
        }
        if (!waypoints.empty() && !(waypoint.time > waypoints.back().time)) {
            throw ScenarioError(w.path("t_s"), line_of(*t),
                                fmt::format("waypoint times must be strictly increasing ({} after {})",
                                            waypoint.time, waypoints.back().time));
        }
        if (waypoint.time < 0.0) {
            throw ScenarioError(w.path("t_s"), line_of(*t), "must be >= 0");
        }
        waypoints.push_back(waypoint);
    }
    return HandTrajectory(std::move(waypoints));
}

}  // namespace

namespace {

struct Violation {
    std::string field;
    std::string message;
};

std::optional<Violation> check_scenario(const ScenarioConfig& config)
{
    try {
        config.world.validate();
    } catch (const ParameterError& e) {
        return Violation{"<config>", e.what()};
    }
    if (!(std::isfinite(config.duration) && config.duration > 0.0)) {
        return Violation{"duration_s", fmt::format("must be > 0 (got {})", config.duration)};
    }
    const double ticks = config.duration * config.world.rate_hz;
    if (std::abs(ticks - std::round(ticks)) > 1e-6) {
        return Violation{"duration_s",
                         fmt::format("must be a whole number of sample periods (got {} s at {} Hz)",
                                     config.duration, config.world.rate_hz)};
    }
    if (config.duration < config.hand.end_time()) {
        return Violation{"duration_s", fmt::format("{} s is shorter than the last waypoint at {} s",
                                                   config.duration, config.hand.end_time())};
    }
    return std::nullopt;
}

}  // namespace

void validate_scenario(const ScenarioConfig& config)
{
    if (auto violation = check_scenario(config)) {
        throw ScenarioError(violation->field, 0, violation->message);
    }
}

ScenarioConfig load_scenario(std::string_view text)
{
    YAML::Node doc;
    try {
        doc = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ScenarioError("<document>", e.mark.line >= 0 ? e.mark.line + 1 : 0, e.msg);
    }

    ScenarioConfig config;
    const Section root(doc, "",
                       {"name", "duration_s", "sample_rate_hz", "velocity_window_s", "impedance",
                        "formation", "pid", "metrics", "hand", "output"});
    if (auto name = root.get("name")) {
        config.name = Section::text(*name, "name");
    }
    root.read_number("duration_s", config.duration, positive, "must be > 0");
    root.read_number("sample_rate_hz", config.world.rate_hz, positive, "must be > 0");
    root.read_number("velocity_window_s", config.world.velocity_window, positive, "must be > 0");
    read_impedance(root, config.world.impedance);
    read_formation(root, config.world);
    read_pid(root, config.world.pid);
    read_metrics(root, config.world.metrics);
    config.hand = read_hand(root);
    if (auto output = root.get("output")) {
        const Section s(*output, "output", {"format"});
        if (auto format = s.get("format")) {
            const auto value = Section::text(*format, "output.format");
            const auto parsed = parse_log_format(value);
            if (!parsed) {
                throw ScenarioError("output.format", line_of(*format),
                                    fmt::format("expected csv or structured, got '{}'", value));
            }
            config.format = *parsed;
        }
    }

    if (auto violation = check_scenario(config)) {
        int line = 0;
        if (violation->field == "duration_s") {
            if (auto node = root.get("duration_s")) {
                line = line_of(*node);
            }
        }
        throw ScenarioError(violation->field, line, violation->message);
    }
    return config;
}

ScenarioConfig load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError(path, 0, "cannot open scenario file");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_scenario(buffer.str());
}

}  // namespace swarmguide
