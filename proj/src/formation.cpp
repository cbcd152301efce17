#include "swarmguide/formation.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "swarmguide/errors.hpp"

namespace swarmguide {

std::string_view link_name(Link link)
{
    switch (link) {
    case Link::Hum1: return "hum1";
    case Link::V1V2: return "12";
    case Link::V1V3: return "13";
    case Link::V2V4: return "24";
    case Link::V3V4: return "34";
    }
    return "?";
}

void FormationConfig::validate() const
{
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (!(std::isfinite(offsets[i]) && offsets[i] > 0.0)) {
            throw ParameterError(fmt::format("offset L_{} must be > 0, got {}", i + 1, offsets[i]));
        }
    }
    if (!(std::isfinite(lateral_width) && lateral_width >= 0.0)) {
        throw ParameterError(fmt::format("lateral width must be >= 0, got {}", lateral_width));
    }
    if (!(std::isfinite(correction_limit) && correction_limit > 0.0)) {
        throw ParameterError(
            fmt::format("correction limit must be > 0, got {}", correction_limit));
    }
    if (!std::isfinite(velocity_gain)) {
        throw ParameterError("velocity gain must be finite");
    }
    if (!(std::isfinite(max_hand_speed) && max_hand_speed > 0.0)) {
        throw ParameterError(fmt::format("max hand speed must be > 0, got {}", max_hand_speed));
    }
    make_frame(heading);
}

FormationFrame make_frame(const Eigen::Vector3d& heading)
{
    const double norm = heading.norm();
    if (!std::isfinite(norm) || norm < 1e-12) {
        throw ParameterError("formation heading must be a non-zero finite vector");
    }
    FormationFrame frame;
    frame.heading = heading / norm;
    Eigen::Vector3d lateral = Eigen::Vector3d::UnitZ().cross(frame.heading);
    if (lateral.norm() < 1e-12) {
        // Vertical heading: no horizontal normal, fall back to world Y.
        lateral = Eigen::Vector3d::UnitY();
    }
    frame.lateral = lateral.normalized();
    return frame;
}

VehiclePositions nominal_layout(const FormationConfig& config, const Eigen::Vector3d& hand,
                                const FormationFrame& frame)
{
    const Eigen::Vector3d& u = frame.heading;
    const Eigen::Vector3d& n = frame.lateral;
    VehiclePositions layout;
    layout[0] = hand - config.offsets[0] * u;
    layout[1] = layout[0] - config.offsets[1] * u + config.lateral_width * n;
    layout[2] = layout[0] - config.offsets[1] * u - config.lateral_width * n;
    layout[3] = 0.5 * (layout[1] + layout[2]) - config.offsets[2] * u;
    return layout;
}

VehiclePositions nominal_layout(const FormationConfig& config, const Eigen::Vector3d& hand,
                                const Eigen::Vector3d& heading)
{
    return nominal_layout(config, hand, make_frame(heading));
}

VelocityEstimate estimate_hand_velocity(std::span<const HandSample> history, double window)
{
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (!(history[i].time > history[i - 1].time)) {
            throw InputError(fmt::format("hand sample timestamps not increasing at index {}", i));
        }
    }
    VelocityEstimate estimate;
    if (history.size() < 2) {
        return estimate;
    }

    // Half a microsecond of slack so a window that is an exact multiple of
    // the sample period keeps its oldest sample.
    const double newest = history.back().time;
    const double cutoff = newest - window - 5e-7;
    std::size_t first = history.size() - 1;
    while (first > 0 && history[first - 1].time >= cutoff) {
        --first;
    }
    const auto samples = history.subspan(first);
    if (samples.size() < 2) {
        return estimate;
    }

    // Centre time on the newest sample to keep the sums well conditioned.
    double mean_t = 0.0;
    Eigen::Vector3d mean_p = Eigen::Vector3d::Zero();
    for (const auto& s : samples) {
        mean_t += s.time - newest;
        mean_p += s.position;
    }
    const double count = static_cast<double>(samples.size());
    mean_t /= count;
    mean_p /= count;

    double stt = 0.0;
    Eigen::Vector3d stp = Eigen::Vector3d::Zero();
    for (const auto& s : samples) {
        const double dt = (s.time - newest) - mean_t;
        stt += dt * dt;
        stp += dt * (s.position - mean_p);
    }
    estimate.velocity = stp / stt;
    estimate.cold = false;
    return estimate;
}

Eigen::Vector3d cap_speed(const Eigen::Vector3d& velocity, double max_speed)
{
    const double speed = velocity.norm();
    if (speed > max_speed) {
        return velocity * (max_speed / speed);
    }
    return velocity;
}

FormationGoals compute_goals(const Eigen::Vector3d& hand, const VehiclePositions& positions,
                             std::span<const Eigen::Vector3d> corrections,
                             const FormationConfig& config, const FormationFrame& frame)
{
    if (corrections.size() != kLinkCount) {
        throw ConfigError(fmt::format("expected {} link corrections, got {}", kLinkCount,
                                      corrections.size()));
    }
    if (!hand.allFinite()) {
        throw NumericError("non-finite hand position");
    }
    for (const auto& p : positions) {
        if (!p.allFinite()) {
            throw NumericError("non-finite vehicle position");
        }
    }

    const Eigen::Vector3d& u = frame.heading;
    const Eigen::Vector3d& n = frame.lateral;
    const double width = config.lateral_width;
    const Eigen::Vector3d& leader = corrections[index(Link::Hum1)];

    FormationGoals out;
    auto& g = out.goals;
    const Eigen::Vector3d leader_base = hand - config.offsets[0] * u;
    g[0] = config.leader_correction == LeaderCorrection::Lagging ? Eigen::Vector3d(leader_base + leader)
                                                                 : Eigen::Vector3d(leader_base - leader);
    const Eigen::Vector3d wing_base = positions[0] - config.offsets[1] * u;
    g[1] = wing_base + width * n + corrections[index(Link::V1V2)];
    g[2] = wing_base - width * n + corrections[index(Link::V1V3)];
    g[3] = 0.5 * (positions[1] + positions[2]) - config.offsets[2] * u +
           0.5 * (corrections[index(Link::V2V4)] + corrections[index(Link::V3V4)]);
    return out;
}

std::string_view to_string(ShapeClass shape)
{
    switch (shape) {
    case ShapeClass::Contracted: return "contracted";
    case ShapeClass::Regular: return "regular";
    case ShapeClass::Extended: return "extended";
    }
    return "?";
}

std::string_view to_string(RateClass rate)
{
    switch (rate) {
    case RateClass::Decreasing: return "decreasing";
    case RateClass::Constant: return "constant";
    case RateClass::Increasing: return "increasing";
    }
    return "?";
}

std::optional<ShapeClass> parse_shape(std::string_view text)
{
    for (auto shape : {ShapeClass::Contracted, ShapeClass::Regular, ShapeClass::Extended}) {
        if (to_string(shape) == text) {
            return shape;
        }
    }
    return std::nullopt;
}

std::optional<RateClass> parse_rate(std::string_view text)
{
    for (auto rate : {RateClass::Decreasing, RateClass::Constant, RateClass::Increasing}) {
        if (to_string(rate) == text) {
            return rate;
        }
    }
    return std::nullopt;
}

void MetricsConfig::validate() const
{
    if (!(std::isfinite(shape_band) && shape_band > 0.0 && shape_band < 1.0)) {
        throw ParameterError(fmt::format("shape band must be in (0, 1), got {}", shape_band));
    }
    if (!(std::isfinite(rate_deadband) && rate_deadband >= 0.0)) {
        throw ParameterError(fmt::format("rate deadband must be >= 0, got {}", rate_deadband));
    }
    if (!(std::isfinite(rate_time_constant) && rate_time_constant >= 0.0)) {
        throw ParameterError(
            fmt::format("rate time constant must be >= 0, got {}", rate_time_constant));
    }
}

ShapeClass classify_shape(double spread, const MetricsConfig& config)
{
    if (spread < 1.0 - config.shape_band) {
        return ShapeClass::Contracted;
    }
    if (spread > 1.0 + config.shape_band) {
        return ShapeClass::Extended;
    }
    return ShapeClass::Regular;
}

RateClass classify_rate(double spread_rate, const MetricsConfig& config)
{
    if (spread_rate > config.rate_deadband) {
        return RateClass::Increasing;
    }
    if (spread_rate < -config.rate_deadband) {
        return RateClass::Decreasing;
    }
    return RateClass::Constant;
}

double nominal_mean_link_distance(const FormationConfig& config)
{
    const double w = config.lateral_width;
    const double wing = std::hypot(config.offsets[1], w);
    const double tail = std::hypot(config.offsets[2], w);
    return 0.5 * (wing + tail);
}

FormationMetrics formation_metrics(const Eigen::Vector3d& hand, const VehiclePositions& positions,
                                   const FormationConfig& formation, const MetricsConfig& config,
                                   const std::optional<FormationMetrics>& previous, double dt)
{
    if (!(std::isfinite(dt) && dt > 0.0)) {
        throw ParameterError(fmt::format("metrics dt must be > 0, got {}", dt));
    }

    FormationMetrics metrics;
    auto& d = metrics.link_distances;
    d[index(Link::Hum1)] = (hand - positions[0]).norm();
    d[index(Link::V1V2)] = (positions[0] - positions[1]).norm();
    d[index(Link::V1V3)] = (positions[0] - positions[2]).norm();
    d[index(Link::V2V4)] = (positions[1] - positions[3]).norm();
    d[index(Link::V3V4)] = (positions[2] - positions[3]).norm();

    for (std::size_t i = 0; i < kVehicleCount && !metrics.degenerate; ++i) {
        for (std::size_t j = i + 1; j < kVehicleCount; ++j) {
            if ((positions[i] - positions[j]).norm() < 1e-9) {
                metrics.degenerate = true;
                break;
            }
        }
    }

    const double mean_distance = (d[1] + d[2] + d[3] + d[4]) / 4.0;
    metrics.spread = mean_distance / nominal_mean_link_distance(formation);

    if (previous) {
        const double raw_rate = (metrics.spread - previous->spread) / dt;
        const double alpha = config.rate_time_constant > 0.0
                                 ? -std::expm1(-dt / config.rate_time_constant)
                                 : 1.0;
        metrics.spread_rate = previous->spread_rate + alpha * (raw_rate - previous->spread_rate);
    }
    metrics.shape = classify_shape(metrics.spread, config);
    metrics.rate = classify_rate(metrics.spread_rate, config);
    return metrics;
}

}  // namespace swarmguide
