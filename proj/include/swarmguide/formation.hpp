#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace swarmguide {

inline constexpr std::size_t kVehicleCount = 4;
inline constexpr std::size_t kLinkCount = 5;

// Rhombus edges. Hum1 ties the operator's hand to vehicle 1.
enum class Link : std::size_t { Hum1 = 0, V1V2, V1V3, V2V4, V3V4 };

inline constexpr std::array<Link, kLinkCount> kAllLinks{Link::Hum1, Link::V1V2, Link::V1V3,
                                                        Link::V2V4, Link::V3V4};

std::string_view link_name(Link link);

constexpr std::size_t index(Link link)
{
    return static_cast<std::size_t>(link);
}

using VehiclePositions = std::array<Eigen::Vector3d, kVehicleCount>;
using LinkVectors = std::array<Eigen::Vector3d, kLinkCount>;

// How the hum-1 correction enters vehicle 1's goal.
//  Lagging: g1 = hand - L1*u + x_imp, so a hand moving along +u opens the
//           hand-to-vehicle gap exactly like every drone-to-drone link.
//  Leading: g1 = hand - L1*u - x_imp, which pulls vehicle 1 ahead instead.
enum class LeaderCorrection { Lagging, Leading };

struct FormationConfig {
    // Longitudinal offsets L1..L4. L1: hand to vehicle 1, L2: vehicle 1 to
    // vehicles 2/3, L3: midpoint(2,3) to vehicle 4. L4 is carried for
    // completeness; no goal row uses it.
    std::array<double, 4> offsets{0.5, 0.5, 0.5, 0.5};
    double lateral_width = 0.5;  // W, half-width of the rhombus
    double correction_limit = 0.25;
    double velocity_gain = -7.0;  // Kv, N*s/m
    double max_hand_speed = 1.5;
    Eigen::Vector3d heading = Eigen::Vector3d::UnitX();
    LeaderCorrection leader_correction = LeaderCorrection::Lagging;

    void validate() const;
};

// Unit heading u and the horizontal lateral axis n = z x u.
struct FormationFrame {
    Eigen::Vector3d heading;
    Eigen::Vector3d lateral;
};

// Throws ParameterError for a zero-length or non-finite heading.
FormationFrame make_frame(const Eigen::Vector3d& heading);

VehiclePositions nominal_layout(const FormationConfig& config, const Eigen::Vector3d& hand,
                                const FormationFrame& frame);
VehiclePositions nominal_layout(const FormationConfig& config, const Eigen::Vector3d& hand,
                                const Eigen::Vector3d& heading);

struct HandSample {
    double time = 0.0;  // s
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct VelocityEstimate {
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    bool cold = true;  // fewer than two samples in the window
};

/**
 * Least-squares slope of position against time over the samples that lie
 * within `window` seconds of the newest one. Returns a zero, cold estimate
 * when fewer than two samples qualify; throws InputError when timestamps
 * are not strictly increasing.
 */
VelocityEstimate estimate_hand_velocity(std::span<const HandSample> history, double window);

// Scales v down to norm max_speed when it exceeds it.
Eigen::Vector3d cap_speed(const Eigen::Vector3d& velocity, double max_speed);

struct HandInput {
    double time = 0.0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // capped estimate
    bool cold = true;
};

struct FormationGoals {
    VehiclePositions goals{};
};

/**
 * Per-vehicle goal positions from the hand pose, the actual vehicle
 * positions and the clamped link corrections:
 *
 *     g1 = hand - L1 u -/+ c_h1
 *     g2 = p1 - L2 u + W n + c_12
 *     g3 = p1 - L2 u - W n + c_13
 *     g4 = (p2 + p3)/2 - L3 u + (c_24 + c_34)/2
 *
 * `corrections` must hold exactly one vector per link, in Link order;
 * throws ConfigError otherwise.
 */
FormationGoals compute_goals(const Eigen::Vector3d& hand, const VehiclePositions& positions,
                             std::span<const Eigen::Vector3d> corrections,
                             const FormationConfig& config, const FormationFrame& frame);

enum class ShapeClass { Contracted, Regular, Extended };
enum class RateClass { Decreasing, Constant, Increasing };

std::string_view to_string(ShapeClass shape);
std::string_view to_string(RateClass rate);
std::optional<ShapeClass> parse_shape(std::string_view text);
std::optional<RateClass> parse_rate(std::string_view text);

struct MetricsConfig {
    double shape_band = 0.1;          // delta: regular when |s - 1| <= delta
    double rate_deadband = 0.05;      // rho, 1/s
    double rate_time_constant = 0.25;  // s, smoothing of ds/dt

    void validate() const;
};

struct FormationMetrics {
    std::array<double, kLinkCount> link_distances{};
    double spread = 1.0;       // mean drone link distance / nominal
    double spread_rate = 0.0;  // smoothed ds/dt, 1/s
    ShapeClass shape = ShapeClass::Regular;
    RateClass rate = RateClass::Constant;
    bool degenerate = false;  // two or more vehicles coincide
};

ShapeClass classify_shape(double spread, const MetricsConfig& config);
RateClass classify_rate(double spread_rate, const MetricsConfig& config);

// Mean nominal drone-to-drone link distance (hum-1 excluded).
double nominal_mean_link_distance(const FormationConfig& config);

/**
 * Link distances, spread ratio and its smoothed rate. With no previous
 * metrics the rate starts at zero. Throws ParameterError when dt <= 0.
 */
FormationMetrics formation_metrics(const Eigen::Vector3d& hand, const VehiclePositions& positions,
                                   const FormationConfig& formation, const MetricsConfig& config,
                                   const std::optional<FormationMetrics>& previous, double dt);

}  // namespace swarmguide
