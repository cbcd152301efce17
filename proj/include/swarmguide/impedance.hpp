#pragma once

#include <complex>

#include <Eigen/Dense>

namespace swarmguide {

/**
 * Virtual mass-spring-damper of one impedance link:
 *
 *     M * x'' + D * x' + K * x = F(t)
 *
 * The same parameters drive every axis of every link.
 */
struct ImpedanceParams {
    double mass = 1.9;        // kg (virtual)
    double damping = 12.6;    // N*s/m
    double stiffness = 21.0;  // N/m

    // Throws ParameterError unless mass > 0, damping >= 0, stiffness > 0.
    void validate() const;
};

enum class DampingRegime { Underdamped, Critical, Overdamped };

const char* to_string(DampingRegime regime);

// Relative tolerance on D^2 - 4MK below which a link is treated as critical.
inline constexpr double kCriticalTolerance = 1e-9;

DampingRegime classify_damping(const ImpedanceParams& params);

/**
 * Exact zero-order-hold propagator of the impedance ODE over one sample
 * period T:
 *
 *     [x; v]_{k+1} = Ad * [x; v]_k + Bd * F_k
 *
 * with Ad = exp(A T), Bd = (exp(A T) - I) A^{-1} B, A = [[0, 1], [b, a]],
 * B = [0, c]^T, a = -D/M, b = -K/M, c = 1/M.
 */
struct DiscreteModel {
    Eigen::Matrix2d Ad = Eigen::Matrix2d::Identity();
    Eigen::Vector2d Bd = Eigen::Vector2d::Zero();
    double period = 0.0;

    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    std::complex<double> lambda1;
    std::complex<double> lambda2;
    DampingRegime regime = DampingRegime::Critical;
};

// Throws ParameterError for invalid params or period <= 0.
DiscreteModel build_discrete_model(const ImpedanceParams& params, double period);

/**
 * Repeated-root closed form exp(lambda T) * (I + T (A - lambda I)) with
 * lambda = a/2. Only meaningful when the link is critically damped; kept as
 * an independent cross-check of build_discrete_model in that regime.
 */
Eigen::Matrix2d repeated_root_transition(const ImpedanceParams& params, double period);

/**
 * State of one impedance link. `displacement`/`velocity` hold the raw
 * per-axis ODE state; `correction` is the clamped displacement that is
 * actually applied to goal positions.
 */
struct ImpedanceLinkState {
    Eigen::Vector3d displacement = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d correction = Eigen::Vector3d::Zero();

    bool operator==(const ImpedanceLinkState&) const = default;
};

/**
 * Advances one link by one sample period under a force held constant over
 * the period. The raw state evolves unclamped; only `correction` is clamped
 * to +/- limit. Throws NumericError on non-finite force or state and
 * ParameterError when limit <= 0.
 */
ImpedanceLinkState step_link(const DiscreteModel& model, const ImpedanceLinkState& state,
                             const Eigen::Vector3d& force, double limit);

// F = Kv * v. Throws NumericError on non-finite input.
Eigen::Vector3d hand_force(double velocity_gain, const Eigen::Vector3d& hand_velocity);

// Symmetric clamp to [-limit, limit]. Throws ParameterError when limit <= 0.
double clamp_correction(double value, double limit);
Eigen::Vector3d clamp_correction(const Eigen::Vector3d& value, double limit);

}  // namespace swarmguide
