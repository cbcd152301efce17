#include "swarmguide/impedance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "swarmguide/errors.hpp"

namespace swarmguide {

void ImpedanceParams::validate() const
{
    if (!(std::isfinite(mass) && mass > 0.0)) {
        throw ParameterError(fmt::format("impedance mass must be > 0, got {}", mass));
    }
    if (!(std::isfinite(damping) && damping >= 0.0)) {
        throw ParameterError(fmt::format("impedance damping must be >= 0, got {}", damping));
    }
    if (!(std::isfinite(stiffness) && stiffness > 0.0)) {
        throw ParameterError(fmt::format("impedance stiffness must be > 0, got {}", stiffness));
    }
}

const char* to_string(DampingRegime regime)
{
    switch (regime) {
    case DampingRegime::Underdamped: return "underdamped";
    case DampingRegime::Critical: return "critical";
    case DampingRegime::Overdamped: return "overdamped";
    }
    return "unknown";
}

DampingRegime classify_damping(const ImpedanceParams& params)
{
    params.validate();
    const double four_mk = 4.0 * params.mass * params.stiffness;
    const double discriminant = params.damping * params.damping - four_mk;
    if (std::abs(discriminant) <= kCriticalTolerance * four_mk) {
        return DampingRegime::Critical;
    }
    return discriminant < 0.0 ? DampingRegime::Underdamped : DampingRegime::Overdamped;
}

DiscreteModel build_discrete_model(const ImpedanceParams& params, double period)
{
    params.validate();
    if (!(std::isfinite(period) && period > 0.0)) {
        throw ParameterError(fmt::format("sample period must be > 0, got {}", period));
    }

    DiscreteModel model;
    model.period = period;
    model.a = -params.damping / params.mass;
    model.b = -params.stiffness / params.mass;
    model.c = 1.0 / params.mass;
    model.regime = classify_damping(params);

    // exp(A T) = exp(mu T) * (C * I + S * (A - mu I)) where mu is the mean
    // eigenvalue and (C, S) are the even/odd parts of the eigen-spread term.
    const double mu = 0.5 * model.a;
    const double spread_sq = mu * mu + model.b;
    double cos_part = 1.0;        // C
    double sin_part = period;     // S
    double cos_minus_one = 0.0;   // C - 1, kept separately for small T

    switch (model.regime) {
    case DampingRegime::Underdamped: {
        const double omega = std::sqrt(-spread_sq);
        const double half = std::sin(0.5 * omega * period);
        cos_part = std::cos(omega * period);
        sin_part = std::sin(omega * period) / omega;
        cos_minus_one = -2.0 * half * half;
        model.lambda1 = {mu, omega};
        model.lambda2 = {mu, -omega};
        break;
    }
    case DampingRegime::Overdamped: {
        const double omega = std::sqrt(spread_sq);
        const double half = std::sinh(0.5 * omega * period);
        cos_part = std::cosh(omega * period);
        sin_part = std::sinh(omega * period) / omega;
        cos_minus_one = 2.0 * half * half;
        model.lambda1 = {mu + omega, 0.0};
        model.lambda2 = {mu - omega, 0.0};
        break;
    }
    case DampingRegime::Critical:
        model.lambda1 = {mu, 0.0};
        model.lambda2 = {mu, 0.0};
        break;
    }

    const double decay = std::exp(mu * period);
    model.Ad << decay * (cos_part - mu * sin_part), decay * sin_part,
        decay * model.b * sin_part, decay * (cos_part + mu * sin_part);

    // Bd = (Ad - I) A^{-1} B = (c / b) * [Ad00 - 1; Ad10].
    const double ad00_minus_one =
        std::expm1(mu * period) * (cos_part - mu * sin_part) + cos_minus_one - mu * sin_part;
    model.Bd << (model.c / model.b) * ad00_minus_one, model.c * decay * sin_part;
    return model;
}

Eigen::Matrix2d repeated_root_transition(const ImpedanceParams& params, double period)
{
    params.validate();
    if (!(std::isfinite(period) && period > 0.0)) {
        throw ParameterError(fmt::format("sample period must be > 0, got {}", period));
    }
    Eigen::Matrix2d a;
    a << 0.0, 1.0, -params.stiffness / params.mass, -params.damping / params.mass;
    const double lambda = 0.5 * a(1, 1);
    const Eigen::Matrix2d identity = Eigen::Matrix2d::Identity();
    return std::exp(lambda * period) * (identity + period * (a - lambda * identity));
}

namespace {

bool all_finite(const Eigen::Vector3d& v)
{
    return v.allFinite();
}

}  // namespace

ImpedanceLinkState step_link(const DiscreteModel& model, const ImpedanceLinkState& state,
                             const Eigen::Vector3d& force, double limit)
{
    if (!(limit > 0.0)) {
        throw ParameterError(fmt::format("correction limit must be > 0, got {}", limit));
    }
    if (!all_finite(force)) {
        throw NumericError("non-finite impedance force");
    }
    if (!all_finite(state.displacement) || !all_finite(state.velocity)) {
        throw NumericError("non-finite impedance link state");
    }

    ImpedanceLinkState next;
    for (int axis = 0; axis < 3; ++axis) {
        const Eigen::Vector2d current(state.displacement[axis], state.velocity[axis]);
        const Eigen::Vector2d advanced = model.Ad * current + model.Bd * force[axis];
        next.displacement[axis] = advanced[0];
        next.velocity[axis] = advanced[1];
    }
    if (!all_finite(next.displacement) || !all_finite(next.velocity)) {
        throw NumericError("impedance link state diverged");
    }
    next.correction = clamp_correction(next.displacement, limit);
    return next;
}

Eigen::Vector3d hand_force(double velocity_gain, const Eigen::Vector3d& hand_velocity)
{
    if (!std::isfinite(velocity_gain) || !all_finite(hand_velocity)) {
        throw NumericError("non-finite hand velocity or gain");
    }
    return velocity_gain * hand_velocity;
}

double clamp_correction(double value, double limit)
{
    if (!(limit > 0.0)) {
        throw ParameterError(fmt::format("correction limit must be > 0, got {}", limit));
    }
    return std::clamp(value, -limit, limit);
}

Eigen::Vector3d clamp_correction(const Eigen::Vector3d& value, double limit)
{
    return {clamp_correction(value.x(), limit), clamp_correction(value.y(), limit),
            clamp_correction(value.z(), limit)};
}

}  // namespace swarmguide
