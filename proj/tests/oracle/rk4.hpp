#pragma once

// Dense classical RK4 integration of M x'' + D x' + K x = F with F held
// constant per call. Deliberately independent of the library under test.

#include <array>
#include <cmath>
#include <cstdint>

namespace oracle {

struct Mdk {
    double m;
    double d;
    double k;
};

using State = std::array<double, 2>;  // x, v

inline State derivative(const Mdk& p, const State& s, double f)
{
    return {s[1], (f - p.d * s[1] - p.k * s[0]) / p.m};
}

inline State rk4_step(const Mdk& p, const State& s, double f, double h)
{
    const State k1 = derivative(p, s, f);
    const State k2 = derivative(p, {s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]}, f);
    const State k3 = derivative(p, {s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]}, f);
    const State k4 = derivative(p, {s[0] + h * k3[0], s[1] + h * k3[1]}, f);
    return {s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

inline std::int64_t substeps(double span, double dt)
{
    return static_cast<std::int64_t>(std::ceil(span / dt - 1e-9));
}

// Integrates over `span` seconds with steps no longer than dt.
inline State integrate(const Mdk& p, State s, double f, double span, double dt = 1e-6)
{
    const auto n = substeps(span, dt);
    const double h = span / static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) {
        s = rk4_step(p, s, f, h);
    }
    return s;
}

/**
 * The RK4 recursion is linear in (x, v, F), so n substeps over one sample
 * period compose to s' = P s + q F. Built by running the substeps on the
 * basis states; applying the map equals running the substeps up to
 * rounding.
 */
struct IntervalMap {
    double p00, p01, p10, p11;
    double q0, q1;

    State apply(const State& s, double f) const
    {
        return {p00 * s[0] + p01 * s[1] + q0 * f, p10 * s[0] + p11 * s[1] + q1 * f};
    }
};

inline IntervalMap interval_map(const Mdk& p, double span, double dt = 1e-6)
{
    const State e0 = integrate(p, {1.0, 0.0}, 0.0, span, dt);
    const State e1 = integrate(p, {0.0, 1.0}, 0.0, span, dt);
    const State q = integrate(p, {0.0, 0.0}, 1.0, span, dt);
    return {e0[0], e1[0], e0[1], e1[1], q[0], q[1]};
}

}  // namespace oracle
