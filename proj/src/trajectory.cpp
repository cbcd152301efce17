#include "swarmguide/scenario.hpp"

#include <algorithm>

namespace swarmguide {

std::string_view to_string(Interpolation mode)
{
    switch (mode) {
    case Interpolation::Hold: return "hold";
    case Interpolation::Linear: return "linear";
    case Interpolation::Smoothstep: return "smoothstep";
    }
    return "?";
}

HandTrajectory::HandTrajectory(std::vector<Waypoint> waypoints) : waypoints_(std::move(waypoints)) {}

double HandTrajectory::end_time() const
{
    return waypoints_.empty() ? 0.0 : waypoints_.back().time;
}

Eigen::Vector3d HandTrajectory::segment_velocity(std::size_t segment) const
{
    const auto& from = waypoints_[segment - 1];
    const auto& to = waypoints_[segment];
    return (to.position - from.position) / (to.time - from.time);
}

Eigen::Vector3d HandTrajectory::position_at(double t) const
{
    if (waypoints_.empty()) {
        return kDefaultHandPosition;
    }
    if (t <= waypoints_.front().time) {
        return waypoints_.front().position;
    }
    if (t >= waypoints_.back().time) {
        return waypoints_.back().position;
    }

    const auto it = std::upper_bound(waypoints_.begin(), waypoints_.end(), t,
                                     [](double value, const Waypoint& w) { return value < w.time; });
    const auto segment = static_cast<std::size_t>(it - waypoints_.begin());
    const auto& from = waypoints_[segment - 1];
    const auto& to = waypoints_[segment];
    const double span = to.time - from.time;
    const double s = (t - from.time) / span;

    switch (to.mode) {
    case Interpolation::Hold:
        return from.position;
    case Interpolation::Linear:
        return from.position + s * (to.position - from.position);
    case Interpolation::Smoothstep: {
        Eigen::Vector3d start_slope = Eigen::Vector3d::Zero();
        Eigen::Vector3d end_slope = Eigen::Vector3d::Zero();
        if (segment >= 2 && from.mode == Interpolation::Linear) {
            start_slope = segment_velocity(segment - 1);
        }
        if (segment + 1 < waypoints_.size() &&
            waypoints_[segment + 1].mode == Interpolation::Linear) {
            end_slope = segment_velocity(segment + 1);
        }
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        const double h10 = s3 - 2.0 * s2 + s;
        const double h01 = -2.0 * s3 + 3.0 * s2;
        const double h11 = s3 - s2;
        return h00 * from.position + h10 * span * start_slope + h01 * to.position +
               h11 * span * end_slope;
    }
    }
    return from.position;
}

}  // namespace swarmguide
