#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "swarmguide/formation.hpp"
#include "swarmguide/tactile.hpp"
#include "swarmguide/vehicle_sim.hpp"

namespace swarmguide {

// Malformed or rejected client message. The connection stays open.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Real numbers on the wire carry 6 significant digits.
inline constexpr int kWireDigits = 6;

double round_significant(double value, int digits = kWireDigits);

struct StateMessage {
    std::uint64_t tick = 0;
    double time = 0.0;
    bool paused = false;
    Eigen::Vector3d hand = Eigen::Vector3d::Zero();
    VehiclePositions positions{};
    VehiclePositions goals{};
    LinkVectors corrections{};
    double spread = 1.0;
    ShapeClass shape = ShapeClass::Regular;
    RateClass rate = RateClass::Constant;
    PatternId pattern = PatternId::None;
    std::optional<ScheduledFrame> frame;

    bool operator==(const StateMessage&) const = default;
};

StateMessage make_state_message(const WorldState& world, PatternId pattern,
                                const std::optional<ScheduledFrame>& frame, bool paused);

// Every real field rounded to the wire precision.
StateMessage quantize(const StateMessage& message);

/**
 * {"type":"state","tick":..,"t":..,"paused":..,"hand":[x,y,z],
 *  "vehicles":[{"pos":[..],"goal":[..]} x4],"links":{"hum1":[..],..},
 *  "spread":..,"shape":..,"rate":..,"pattern":..,"frame":null|{..}}
 * Field order is fixed.
 */
std::string encode_state(const StateMessage& message);
StateMessage decode_state(std::string_view bytes);

// {"type":"tactile","wave_id":..,"pattern":..,"frame_index":..,
//  "t_start_ms":..,"duration_ms":..,"fingers":[5 x 0|150|200|250]}
std::string encode_frame(const ScheduledFrame& frame);
ScheduledFrame decode_frame(std::string_view bytes);

struct HandPositionInput {
    double client_time_ms = 0.0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

enum class Command { Reset, Pause, Resume };

std::string_view to_string(Command command);

struct CommandInput {
    Command command = Command::Reset;
};

struct SetParamInput {
    std::string name;
    double value = 0.0;
};

using InputMessage = std::variant<HandPositionInput, CommandInput, SetParamInput>;

/**
 * Accepted shapes:
 *   {"type":"hand","t_ms":..,"position":[x,y,z]}
 *   {"type":"command","command":"reset"|"pause"|"resume"}
 *   {"type":"set_param","name":..,"value":..}
 * set_param names: K_v, limit, M_d, D_d, K_d, W, L_1..L_4. Values are
 * checked against their own invariants here; throws ProtocolError.
 */
InputMessage decode_input(std::string_view bytes);
std::string encode_input(const InputMessage& message);

bool is_tunable(std::string_view name);

/**
 * Applies one tunable to a copy of `config` and validates the result as a
 * whole. Throws ParameterError (config untouched) when rejected.
 */
WorldConfig apply_param(const WorldConfig& config, std::string_view name, double value);

}  // namespace swarmguide
