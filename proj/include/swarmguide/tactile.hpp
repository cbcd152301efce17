#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "swarmguide/formation.hpp"

namespace swarmguide {

// Glove patterns: shape letter (Contracted / Extended) followed by the
// distance trend (Decreasing / Increasing / Constant). None = silence.
enum class PatternId { CD, CI, CC, ED, EI, EC, None };

inline constexpr std::array<PatternId, 6> kAllPatterns{PatternId::CD, PatternId::CI,
                                                       PatternId::CC, PatternId::ED,
                                                       PatternId::EI, PatternId::EC};

std::string_view to_string(PatternId id);
std::optional<PatternId> parse_pattern(std::string_view text);

// Vibration level of one fingertip tactor, valued in Hz.
enum class Level : std::uint16_t { Off = 0, Low = 150, Mid = 200, High = 250 };

constexpr int frequency_hz(Level level)
{
    return static_cast<int>(level);
}

std::optional<Level> level_from_hz(int hz);

inline constexpr std::size_t kFingerCount = 5;  // thumb .. little
inline constexpr int kLowPulseMs = 200;
inline constexpr int kPulseMs = 300;
inline constexpr int kInterWaveGapMs = 600;

using FingerLevels = std::array<Level, kFingerCount>;

struct TactileFrame {
    int start_ms = 0;  // offset within the wave
    int duration_ms = 0;
    FingerLevels fingers{};

    bool operator==(const TactileFrame&) const = default;
};

struct PatternWave {
    PatternId id = PatternId::None;
    std::vector<TactileFrame> frames;
    int gap_ms = kInterWaveGapMs;

    int active_ms() const;
    int period_ms() const { return active_ms() + gap_ms; }
};

// Total over the 3x3 classes; regular shape maps to None.
PatternId select_pattern(ShapeClass shape, RateClass rate);

/**
 * Three abutting steps. Extended patterns flow middle -> sides
 * ({3}, {2,4}, {1,5}), contracted patterns sides -> middle. Increasing
 * distance puts LOW on the middle finger and HIGH on the sides, decreasing
 * the reverse, constant is MID throughout. LOW steps last 200 ms, others
 * 300 ms. None renders an empty wave.
 */
PatternWave render_pattern(PatternId id);

// One frame as emitted on the live stream, in absolute stream time.
struct ScheduledFrame {
    std::uint64_t wave_id = 0;
    PatternId pattern = PatternId::None;
    int frame_index = 0;
    std::int64_t start_us = 0;
    int duration_ms = 0;
    FingerLevels fingers{};

    std::int64_t end_us() const { return start_us + std::int64_t{duration_ms} * 1000; }
    double t_start_ms() const { return static_cast<double>(start_us) / 1000.0; }
    bool operator==(const ScheduledFrame&) const = default;
};

/**
 * Turns a metrics stream into complete tactile waves. The pattern of each
 * wave is chosen from the latest metrics at the wave boundary and a started
 * wave always runs to completion. A None wave is one 600 ms silent gap.
 * Clock time is in microseconds and must never go backwards.
 */
class TactileScheduler {
public:
    void update_metrics(const FormationMetrics& metrics);

    // Frames whose start time is <= now_us, in start order. Throws
    // StreamError on clock regression.
    std::vector<ScheduledFrame> advance(std::int64_t now_us);

    // Pattern of the wave in progress (including its trailing gap).
    PatternId active_pattern() const { return wave_pattern_; }

    // Frame being played at the last advance() time, if any.
    std::optional<ScheduledFrame> active_frame() const;

    // Absolute time of the next frame start or wave boundary.
    std::optional<std::int64_t> next_event_us() const;

    void reset();

private:
    void start_wave(std::int64_t start_us);

    PatternId latest_ = PatternId::None;
    bool started_ = false;
    std::int64_t clock_us_ = 0;
    std::uint64_t next_wave_id_ = 0;
    std::uint64_t wave_id_ = 0;
    PatternId wave_pattern_ = PatternId::None;
    std::int64_t wave_start_us_ = 0;
    std::int64_t wave_end_us_ = 0;
    PatternWave wave_;
    std::size_t next_frame_ = 0;
    std::optional<ScheduledFrame> last_emitted_;
};

}  // namespace swarmguide
