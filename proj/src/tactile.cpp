#include "swarmguide/tactile.hpp"

#include <fmt/format.h>

#include "swarmguide/errors.hpp"

namespace swarmguide {

std::string_view to_string(PatternId id)
{
    switch (id) {
    case PatternId::CD: return "CD";
    case PatternId::CI: return "CI";
    case PatternId::CC: return "CC";
    case PatternId::ED: return "ED";
    case PatternId::EI: return "EI";
    case PatternId::EC: return "EC";
    case PatternId::None: return "NONE";
    }
    return "?";
}

std::optional<PatternId> parse_pattern(std::string_view text)
{
    for (auto id : kAllPatterns) {
        if (to_string(id) == text) {
            return id;
        }
    }
    if (text == "NONE") {
        return PatternId::None;
    }
    return std::nullopt;
}

std::optional<Level> level_from_hz(int hz)
{
    for (auto level : {Level::Off, Level::Low, Level::Mid, Level::High}) {
        if (frequency_hz(level) == hz) {
            return level;
        }
    }
    return std::nullopt;
}

int PatternWave::active_ms() const
{
    int total = 0;
    for (const auto& frame : frames) {
        total += frame.duration_ms;
    }
    return total;
}

PatternId select_pattern(ShapeClass shape, RateClass rate)
{
    if (shape == ShapeClass::Regular) {
        return PatternId::None;
    }
    const bool extended = shape == ShapeClass::Extended;
    switch (rate) {
    case RateClass::Decreasing: return extended ? PatternId::ED : PatternId::CD;
    case RateClass::Increasing: return extended ? PatternId::EI : PatternId::CI;
    case RateClass::Constant: return extended ? PatternId::EC : PatternId::CC;
    }
    return PatternId::None;
}

namespace {

// Finger groups by distance from the middle finger (0-based indices).
constexpr std::array<std::array<int, 2>, 3> kRings{{{2, 2}, {1, 3}, {0, 4}}};

}  // namespace

PatternWave render_pattern(PatternId id)
{
    PatternWave wave;
    wave.id = id;
    if (id == PatternId::None) {
        return wave;
    }

    const bool extended = id == PatternId::ED || id == PatternId::EI || id == PatternId::EC;
    RateClass trend = RateClass::Constant;
    if (id == PatternId::CD || id == PatternId::ED) {
        trend = RateClass::Decreasing;
    } else if (id == PatternId::CI || id == PatternId::EI) {
        trend = RateClass::Increasing;
    }

    // Level by ring, middle (0) to sides (2).
    std::array<Level, 3> ring_level{Level::Mid, Level::Mid, Level::Mid};
    if (trend == RateClass::Increasing) {
        ring_level = {Level::Low, Level::Mid, Level::High};
    } else if (trend == RateClass::Decreasing) {
        ring_level = {Level::High, Level::Mid, Level::Low};
    }

    int t = 0;
    for (int step = 0; step < 3; ++step) {
        const int ring = extended ? step : 2 - step;
        TactileFrame frame;
        frame.start_ms = t;
        frame.fingers.fill(Level::Off);
        for (int finger : kRings[ring]) {
            frame.fingers[finger] = ring_level[ring];
        }
        frame.duration_ms = ring_level[ring] == Level::Low ? kLowPulseMs : kPulseMs;
        t += frame.duration_ms;
        wave.frames.push_back(frame);
    }
    return wave;
}

void TactileScheduler::update_metrics(const FormationMetrics& metrics)
{
    latest_ = select_pattern(metrics.shape, metrics.rate);
}

void TactileScheduler::start_wave(std::int64_t start_us)
{
    wave_id_ = next_wave_id_++;
    wave_pattern_ = latest_;
    wave_ = render_pattern(wave_pattern_);
    wave_start_us_ = start_us;
    wave_end_us_ = start_us + std::int64_t{wave_.period_ms()} * 1000;
    next_frame_ = 0;
}

std::vector<ScheduledFrame> TactileScheduler::advance(std::int64_t now_us)
{
    if (started_ && now_us < clock_us_) {
        throw StreamError(
            fmt::format("tactile clock went backwards: {} us after {} us", now_us, clock_us_));
    }
    if (!started_) {
        started_ = true;
        start_wave(now_us);
    }
    clock_us_ = now_us;

    std::vector<ScheduledFrame> out;
    for (;;) {
        while (next_frame_ < wave_.frames.size()) {
            const auto& frame = wave_.frames[next_frame_];
            const std::int64_t start = wave_start_us_ + std::int64_t{frame.start_ms} * 1000;
            if (start > now_us) {
                return out;
            }
            ScheduledFrame emitted;
            emitted.wave_id = wave_id_;
            emitted.pattern = wave_pattern_;
            emitted.frame_index = static_cast<int>(next_frame_);
            emitted.start_us = start;
            emitted.duration_ms = frame.duration_ms;
            emitted.fingers = frame.fingers;
            out.push_back(emitted);
            last_emitted_ = emitted;
            ++next_frame_;
        }
        if (wave_end_us_ > now_us) {
            return out;
        }
        start_wave(wave_end_us_);
    }
}

std::optional<ScheduledFrame> TactileScheduler::active_frame() const
{
    if (last_emitted_ && last_emitted_->start_us <= clock_us_ && clock_us_ < last_emitted_->end_us()) {
        return last_emitted_;
    }
    return std::nullopt;
}

std::optional<std::int64_t> TactileScheduler::next_event_us() const
{
    if (!started_) {
        return std::nullopt;
    }
    if (next_frame_ < wave_.frames.size()) {
        return wave_start_us_ + std::int64_t{wave_.frames[next_frame_].start_ms} * 1000;
    }
    return wave_end_us_;
}

void TactileScheduler::reset()
{
    *this = TactileScheduler{};
}

}  // namespace swarmguide
