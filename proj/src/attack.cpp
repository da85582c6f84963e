#include "mpcguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <stdexcept>

namespace mpcguard {

std::string_view to_string(Channel channel) { return channel == Channel::input ? "input" : "output"; }

std::string_view to_string(AttackShape shape) {
    switch (shape) {
        case AttackShape::step: return "step";
        case AttackShape::ramp: return "ramp";
        case AttackShape::custom: return "custom";
    }
    return "unknown";
}

Channel channel_from_string(std::string_view name) {
    if (name == "input") return Channel::input;
    if (name == "output") return Channel::output;
    throw std::invalid_argument("unknown attack channel '" + std::string(name) + "' (expected input or output)");
}

AttackShape shape_from_string(std::string_view name) {
    if (name == "step") return AttackShape::step;
    if (name == "ramp") return AttackShape::ramp;
    if (name == "custom") return AttackShape::custom;
    throw std::invalid_argument("unknown attack shape '" + std::string(name) + "' (expected step, ramp or custom)");
}

double AttackSegment::value_at(TimeIndex k) const {
    if (!active_at(k)) return 0.0;
    switch (shape) {
        case AttackShape::step: return magnitude;
        case AttackShape::ramp:
            if (end_step == start_step) return magnitude;
            return magnitude * static_cast<double>(k - start_step) / static_cast<double>(end_step - start_step);
        case AttackShape::custom: {
            const auto offset = static_cast<std::size_t>(k - start_step);
            return offset < custom_values.size() ? custom_values[offset] : 0.0;
        }
    }
    return 0.0;
}

TimeIndex AttackSchedule::first_start() const {
    if (segments.empty()) return -1;
    TimeIndex first = segments.front().start_step;
    for (const auto& s : segments) first = std::min(first, s.start_step);
    return first;
}

AttackValidation validate(const AttackSchedule& schedule) {
    AttackValidation report;
    for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
        const auto& s = schedule.segments[i];
        const std::string tag = "attack segment " + std::to_string(i);
        if (s.start_step > s.end_step) {
            report.messages.push_back(tag + ": start " + std::to_string(s.start_step) + " is after end " +
                                      std::to_string(s.end_step));
        }
        if (s.start_step < 0) report.messages.push_back(tag + ": start must be nonnegative");
        if (!std::isfinite(s.magnitude)) report.messages.push_back(tag + ": magnitude must be finite");
        if (s.shape == AttackShape::custom && s.start_step <= s.end_step &&
            s.custom_values.size() != static_cast<std::size_t>(s.end_step - s.start_step + 1)) {
            report.messages.push_back(tag + ": custom shape needs " + std::to_string(s.end_step - s.start_step + 1) +
                                      " values, got " + std::to_string(s.custom_values.size()));
        }
    }

    std::vector<std::pair<TimeIndex, TimeIndex>> ranges;
    for (const auto& a : schedule.segments) {
        if (a.channel != Channel::input) continue;
        for (const auto& b : schedule.segments) {
            if (b.channel != Channel::output) continue;
            const TimeIndex lo = std::max(a.start_step, b.start_step);
            const TimeIndex hi = std::min(a.end_step, b.end_step);
            if (lo <= hi) ranges.emplace_back(lo, hi);
        }
    }
    std::sort(ranges.begin(), ranges.end());
    std::vector<std::pair<TimeIndex, TimeIndex>> merged;
    for (const auto& r : ranges) {
        if (!merged.empty() && r.first <= merged.back().second + 1) {
            merged.back().second = std::max(merged.back().second, r.second);
        } else {
            merged.push_back(r);
        }
    }
    for (const auto& [lo, hi] : merged) {
        for (TimeIndex k = lo; k <= hi && report.conflicting_steps.size() < kMaxListedConflicts; ++k) {
            report.conflicting_steps.push_back(k);
        }
    }
    if (!merged.empty()) {
        const TimeIndex last = merged.back().second;
        report.messages.push_back(
            "single-channel attack assumption violated: input and output both attacked from step " +
            std::to_string(merged.front().first) + " to " +
            (last == std::numeric_limits<TimeIndex>::max() ? std::string("the end of the run") : std::to_string(last)));
    }
    report.ok = report.messages.empty();
    return report;
}

Vector signal_at(const AttackSchedule& schedule, TimeIndex k, Channel channel, std::size_t dim) {
    Vector signal = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& s : schedule.segments) {
        if (s.channel != channel || !s.active_at(k)) continue;
        if (s.target_index >= dim) throw std::out_of_range("attack target index exceeds channel dimension");
        signal[static_cast<Eigen::Index>(s.target_index)] += s.value_at(k);
    }
    return signal;
}

State corrupt_measurement(const State& y_true, const AttackSchedule& schedule, TimeIndex k) {
    return y_true + signal_at(schedule, k, Channel::output, static_cast<std::size_t>(y_true.size()));
}

ControlInput corrupt_input(const ControlInput& u, const AttackSchedule& schedule, TimeIndex k) {
    return u + signal_at(schedule, k, Channel::input, static_cast<std::size_t>(u.size()));
}

}  // namespace mpcguard
