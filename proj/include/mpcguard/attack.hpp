#pragma once

#include "mpcguard/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace mpcguard {

enum class Channel { input, output };
enum class AttackShape { step, ramp, custom };

std::string_view to_string(Channel channel);
std::string_view to_string(AttackShape shape);
Channel channel_from_string(std::string_view name);
AttackShape shape_from_string(std::string_view name);

/// Additive false-data signal on one component of one channel, active on the
/// closed interval [start_step, end_step].
struct AttackSegment {
    Channel channel = Channel::output;
    std::size_t target_index = 0;
    TimeIndex start_step = 0;
    TimeIndex end_step = 0;
    AttackShape shape = AttackShape::step;
    double magnitude = 0.0;             // step height, or ramp value at end_step
    std::vector<double> custom_values;  // one value per active step for custom

    bool active_at(TimeIndex k) const { return k >= start_step && k <= end_step; }
    double value_at(TimeIndex k) const;
};

struct AttackSchedule {
    std::vector<AttackSegment> segments;

    bool empty() const { return segments.empty(); }
    /// Earliest start step, or -1 for an empty schedule.
    TimeIndex first_start() const;
};

inline constexpr std::size_t kMaxListedConflicts = 10000;

struct AttackValidation {
    bool ok = true;
    // Steps where both an input and an output segment are active, in order,
    // truncated after kMaxListedConflicts entries.
    std::vector<TimeIndex> conflicting_steps;
    std::vector<std::string> messages;
};

/// Checks segment well-formedness and that no step attacks both channels.
AttackValidation validate(const AttackSchedule& schedule);

/// Sum of the active segments on `channel` at step k, as a vector of `dim` entries.
Vector signal_at(const AttackSchedule& schedule, TimeIndex k, Channel channel, std::size_t dim);

/// y_k = x_k + y^a_k. Measurements are not clamped.
State corrupt_measurement(const State& y_true, const AttackSchedule& schedule, TimeIndex k);

/// u_k + u^a_k, before actuator saturation.
ControlInput corrupt_input(const ControlInput& u, const AttackSchedule& schedule, TimeIndex k);

}  // namespace mpcguard
