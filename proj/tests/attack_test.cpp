#include "mpcguard/attack.hpp"

#include <doctest.h>

#include <random>

using namespace mpcguard;

namespace {

AttackSegment segment(Channel c, TimeIndex start, TimeIndex end, AttackShape shape = AttackShape::step,
                      double magnitude = 0.1, std::size_t index = 0) {
    AttackSegment s;
    s.channel = c;
    s.start_step = start;
    s.end_step = end;
    s.shape = shape;
    s.magnitude = magnitude;
    s.target_index = index;
    return s;
}

}  // namespace

TEST_CASE("single-channel assumption") {
    CHECK(validate(AttackSchedule{}).ok);

    const AttackSchedule overlap{{segment(Channel::input, 100, 200), segment(Channel::output, 150, 250)}};
    const AttackValidation bad = validate(overlap);
    CHECK_FALSE(bad.ok);
    REQUIRE(bad.conflicting_steps.size() == 51);
    CHECK(bad.conflicting_steps.front() == 150);
    CHECK(bad.conflicting_steps.back() == 200);
    REQUIRE_FALSE(bad.messages.empty());
    CHECK(bad.messages.front().find("single-channel attack assumption") != std::string::npos);

    const AttackSchedule disjoint{{segment(Channel::input, 100, 200), segment(Channel::output, 201, 300)}};
    CHECK(validate(disjoint).ok);
}

TEST_CASE("malformed segments are reported") {
    CHECK_FALSE(validate(AttackSchedule{{segment(Channel::output, 10, 5)}}).ok);
    AttackSegment custom = segment(Channel::output, 0, 4, AttackShape::custom);
    custom.custom_values = {0.1, 0.2};
    CHECK_FALSE(validate(AttackSchedule{{custom}}).ok);
    custom.custom_values = {0.1, 0.2, 0.3, 0.4, 0.5};
    CHECK(validate(AttackSchedule{{custom}}).ok);
}

TEST_CASE("signal shapes") {
    const AttackSchedule step{{segment(Channel::output, 10, 20, AttackShape::step, -0.2, 1)}};
    CHECK(signal_at(step, 5, Channel::output, 2).isZero());
    const Vector inside = signal_at(step, 15, Channel::output, 2);
    CHECK(inside[0] == 0.0);
    CHECK(inside[1] == -0.2);
    CHECK(signal_at(step, 15, Channel::input, 1).isZero());
    CHECK(signal_at(step, 21, Channel::output, 2).isZero());

    const AttackSchedule ramp{{segment(Channel::input, 0, 100, AttackShape::ramp, 0.4)}};
    CHECK(signal_at(ramp, 50, Channel::input, 1)[0] == doctest::Approx(0.2));
    CHECK(signal_at(ramp, 0, Channel::input, 1)[0] == 0.0);
    CHECK(signal_at(ramp, 100, Channel::input, 1)[0] == doctest::Approx(0.4));

    AttackSegment custom = segment(Channel::output, 3, 5, AttackShape::custom);
    custom.custom_values = {0.1, -0.2, 0.3};
    const AttackSchedule c{{custom}};
    CHECK(signal_at(c, 4, Channel::output, 2)[0] == -0.2);

    CHECK_THROWS_AS(signal_at(AttackSchedule{{segment(Channel::output, 0, 5, AttackShape::step, 0.1, 2)}}, 1,
                              Channel::output, 2),
                    std::out_of_range);
}

TEST_CASE("corruption adds the channel signal and nothing else") {
    const AttackSchedule s{{segment(Channel::output, 10, 20, AttackShape::step, -0.3)}};
    State y(2);
    y << 0.8, 0.8;
    const State bad = corrupt_measurement(y, s, 12);
    CHECK(bad[0] == doctest::Approx(0.5));
    CHECK(bad[1] == 0.8);
    // Not clamped: the attacker controls the reported value.
    y << 0.1, 0.1;
    CHECK(corrupt_measurement(y, s, 12)[0] < 0.0);
    CHECK(corrupt_input(ControlInput::Constant(1, 0.3), s, 12)[0] == 0.3);

    const AttackSchedule none;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> uni(-1.0, 2.0);
    for (TimeIndex k = 0; k < 100; ++k) {
        State v(2);
        v << uni(rng), uni(rng);
        CHECK(corrupt_measurement(v, none, k) == v);
        const ControlInput u = ControlInput::Constant(1, uni(rng));
        CHECK(corrupt_input(u, none, k) == u);
    }
}

TEST_CASE("a valid schedule never attacks both channels at once") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<TimeIndex> start(0, 400), len(0, 100);
    for (int trial = 0; trial < 200; ++trial) {
        AttackSchedule s;
        for (int i = 0; i < 3; ++i) {
            const TimeIndex a = start(rng);
            s.segments.push_back(segment(i % 2 ? Channel::input : Channel::output, a, a + len(rng)));
        }
        if (!validate(s).ok) continue;
        for (TimeIndex k = 0; k < 520; ++k) {
            const bool in = !signal_at(s, k, Channel::input, 1).isZero();
            const bool out = !signal_at(s, k, Channel::output, 2).isZero();
            CHECK_FALSE((in && out));
        }
    }
}

TEST_CASE("names round-trip") {
    CHECK(channel_from_string(to_string(Channel::input)) == Channel::input);
    CHECK(shape_from_string(to_string(AttackShape::ramp)) == AttackShape::ramp);
    CHECK_THROWS_AS(channel_from_string("both"), std::invalid_argument);
    CHECK_THROWS_AS(shape_from_string("sine"), std::invalid_argument);
}
