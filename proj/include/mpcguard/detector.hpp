#pragma once

#include "mpcguard/types.hpp"

#include <optional>

namespace mpcguard {

struct Residual {
    double value = 0.0;
    TimeIndex step = 0;
};

/// r_k = ||y_k - ytilde_k|| in the chosen norm.
Residual residual(const State& y, const State& ytilde, Norm norm, TimeIndex step = 0);

/// Nonparametric CUSUM: S <- max(0, S + r - delta); alarm when S > gamma,
/// after which S restarts from 0.
struct CusumState {
    double statistic = 0.0;
    // Value produced by the latest update before any restart; equals
    // `statistic` unless that update raised an alarm.
    double last_value = 0.0;
    double delta = 0.01;
    double gamma = 0.1;
    bool alarmed = false;
    std::optional<TimeIndex> alarm_step;  // step of the most recent alarm
};

CusumState make_cusum(double delta, double gamma);

CusumState cusum_update(CusumState s, const Residual& r);

/// Single-sample threshold test: r > gamma.
bool stateless_check(const Residual& r, double gamma);

}  // namespace mpcguard
