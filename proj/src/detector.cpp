#include "mpcguard/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpcguard {

Residual residual(const State& y, const State& ytilde, Norm norm, TimeIndex step) {
    if (y.size() != ytilde.size()) throw std::invalid_argument("residual: dimension mismatch");
    return {norm_of(y - ytilde, norm), step};
}

CusumState make_cusum(double delta, double gamma) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("detector.delta must be positive");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("detector.gamma must be positive");
    CusumState s;
    s.delta = delta;
    s.gamma = gamma;
    return s;
}

CusumState cusum_update(CusumState s, const Residual& r) {
    s.statistic = std::max(0.0, s.statistic + r.value - s.delta);
    s.last_value = s.statistic;
    if (s.statistic > s.gamma) {
        s.alarmed = true;
        s.alarm_step = r.step;
        s.statistic = 0.0;
    }
    return s;
}

bool stateless_check(const Residual& r, double gamma) { return r.value > gamma; }

}  // namespace mpcguard
