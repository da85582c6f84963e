#include "mpcguard/reference.hpp"

#include <stdexcept>
#include <string>

namespace mpcguard {

ReferenceBuffer ReferenceBuffer::init(const PlantModel& model, const MpcConfig& cfg, const State& y0) {
    if (!cfg.state_box.contains(y0)) throw std::invalid_argument("reference init: y0 outside the state box");
    MpcConfig original = cfg;
    original.proximity.reset();
    SolveResult seed = solve(original, model, y0);
    if (seed.status == SolveStatus::infeasible_relaxed) {
        throw std::runtime_error("reference init: no feasible trajectory from the initial output (violation " +
                                 std::to_string(seed.constraint_violation) + ")");
    }
    std::vector<State> entries;
    entries.reserve(seed.predicted_outputs.size() + 1);
    entries.push_back(y0);
    for (const auto& y : seed.predicted_outputs) entries.push_back(cfg.state_box.project(y));
    ReferenceBuffer buf(cfg.horizon, 0, std::move(entries));
    buf.seeded_last_provisional_ = true;
    buf.seed_ = std::move(seed);
    return buf;
}

ReferenceBuffer::ReferenceBuffer(int horizon, TimeIndex first, std::vector<State> entries)
    : horizon_(horizon), first_(first), entries_(entries.begin(), entries.end()) {
    if (horizon_ < 1) throw std::invalid_argument("reference buffer horizon must be positive");
    if (entries_.empty()) throw std::invalid_argument("reference buffer needs at least one entry");
}

void ReferenceBuffer::push(TimeIndex k, const State& y_star) {
    const TimeIndex index = k + horizon_;
    if (index == last_index() + 1) {
        entries_.push_back(y_star);
    } else if (index == last_index() && seeded_last_provisional_) {
        entries_.back() = y_star;
    } else {
        throw std::logic_error("reference push for step " + std::to_string(index) +
                               " is not contiguous with window ending at " + std::to_string(last_index()));
    }
    seeded_last_provisional_ = false;
    while (first_ < k && entries_.size() > 1) {
        entries_.pop_front();
        ++first_;
    }
}

const State& ReferenceBuffer::get(TimeIndex k) const {
    if (!contains(k)) {
        throw std::logic_error("reference step " + std::to_string(k) + " outside window [" +
                               std::to_string(first_) + ", " + std::to_string(last_index()) + "]");
    }
    return entries_[static_cast<std::size_t>(k - first_)];
}

std::vector<State> ReferenceBuffer::window(TimeIndex k) const { return window(k, horizon_); }

std::vector<State> ReferenceBuffer::window(TimeIndex k, int count) const {
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int j = 1; j <= count; ++j) out.push_back(get(k + j));
    return out;
}

}  // namespace mpcguard
