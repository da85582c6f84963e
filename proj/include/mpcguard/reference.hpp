#pragma once

#include "mpcguard/nmpc.hpp"

#include <deque>

namespace mpcguard {

/// Self-generated reference trajectory ytilde_k, indexed by absolute step.
///
/// Holds a contiguous window [first_index(), last_index()]. The closed loop
/// reads ytilde_k for the detector, solves, then publishes ytilde_{k+N}; the
/// push evicts everything older than k. Not synchronized; the owner
/// serializes access.
class ReferenceBuffer {
public:
    /// Seeds ytilde_0 = y0 and ytilde_1..N from an unconstrained-by-proximity
    /// solve from y0. Throws std::runtime_error if that solve ends infeasible.
    static ReferenceBuffer init(const PlantModel& model, const MpcConfig& cfg, const State& y0);

    /// Builds a buffer directly from consecutive entries starting at `first`.
    ReferenceBuffer(int horizon, TimeIndex first, std::vector<State> entries);

    /// Stores ytilde_{k+N}. The index must extend the window by one, or replace
    /// the provisional last entry seeded by init() (first push only).
    /// Throws std::logic_error otherwise.
    void push(TimeIndex k, const State& y_star);

    /// Stored ytilde_k; throws std::logic_error outside the window.
    const State& get(TimeIndex k) const;

    /// ytilde_{k+1} ... ytilde_{k+count} (count defaults to the horizon).
    std::vector<State> window(TimeIndex k) const;
    std::vector<State> window(TimeIndex k, int count) const;

    bool contains(TimeIndex k) const { return k >= first_ && k <= last_index(); }
    TimeIndex first_index() const { return first_; }
    TimeIndex last_index() const { return first_ + static_cast<TimeIndex>(entries_.size()) - 1; }
    int horizon() const { return horizon_; }
    std::size_t size() const { return entries_.size(); }

    /// Result of the seeding solve (useful as a warm start).
    const SolveResult& seed() const { return seed_; }

private:
    int horizon_;
    TimeIndex first_;
    std::deque<State> entries_;
    bool seeded_last_provisional_ = false;
    SolveResult seed_;
};

}  // namespace mpcguard
