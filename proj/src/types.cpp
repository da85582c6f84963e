#include "mpcguard/types.hpp"

#include <stdexcept>
#include <string>

namespace mpcguard {

double norm_of(const Vector& v, Norm norm) {
    if (v.size() == 0) return 0.0;
    switch (norm) {
        case Norm::euclidean: return v.norm();
        case Norm::infinity: return v.cwiseAbs().maxCoeff();
    }
    throw std::invalid_argument("unknown norm");
}

std::string_view to_string(Norm norm) {
    return norm == Norm::euclidean ? "l2" : "linf";
}

Norm norm_from_string(std::string_view name) {
    if (name == "l2" || name == "euclidean" || name == "2") return Norm::euclidean;
    if (name == "linf" || name == "infinity" || name == "inf") return Norm::infinity;
    throw std::invalid_argument("unknown norm '" + std::string(name) + "' (expected l2 or linf)");
}

BoxSet::BoxSet(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) throw std::invalid_argument("box bounds differ in dimension");
    if (!all_finite(lower) || !all_finite(upper)) throw std::invalid_argument("box bounds must be finite");
    if ((lower.array() > upper.array()).any()) throw std::invalid_argument("box lower bound exceeds upper bound");
}

bool BoxSet::contains(const Vector& v, double tol) const {
    if (v.size() != lower.size()) return false;
    return ((v.array() >= lower.array() - tol) && (v.array() <= upper.array() + tol)).all();
}

Vector BoxSet::project(const Vector& v) const {
    return v.cwiseMax(lower).cwiseMin(upper);
}

double BoxSet::violation(const Vector& v) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        worst = std::max({worst, lower[i] - v[i], v[i] - upper[i]});
    }
    return worst;
}

bool all_finite(const Vector& v) {
    return v.allFinite();
}

}  // namespace mpcguard
