#pragma once

#include <cmath>
#include <cstddef>

#include "cam/errors.hpp"
#include "cam/types.hpp"

namespace cam {

inline double dot(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size())
        throw ConsistencyError("embedding dimension mismatch: " +
                               std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Embedding& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

// Cosine of a zero vector against anything is defined as 0.
inline double cosine(const Embedding& a, const Embedding& b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline void l2_normalize(Embedding& a) {
    const double n = norm(a);
    if (n == 0.0) return;
    for (double& x : a) x /= n;
}

}  // namespace cam
