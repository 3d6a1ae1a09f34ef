#pragma once

#include <algorithm>
#include <cmath>

namespace psdet {

inline constexpr double kFocalClip = 1e-7;

/// Binary focal term -(1 - p_t)^gamma * log(p_t), p_t = p for positives, 1 - p otherwise.
inline double focal_term(double p, bool positive, double gamma) {
    p = std::clamp(p, kFocalClip, 1.0 - kFocalClip);
    const double pt = positive ? p : 1.0 - p;
    return -std::pow(1.0 - pt, gamma) * std::log(pt);
}

/// d(focal_term)/dp. Zero inside the clipped band.
inline double focal_term_derivative(double p, bool positive, double gamma) {
    if (p < kFocalClip || p > 1.0 - kFocalClip) return 0.0;
    const double pt = positive ? p : 1.0 - p;
    const double dpt = positive ? 1.0 : -1.0;
    double d = -std::pow(1.0 - pt, gamma) / pt;
    if (gamma != 0.0) d += gamma * std::pow(1.0 - pt, gamma - 1.0) * std::log(pt);
    return d * dpt;
}

}  // namespace psdet
