#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "shellopt/error.hpp"
#include "shellopt/mesh/cell_mesh.hpp"

namespace shellopt {

using Triple = std::array<double, 3>;

/// Triangle geometry needed by the cell model: side lengths, heights and area.
struct SubcellGeometry {
    Triple l{};
    Triple a{};
    double area = 0.0;

    static SubcellGeometry from(const Subcell& s) { return {s.l, s.a, s.area}; }
};

inline constexpr double kFillTolerance = 1e-9;

inline const std::array<std::array<int, 3>, 6>& permutations3() {
    static const std::array<std::array<int, 3>, 6> p = {
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    return p;
}

/// Volume of the three stacked trapezoids for one ordering (i, j, k).
inline double ordered_volume(double area, const Triple& y, const Triple& h, const std::array<int, 3>& p) {
    const int i = p[0], j = p[1], k = p[2];
    return area * ((2 - y[i]) * y[i] * h[i] + (2 - 2 * y[i] - y[j]) * y[j] * h[j] +
                   (2 - 2 * y[i] - 2 * y[j] - y[k]) * y[k] * h[k]);
}

/// Same as volume_exact without the argument checks.
inline double cell_volume(double area, const Triple& y, const Triple& h) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& p : permutations3()) v = std::max(v, ordered_volume(area, y, h, p));
    return v;
}

/// Exact volume of a subcell with normalized widths y and thicknesses h.
inline double volume_exact(const SubcellGeometry& g, const Triple& y, const Triple& h) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (!(y[i] >= -kFillTolerance)) throw ParameterError("negative normalized width " + std::to_string(y[i]));
        if (!(h[i] >= 0.0) || !std::isfinite(h[i])) throw ParameterError("invalid thickness " + std::to_string(h[i]));
        sum += y[i];
    }
    if (!(sum <= 1.0 + kFillTolerance)) {
        throw ParameterError("normalized widths sum to " + std::to_string(sum) + " > 1");
    }
    if (!(g.area > 0.0)) throw ParameterError("subcell area must be positive");
    return cell_volume(g.area, y, h);
}

/// Sum of w h l over the three blocks (overlaps counted twice).
inline double thin_beam_volume(const SubcellGeometry& g, const Triple& y, const Triple& h) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += y[i] * g.a[i] * h[i] * g.l[i];
    return v;
}

}  // namespace shellopt
