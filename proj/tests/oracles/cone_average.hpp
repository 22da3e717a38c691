#pragma once

// Rotation average of the cone [r - |x - c|]_+ in R^3 about the x3 axis, for a
// center c at distance a from the axis, with the continuous circle measure.
// Everything reduces to cylindrical coordinates (rho, z) relative to c.

#include <algorithm>
#include <cmath>

#include "oracles/quadrature.hpp"

namespace oracle {

inline double cone_average(double rho, double z, double a, double r) {
  auto cone = [&](double th) {
    const double d2 = rho * rho + a * a - 2 * rho * a * std::cos(th) + z * z;
    return std::max(0.0, r - std::sqrt(d2));
  };
  // symmetric in theta -> -theta
  return integrate_panels(cone, 0.0, M_PI, 8, 1e-10) / M_PI;
}

// int_{R^3} psi^q over the solid torus that carries it.
inline double cone_average_power(double a, double r, double q) {
  auto slab = [&](double z) {
    return integrate_panels([&](double rho) { return 2 * M_PI * rho * std::pow(cone_average(rho, z, a, r), q); },
                            std::max(0.0, a - r), a + r, 8, 1e-8);
  };
  return 2 * integrate_panels(slab, 0.0, r, 4, 1e-7);
}

}  // namespace oracle
