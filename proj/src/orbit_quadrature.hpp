// Time-t flow of H0 along rotational orbits by inverting
// the time-of-flight integral t(phi) = int dphi / phidot.
//
// On the rotational branch phidot = D(phi) = sqrt(omega0^2 - 2 E G + G^2) > 0
// with G = gamma_x cos^2(phi), so 1/D is an analytic, pi-periodic function of
// phi. Its cosine series is exact up to aliasing, integrates term by term, and
// t(phi) is inverted by Newton with the exact derivative 1/D.

#pragma once

#include "spinrat/classical.hpp"

#include <optional>

namespace spinrat::detail {

// Returns nullopt when the point is not on the rotational branch of its
// energy or the series fails to converge; callers then fall back to the
// Runge-Kutta integrator.
std::optional<PhasePoint> quadrature_flow(const PhasePoint& p, double duration, const Coupling& c);

}  // namespace spinrat::detail
