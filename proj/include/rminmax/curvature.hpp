#pragma once

#include "rminmax/manifold.hpp"

namespace rminmax {

// Lower comparison constant for curvature bounded above by kappa:
// 1 for kappa <= 0, c sqrt(kappa) cot(c sqrt(kappa)) otherwise.
// Throws std::domain_error when c >= pi / sqrt(kappa).
double xi_lower(double kappa_max, double c);

// Upper comparison constant for curvature bounded below by kappa:
// 1 for kappa >= 0, c sqrt(-kappa) coth(c sqrt(-kappa)) otherwise.
double xi_upper(double kappa_min, double c);

// xi_upper(kappa_min, c) / xi_lower(kappa_max, c) >= 1.
double tau(double kappa_min, double kappa_max, double c);

struct CurvatureConstants {
  double xi_lower_0 = 1.0;
  double xi_upper_0 = 1.0;
  double tau_0 = 1.0;
  double at_diameter = 0.0;
};

CurvatureConstants curvature_constants(double kappa_min, double kappa_max,
                                       double diameter);

// Uses the hull of both manifolds' curvature intervals.
CurvatureConstants curvature_constants(const Manifold& m_min,
                                       const Manifold& m_max, double diameter);

/// Triangle p, q, r with the angle A at p. Side b = d(p, r) and c = d(p, q)
/// meet at A; a = d(q, r) is opposite.
struct GeodesicTriangle {
  Point p, q, r;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double angle = 0.0;
};

// Sides from distances, angle from Log_p(q) and Log_p(r). A degenerate
// vertex (adjacent side below 1e-12) gets angle 0.
GeodesicTriangle make_triangle(const Manifold& m, Point p, Point q, Point r);

struct TciReport {
  double lhs = 0.0;  // a^2
  double rhs = 0.0;  // xi * b^2 + c^2 - 2 b c cos A
  // Signed margin in the direction of the inequality; negative when violated.
  double slack = 0.0;
  bool satisfied = true;
};

// a^2 >= xi_lower(kappa_max, D) b^2 + c^2 - 2bc cos A, with 1e-8 tolerance,
// where D = max(a, b, c) is the diameter of the triangle. With D replaced by
// the side c the bound fails on the sphere; see the curvature tests.
TciReport tci_holds_lower(const Manifold& m, const GeodesicTriangle& tri);
// a^2 <= xi_upper(kappa_min, c) b^2 + c^2 - 2bc cos A, with 1e-8 tolerance.
TciReport tci_holds_upper(const Manifold& m, const GeodesicTriangle& tri);

}  // namespace rminmax
