#include "rminmax/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rminmax {

namespace {

constexpr double kSeriesCutoff = 1e-4;
constexpr double kTciTol = 1e-8;
constexpr double kDegenerateSide = 1e-12;

void require_finite(double kappa, double c) {
  if (std::isnan(kappa) || !std::isfinite(c) || std::isinf(kappa)) {
    throw std::domain_error("curvature constant: non-finite input");
  }
  if (c < 0.0) throw std::domain_error("curvature constant: c must be >= 0");
}

}  // namespace

double xi_lower(double kappa_max, double c) {
  require_finite(kappa_max, c);
  if (kappa_max <= 0.0 || c == 0.0) return 1.0;
  const double z = c * std::sqrt(kappa_max);
  if (z >= std::numbers::pi) {
    throw std::domain_error("xi_lower: c must be below pi / sqrt(kappa_max)");
  }
  // z cot z = 1 - z^2/3 - z^4/45 - ...
  if (z < kSeriesCutoff) {
    const double z2 = z * z;
    return 1.0 - z2 / 3.0 - z2 * z2 / 45.0;
  }
  return z / std::tan(z);
}

double xi_upper(double kappa_min, double c) {
  require_finite(kappa_min, c);
  if (kappa_min >= 0.0 || c == 0.0) return 1.0;
  const double z = c * std::sqrt(-kappa_min);
  // z coth z = 1 + z^2/3 - z^4/45 + ...
  if (z < kSeriesCutoff) {
    const double z2 = z * z;
    return 1.0 + z2 / 3.0 - z2 * z2 / 45.0;
  }
  return z / std::tanh(z);
}

double tau(double kappa_min, double kappa_max, double c) {
  if (kappa_min > kappa_max) {
    throw std::domain_error("tau: kappa_min must not exceed kappa_max");
  }
  return xi_upper(kappa_min, c) / xi_lower(kappa_max, c);
}

CurvatureConstants curvature_constants(double kappa_min, double kappa_max,
                                       double diameter) {
  CurvatureConstants k;
  k.at_diameter = diameter;
  k.xi_lower_0 = xi_lower(kappa_max, diameter);
  k.xi_upper_0 = xi_upper(kappa_min, diameter);
  k.tau_0 = k.xi_upper_0 / k.xi_lower_0;
  return k;
}

CurvatureConstants curvature_constants(const Manifold& m_min,
                                       const Manifold& m_max, double diameter) {
  return curvature_constants(std::min(m_min.kappa_min(), m_max.kappa_min()),
                             std::max(m_min.kappa_max(), m_max.kappa_max()),
                             diameter);
}

GeodesicTriangle make_triangle(const Manifold& m, Point p, Point q, Point r) {
  GeodesicTriangle tri;
  const Tangent to_q = m.log(p, q);
  const Tangent to_r = m.log(p, r);
  tri.c = m.norm(p, to_q);
  tri.b = m.norm(p, to_r);
  tri.a = m.distance(q, r);
  if (tri.b < kDegenerateSide || tri.c < kDegenerateSide) {
    tri.angle = 0.0;
  } else {
    const double cosine = m.inner(p, to_q, to_r) / (tri.b * tri.c);
    tri.angle = std::acos(std::clamp(cosine, -1.0, 1.0));
  }
  tri.p = std::move(p);
  tri.q = std::move(q);
  tri.r = std::move(r);
  return tri;
}

namespace {

TciReport evaluate(double xi, const GeodesicTriangle& tri, bool lower) {
  TciReport rep;
  const bool degenerate = tri.b < kDegenerateSide || tri.c < kDegenerateSide;
  // A vanishing side turns both bounds into the identity a = b or a = c.
  if (degenerate) xi = 1.0;
  rep.lhs = tri.a * tri.a;
  rep.rhs = xi * tri.b * tri.b + tri.c * tri.c -
            2.0 * tri.b * tri.c * std::cos(tri.angle);
  rep.slack = lower ? rep.lhs - rep.rhs : rep.rhs - rep.lhs;
  if (degenerate) {
    rep.satisfied = true;
    return rep;
  }
  rep.satisfied = rep.slack >= -kTciTol;
  return rep;
}

}  // namespace

TciReport tci_holds_lower(const Manifold& m, const GeodesicTriangle& tri) {
  return evaluate(xi_lower(m.kappa_max(), std::max({tri.a, tri.b, tri.c})),
                  tri, true);
}

TciReport tci_holds_upper(const Manifold& m, const GeodesicTriangle& tri) {
  return evaluate(xi_upper(m.kappa_min(), tri.c), tri, false);
}

}  // namespace rminmax
