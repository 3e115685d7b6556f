#pragma once

#include "rminmax/manifold.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace rminmax {

struct GradPair {
  Tangent x;
  Tangent y;
};

struct ProblemConstants {
  double ell = 0.0;    // geodesic smoothness
  double big_l = 0.0;  // geodesic Lipschitz constant
  double mu = 0.0;     // strong convexity / concavity modulus
  double sigma = 0.0;  // oracle noise bound
};

/// min over x in `m_min`, max over y in `m_max` of value(x, y).
///
/// Solvers descend in the first slot and ascend in the second; problems whose
/// natural statement is max-min are registered with their variables swapped
/// into this orientation rather than negated.
struct SaddleProblem {
  std::string name;
  Manifold m_min = Manifold::euclidean(1);
  Manifold m_max = Manifold::euclidean(1);
  std::function<double(const Point&, const Point&)> value;
  std::function<GradPair(const Point&, const Point&)> grad;
  // Optional unbiased estimator of `grad`. Owns its own randomness.
  std::function<GradPair(const Point&, const Point&)> stochastic_grad;
  // Data passes charged per call of each oracle.
  double grad_pass_cost = 1.0;
  double stochastic_pass_cost = 1.0;
  ProblemConstants constants;
  // Exact saddle when it is known in closed form.
  std::optional<std::pair<Point, Point>> known_saddle;
};

}  // namespace rminmax
