#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rminmax {

using Rng = std::mt19937_64;

enum class ManifoldKind { kEuclidean, kSphere, kSpd, kProduct };

std::string to_string(ManifoldKind kind);

namespace detail {

// Shared payload layout for points and tangent vectors. Leaf manifolds keep
// their data in `leaf` (vectors as n x 1 columns, SPD as d x d); products keep
// one entry per factor in `parts`.
template <class Tag>
struct Element {
  Eigen::MatrixXd leaf;
  std::vector<Element> parts;

  Element() = default;
  explicit Element(Eigen::MatrixXd value) : leaf(std::move(value)) {}
  explicit Element(std::vector<Element> factors) : parts(std::move(factors)) {}

  bool is_product() const { return !parts.empty(); }

  bool operator==(const Element& other) const {
    if (parts.size() != other.parts.size()) return false;
    if (!is_product()) {
      return leaf.rows() == other.leaf.rows() &&
             leaf.cols() == other.leaf.cols() && leaf == other.leaf;
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!(parts[i] == other.parts[i])) return false;
    }
    return true;
  }
};

struct PointTag {};
struct TangentTag {};

}  // namespace detail

using Point = detail::Element<detail::PointTag>;
using Tangent = detail::Element<detail::TangentTag>;

Point make_point(const Eigen::VectorXd& v);
Point make_point(const Eigen::MatrixXd& m);
Tangent make_tangent(const Eigen::VectorXd& v);
Tangent make_tangent(const Eigen::MatrixXd& m);

// Vector-space operations on tangent payloads. Both operands must share the
// same base point; only the payload shapes are checked.
Tangent operator+(const Tangent& a, const Tangent& b);
Tangent operator-(const Tangent& a, const Tangent& b);
Tangent operator-(const Tangent& a);
Tangent operator*(double s, const Tangent& a);

namespace detail {
// Visible to argument-dependent lookup from any namespace.
using ::rminmax::operator+;
using ::rminmax::operator-;
using ::rminmax::operator*;
}  // namespace detail

// Largest absolute payload difference; shapes must agree.
double max_abs_diff(const Point& a, const Point& b);
double max_abs_diff(const Tangent& a, const Tangent& b);
bool all_finite(const Point& p);
bool all_finite(const Tangent& v);

/// A concrete Riemannian manifold together with the geometric constants the
/// solvers need: the sectional-curvature interval [kappa_min, kappa_max] and a
/// bound D on the diameter of the region of interest.
///
/// Descriptors are immutable values. Geometry kernels are const member
/// functions with no hidden state, so a descriptor can be shared freely.
///
/// Conventions:
///   * sphere(n) is the unit sphere in R^n (intrinsic dimension n - 1);
///   * spd(d) carries the affine-invariant metric tr(X^-1 U X^-1 V);
///   * product(...) uses the sum metric; its curvature interval is the hull of
///     the factors' intervals.
class Manifold {
 public:
  static Manifold euclidean(int n);
  static Manifold sphere(int ambient_dim);
  static Manifold spd(int d);
  static Manifold product(std::vector<Manifold> factors);

  // Returns a copy with a different curvature interval. Throws
  // std::invalid_argument if kappa_min > 0, kappa_min > kappa_max, or the
  // diameter bound exceeds pi / sqrt(kappa_max).
  Manifold with_curvature(double kappa_min, double kappa_max) const;
  Manifold with_diameter(double diameter) const;

  ManifoldKind kind() const { return kind_; }
  // Ambient size parameter: vector length, or matrix order for SPD.
  int size() const { return size_; }
  // Intrinsic dimension.
  int dim() const;
  double kappa_min() const { return kappa_min_; }
  double kappa_max() const { return kappa_max_; }
  double diameter_bound() const { return diameter_; }
  const std::vector<Manifold>& factors() const { return factors_; }
  std::string name() const;

  Point exp(const Point& x, const Tangent& v) const;
  Tangent log(const Point& x, const Point& y) const;
  Tangent transport(const Point& x, const Point& y, const Tangent& v) const;
  double inner(const Point& x, const Tangent& u, const Tangent& v) const;
  double norm(const Point& x, const Tangent& v) const;
  double distance(const Point& x, const Point& y) const;

  // Orthogonal projection (in the metric at x) of an ambient payload onto
  // T_x. For SPD this symmetrizes.
  Tangent project(const Point& x, const Tangent& ambient) const;
  Tangent zero_tangent(const Point& x) const;

  Point random_point(Rng& rng) const;
  // Isotropic Gaussian tangent with E||v||^2 = scale^2.
  Tangent random_tangent(const Point& x, Rng& rng, double scale) const;
  // Standard isotropic Gaussian in T_x: E||v||^2 = dim().
  Tangent standard_normal_tangent(const Point& x, Rng& rng) const;

  // Throws std::invalid_argument if `x` violates the point invariants.
  void check_point(const Point& x) const;
  void check_tangent(const Point& x, const Tangent& v) const;
  bool has_shape(const Point& x) const;
  bool has_shape(const Tangent& v) const;

  // Radius below which exp is injective; infinity for Hadamard factors.
  double injectivity_radius() const;

  bool operator==(const Manifold& other) const;

 private:
  Manifold(ManifoldKind kind, int size, double kmin, double kmax, double diam)
      : kind_(kind), size_(size), kappa_min_(kmin), kappa_max_(kmax),
        diameter_(diam) {}

  template <class E>
  void require_shape(const E& e, const char* what) const;

  ManifoldKind kind_;
  int size_;
  double kappa_min_;
  double kappa_max_;
  double diameter_;
  std::vector<Manifold> factors_;
};

// Haar-distributed random orthogonal matrix.
Eigen::MatrixXd random_orthogonal(int n, Rng& rng);

}  // namespace rminmax
