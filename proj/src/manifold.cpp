#include "rminmax/manifold.hpp"

#include "rminmax/errors.hpp"
#include "rminmax/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rminmax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
constexpr double kUnitTol = 1e-10;
constexpr double kAntipodalTol = 1e-12;

Eigen::MatrixXd gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // Explicit loop order keeps the draw sequence independent of Eigen's
  // traversal order.
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

template <class E>
E combine(const E& a, const E& b, double sa, double sb) {
  if (a.parts.size() != b.parts.size()) {
    throw std::invalid_argument("tangent arithmetic: structure mismatch");
  }
  if (!a.is_product()) {
    if (a.leaf.rows() != b.leaf.rows() || a.leaf.cols() != b.leaf.cols()) {
      throw std::invalid_argument("tangent arithmetic: shape mismatch");
    }
    return E(Eigen::MatrixXd(sa * a.leaf + sb * b.leaf));
  }
  std::vector<E> parts;
  parts.reserve(a.parts.size());
  for (std::size_t i = 0; i < a.parts.size(); ++i) {
    parts.push_back(combine(a.parts[i], b.parts[i], sa, sb));
  }
  return E(std::move(parts));
}

template <class E>
E scaled(const E& a, double s) {
  if (!a.is_product()) return E(Eigen::MatrixXd(s * a.leaf));
  std::vector<E> parts;
  parts.reserve(a.parts.size());
  for (const auto& p : a.parts) parts.push_back(scaled(p, s));
  return E(std::move(parts));
}

template <class E>
double diff_impl(const E& a, const E& b) {
  if (a.parts.size() != b.parts.size()) {
    throw std::invalid_argument("max_abs_diff: structure mismatch");
  }
  if (!a.is_product()) {
    if (a.leaf.rows() != b.leaf.rows() || a.leaf.cols() != b.leaf.cols()) {
      throw std::invalid_argument("max_abs_diff: shape mismatch");
    }
    if (a.leaf.size() == 0) return 0.0;
    return (a.leaf - b.leaf).cwiseAbs().maxCoeff();
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.parts.size(); ++i) {
    m = std::max(m, diff_impl(a.parts[i], b.parts[i]));
  }
  return m;
}

template <class E>
bool finite_impl(const E& a) {
  if (!a.is_product()) return a.leaf.allFinite();
  return std::all_of(a.parts.begin(), a.parts.end(),
                     [](const E& p) { return finite_impl(p); });
}

Eigen::VectorXd col(const Eigen::MatrixXd& m) { return m.col(0); }

}  // namespace

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::kEuclidean: return "euclidean";
    case ManifoldKind::kSphere: return "sphere";
    case ManifoldKind::kSpd: return "spd";
    case ManifoldKind::kProduct: return "product";
  }
  return "unknown";
}

Point make_point(const Eigen::VectorXd& v) { return Point(Eigen::MatrixXd(v)); }
Point make_point(const Eigen::MatrixXd& m) { return Point(m); }
Tangent make_tangent(const Eigen::VectorXd& v) {
  return Tangent(Eigen::MatrixXd(v));
}
Tangent make_tangent(const Eigen::MatrixXd& m) { return Tangent(m); }

Tangent operator+(const Tangent& a, const Tangent& b) {
  return combine(a, b, 1.0, 1.0);
}
Tangent operator-(const Tangent& a, const Tangent& b) {
  return combine(a, b, 1.0, -1.0);
}
Tangent operator-(const Tangent& a) { return scaled(a, -1.0); }
Tangent operator*(double s, const Tangent& a) { return scaled(a, s); }

double max_abs_diff(const Point& a, const Point& b) { return diff_impl(a, b); }
double max_abs_diff(const Tangent& a, const Tangent& b) {
  return diff_impl(a, b);
}
bool all_finite(const Point& p) { return finite_impl(p); }
bool all_finite(const Tangent& v) { return finite_impl(v); }

// ---------------------------------------------------------------------------
// Construction

Manifold Manifold::euclidean(int n) {
  if (n < 1) throw std::invalid_argument("euclidean: dimension must be >= 1");
  return Manifold(ManifoldKind::kEuclidean, n, 0.0, 0.0, kInf);
}

Manifold Manifold::sphere(int ambient_dim) {
  if (ambient_dim < 2) {
    throw std::invalid_argument("sphere: ambient dimension must be >= 2");
  }
  // kappa_min is pinned at 0 so the interval contains 0, as the comparison
  // inequalities require.
  return Manifold(ManifoldKind::kSphere, ambient_dim, 0.0, 1.0, kPi);
}

Manifold Manifold::spd(int d) {
  if (d < 1) throw std::invalid_argument("spd: order must be >= 1");
  // Affine-invariant metric: sectional curvature in [-1/2, 0].
  return Manifold(ManifoldKind::kSpd, d, d == 1 ? 0.0 : -0.5, 0.0, kInf);
}

Manifold Manifold::product(std::vector<Manifold> factors) {
  if (factors.empty()) throw std::invalid_argument("product: no factors");
  double kmin = 0.0;
  double kmax = -kInf;
  double diam2 = 0.0;
  for (const auto& f : factors) {
    kmin = std::min(kmin, f.kappa_min_);
    kmax = std::max(kmax, f.kappa_max_);
    diam2 += f.diameter_ * f.diameter_;
  }
  double diam = std::sqrt(diam2);
  if (kmax > 0.0) diam = std::min(diam, kPi / std::sqrt(kmax));
  Manifold m(ManifoldKind::kProduct, static_cast<int>(factors.size()), kmin,
             kmax, diam);
  m.factors_ = std::move(factors);
  return m;
}

Manifold Manifold::with_curvature(double kappa_min, double kappa_max) const {
  if (!(kappa_min <= 0.0) || !(kappa_min <= kappa_max) ||
      !std::isfinite(kappa_min) || std::isnan(kappa_max)) {
    throw std::invalid_argument(
        "curvature interval must satisfy kappa_min <= 0 and kappa_min <= "
        "kappa_max");
  }
  Manifold m = *this;
  m.kappa_min_ = kappa_min;
  m.kappa_max_ = kappa_max;
  if (kappa_max > 0.0) {
    m.diameter_ = std::min(m.diameter_, kPi / std::sqrt(kappa_max));
  }
  return m;
}

Manifold Manifold::with_diameter(double diameter) const {
  if (!(diameter > 0.0)) {
    throw std::invalid_argument("diameter bound must be positive");
  }
  if (kappa_max_ > 0.0 && diameter > kPi / std::sqrt(kappa_max_) * (1 + 1e-15)) {
    throw std::invalid_argument(
        "diameter bound exceeds pi / sqrt(kappa_max)");
  }
  Manifold m = *this;
  m.diameter_ = diameter;
  return m;
}

int Manifold::dim() const {
  switch (kind_) {
    case ManifoldKind::kEuclidean: return size_;
    case ManifoldKind::kSphere: return size_ - 1;
    case ManifoldKind::kSpd: return size_ * (size_ + 1) / 2;
    case ManifoldKind::kProduct: {
      int d = 0;
      for (const auto& f : factors_) d += f.dim();
      return d;
    }
  }
  return 0;
}

std::string Manifold::name() const {
  if (kind_ != ManifoldKind::kProduct) {
    return to_string(kind_) + "(" + std::to_string(size_) + ")";
  }
  std::string s = "product(";
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) s += ",";
    s += factors_[i].name();
  }
  return s + ")";
}

bool Manifold::operator==(const Manifold& other) const {
  return kind_ == other.kind_ && size_ == other.size_ &&
         kappa_min_ == other.kappa_min_ && kappa_max_ == other.kappa_max_ &&
         diameter_ == other.diameter_ && factors_ == other.factors_;
}

double Manifold::injectivity_radius() const {
  switch (kind_) {
    case ManifoldKind::kSphere: return kPi;
    case ManifoldKind::kProduct: {
      double r = kInf;
      for (const auto& f : factors_) r = std::min(r, f.injectivity_radius());
      return r;
    }
    default: return kInf;
  }
}

// ---------------------------------------------------------------------------
// Validation

template <class E>
void Manifold::require_shape(const E& e, const char* what) const {
  if (!has_shape(e)) {
    throw std::invalid_argument(std::string(what) + ": payload does not match " +
                                name());
  }
}

bool Manifold::has_shape(const Point& x) const {
  if (kind_ == ManifoldKind::kProduct) {
    if (x.parts.size() != factors_.size()) return false;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (!factors_[i].has_shape(x.parts[i])) return false;
    }
    return true;
  }
  if (x.is_product()) return false;
  if (kind_ == ManifoldKind::kSpd) {
    return x.leaf.rows() == size_ && x.leaf.cols() == size_;
  }
  return x.leaf.rows() == size_ && x.leaf.cols() == 1;
}

bool Manifold::has_shape(const Tangent& v) const {
  if (kind_ == ManifoldKind::kProduct) {
    if (v.parts.size() != factors_.size()) return false;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (!factors_[i].has_shape(v.parts[i])) return false;
    }
    return true;
  }
  if (v.is_product()) return false;
  if (kind_ == ManifoldKind::kSpd) {
    return v.leaf.rows() == size_ && v.leaf.cols() == size_;
  }
  return v.leaf.rows() == size_ && v.leaf.cols() == 1;
}

void Manifold::check_point(const Point& x) const {
  require_shape(x, "check_point");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      if (!x.leaf.allFinite()) throw NumericError("non-finite point");
      return;
    case ManifoldKind::kSphere:
      if (!x.leaf.allFinite()) throw NumericError("non-finite point");
      if (std::abs(x.leaf.norm() - 1.0) > kUnitTol) {
        throw std::invalid_argument("sphere point must have unit norm");
      }
      return;
    case ManifoldKind::kSpd:
      if (!x.leaf.allFinite()) throw NumericError("non-finite point");
      spd::require_spd(x.leaf, "spd point");
      return;
    case ManifoldKind::kProduct:
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        factors_[i].check_point(x.parts[i]);
      }
      return;
  }
}

void Manifold::check_tangent(const Point& x, const Tangent& v) const {
  require_shape(x, "check_tangent");
  require_shape(v, "check_tangent");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      if (!v.leaf.allFinite()) throw NumericError("non-finite tangent");
      return;
    case ManifoldKind::kSphere: {
      if (!v.leaf.allFinite()) throw NumericError("non-finite tangent");
      const double n = v.leaf.norm();
      if (std::abs(x.leaf.col(0).dot(v.leaf.col(0))) >
          kUnitTol * std::max(1.0, n)) {
        throw std::invalid_argument("sphere tangent must be orthogonal to base");
      }
      return;
    }
    case ManifoldKind::kSpd: {
      if (!v.leaf.allFinite()) throw NumericError("non-finite tangent");
      const double n = v.leaf.norm();
      if ((v.leaf - v.leaf.transpose()).norm() > kUnitTol * std::max(1.0, n)) {
        throw std::invalid_argument("spd tangent must be symmetric");
      }
      return;
    }
    case ManifoldKind::kProduct:
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        factors_[i].check_tangent(x.parts[i], v.parts[i]);
      }
      return;
  }
}

// ---------------------------------------------------------------------------
// Geometry kernels

Point Manifold::exp(const Point& x, const Tangent& v) const {
  check_tangent(x, v);
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return Point(Eigen::MatrixXd(x.leaf + v.leaf));
    case ManifoldKind::kSphere: {
      const Eigen::VectorXd p = col(x.leaf);
      const Eigen::VectorXd u = col(v.leaf);
      const double t = u.norm();
      if (t == 0.0) return x;
      Eigen::VectorXd y = std::cos(t) * p + (std::sin(t) / t) * u;
      y /= y.norm();
      return make_point(y);
    }
    case ManifoldKind::kSpd:
      return Point(spd::Frame(x.leaf).exp(v.leaf));
    case ManifoldKind::kProduct: {
      std::vector<Point> parts;
      parts.reserve(factors_.size());
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        parts.push_back(factors_[i].exp(x.parts[i], v.parts[i]));
      }
      return Point(std::move(parts));
    }
  }
  throw std::logic_error("unreachable");
}

namespace {

// Unit direction and angle of the sphere geodesic from p to q. theta uses
// atan2 of the orthogonal and parallel components, which stays accurate for
// nearly coincident points.
void sphere_direction(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                      Eigen::VectorXd* dir, double* theta) {
  const double c = std::clamp(p.dot(q), -1.0, 1.0);
  if (c <= -1.0 + kAntipodalTol) {
    throw GeodesicNotUnique("sphere: antipodal points have no unique geodesic");
  }
  Eigen::VectorXd w = q - c * p;
  const double s = w.norm();
  *theta = std::atan2(s, c);
  if (s == 0.0) {
    *dir = Eigen::VectorXd::Zero(p.size());
  } else {
    *dir = w / s;
  }
}

}  // namespace

Tangent Manifold::log(const Point& x, const Point& y) const {
  require_shape(x, "log");
  require_shape(y, "log");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return Tangent(Eigen::MatrixXd(y.leaf - x.leaf));
    case ManifoldKind::kSphere: {
      Eigen::VectorXd dir;
      double theta = 0.0;
      sphere_direction(col(x.leaf), col(y.leaf), &dir, &theta);
      return make_tangent(Eigen::VectorXd(theta * dir));
    }
    case ManifoldKind::kSpd:
      return Tangent(spd::Frame(x.leaf).log(y.leaf));
    case ManifoldKind::kProduct: {
      std::vector<Tangent> parts;
      parts.reserve(factors_.size());
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        parts.push_back(factors_[i].log(x.parts[i], y.parts[i]));
      }
      return Tangent(std::move(parts));
    }
  }
  throw std::logic_error("unreachable");
}

Tangent Manifold::transport(const Point& x, const Point& y,
                            const Tangent& v) const {
  check_tangent(x, v);
  require_shape(y, "transport");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return v;
    case ManifoldKind::kSphere: {
      const Eigen::VectorXd p = col(x.leaf);
      Eigen::VectorXd dir;
      double theta = 0.0;
      sphere_direction(p, col(y.leaf), &dir, &theta);
      const Eigen::VectorXd w = col(v.leaf);
      const double along = dir.dot(w);
      // Rotate the component along the geodesic within span{x, dir}; the
      // orthogonal complement is carried unchanged.
      Eigen::VectorXd out =
          w + (std::cos(theta) - 1.0) * along * dir - std::sin(theta) * along * p;
      const Eigen::VectorXd q = col(y.leaf);
      out -= q.dot(out) * q;
      return make_tangent(out);
    }
    case ManifoldKind::kSpd: {
      // E V E^T with E = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}.
      const spd::Frame fx(x.leaf);
      const Eigen::MatrixXd mid =
          spd::apply(fx.whiten(y.leaf), [](double l) {
            if (!(l > 0.0)) {
              throw std::invalid_argument("spd transport: target not SPD");
            }
            return std::sqrt(l);
          });
      const Eigen::MatrixXd e = fx.sqrt() * mid * fx.inv_sqrt();
      return Tangent(spd::sym(e * v.leaf * e.transpose()));
    }
    case ManifoldKind::kProduct: {
      std::vector<Tangent> parts;
      parts.reserve(factors_.size());
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        parts.push_back(factors_[i].transport(x.parts[i], y.parts[i], v.parts[i]));
      }
      return Tangent(std::move(parts));
    }
  }
  throw std::logic_error("unreachable");
}

double Manifold::inner(const Point& x, const Tangent& u, const Tangent& v) const {
  require_shape(x, "inner");
  require_shape(u, "inner");
  require_shape(v, "inner");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
    case ManifoldKind::kSphere:
      return col(u.leaf).dot(col(v.leaf));
    case ManifoldKind::kSpd: {
      const Eigen::MatrixXd xi = x.leaf.ldlt().solve(
          Eigen::MatrixXd::Identity(size_, size_));
      return (xi * u.leaf).cwiseProduct((xi * v.leaf).transpose()).sum();
    }
    case ManifoldKind::kProduct: {
      double s = 0.0;
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        s += factors_[i].inner(x.parts[i], u.parts[i], v.parts[i]);
      }
      return s;
    }
  }
  throw std::logic_error("unreachable");
}

double Manifold::norm(const Point& x, const Tangent& v) const {
  return std::sqrt(std::max(0.0, inner(x, v, v)));
}

double Manifold::distance(const Point& x, const Point& y) const {
  require_shape(x, "distance");
  require_shape(y, "distance");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return (y.leaf - x.leaf).norm();
    case ManifoldKind::kSphere: {
      Eigen::VectorXd dir;
      double theta = 0.0;
      sphere_direction(col(x.leaf), col(y.leaf), &dir, &theta);
      return theta;
    }
    case ManifoldKind::kSpd:
      return spd::Frame(x.leaf).distance(y.leaf);
    case ManifoldKind::kProduct: {
      double s = 0.0;
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        const double d = factors_[i].distance(x.parts[i], y.parts[i]);
        s += d * d;
      }
      return std::sqrt(s);
    }
  }
  throw std::logic_error("unreachable");
}

Tangent Manifold::project(const Point& x, const Tangent& ambient) const {
  require_shape(x, "project");
  require_shape(ambient, "project");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return ambient;
    case ManifoldKind::kSphere: {
      const Eigen::VectorXd p = col(x.leaf);
      const Eigen::VectorXd a = col(ambient.leaf);
      return make_tangent(Eigen::VectorXd(a - p.dot(a) * p));
    }
    case ManifoldKind::kSpd:
      return Tangent(spd::sym(ambient.leaf));
    case ManifoldKind::kProduct: {
      std::vector<Tangent> parts;
      parts.reserve(factors_.size());
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        parts.push_back(factors_[i].project(x.parts[i], ambient.parts[i]));
      }
      return Tangent(std::move(parts));
    }
  }
  throw std::logic_error("unreachable");
}

Tangent Manifold::zero_tangent(const Point& x) const {
  require_shape(x, "zero_tangent");
  if (kind_ != ManifoldKind::kProduct) {
    return Tangent(Eigen::MatrixXd::Zero(x.leaf.rows(), x.leaf.cols()));
  }
  std::vector<Tangent> parts;
  parts.reserve(factors_.size());
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    parts.push_back(factors_[i].zero_tangent(x.parts[i]));
  }
  return Tangent(std::move(parts));
}

// ---------------------------------------------------------------------------
// Sampling

Point Manifold::random_point(Rng& rng) const {
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return Point(gaussian(size_, 1, rng));
    case ManifoldKind::kSphere: {
      Eigen::VectorXd g = col(gaussian(size_, 1, rng));
      return make_point(Eigen::VectorXd(g / g.norm()));
    }
    case ManifoldKind::kSpd: {
      // Q diag(exp(u)) Q^T with u uniform in [-1, 1].
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      Eigen::VectorXd lambda(size_);
      for (int i = 0; i < size_; ++i) lambda(i) = std::exp(unif(rng));
      const Eigen::MatrixXd q = random_orthogonal(size_, rng);
      return Point(spd::sym(q * lambda.asDiagonal() * q.transpose()));
    }
    case ManifoldKind::kProduct: {
      std::vector<Point> parts;
      parts.reserve(factors_.size());
      for (const auto& f : factors_) parts.push_back(f.random_point(rng));
      return Point(std::move(parts));
    }
  }
  throw std::logic_error("unreachable");
}

Tangent Manifold::standard_normal_tangent(const Point& x, Rng& rng) const {
  require_shape(x, "standard_normal_tangent");
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return Tangent(gaussian(size_, 1, rng));
    case ManifoldKind::kSphere:
      return project(x, Tangent(gaussian(size_, 1, rng)));
    case ManifoldKind::kSpd: {
      // S symmetric with N(0,1) diagonal and N(0,1/2) off-diagonal is
      // isotropic in the Frobenius metric; X^{1/2} S X^{1/2} carries it to an
      // isotropic vector in the affine-invariant metric at X.
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::MatrixXd s(size_, size_);
      for (int j = 0; j < size_; ++j) {
        for (int i = 0; i <= j; ++i) {
          const double g = normal(rng);
          if (i == j) {
            s(i, i) = g;
          } else {
            s(i, j) = s(j, i) = g * std::sqrt(0.5);
          }
        }
      }
      return Tangent(spd::Frame(x.leaf).color(s));
    }
    case ManifoldKind::kProduct: {
      std::vector<Tangent> parts;
      parts.reserve(factors_.size());
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        parts.push_back(factors_[i].standard_normal_tangent(x.parts[i], rng));
      }
      return Tangent(std::move(parts));
    }
  }
  throw std::logic_error("unreachable");
}

Tangent Manifold::random_tangent(const Point& x, Rng& rng, double scale) const {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("random_tangent: scale must be positive");
  }
  return (scale / std::sqrt(static_cast<double>(dim()))) *
         standard_normal_tangent(x, rng);
}

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  const Eigen::MatrixXd g = gaussian(n, n, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR();
  // Sign fix makes Q Haar-distributed.
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace rminmax
