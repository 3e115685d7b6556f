#include "rminmax/spd.hpp"

#include "rminmax/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rminmax::spd {

namespace {

struct SymEig {
  VectorXd values;
  MatrixXd vectors;
};

SymEig eig(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigendecomposition failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

MatrixXd rebuild(const SymEig& e, const VectorXd& f) {
  return sym(e.vectors * f.asDiagonal() * e.vectors.transpose());
}

// Whitened matrices fed to log must be positive definite. A failure here means
// the argument was not SPD to begin with.
void require_positive(const VectorXd& values, const char* what) {
  const double hi = values.maxCoeff();
  const double lo = values.minCoeff();
  if (!(hi > 0.0) || !(lo > kRelEigFloor * hi)) {
    throw std::invalid_argument(std::string(what) +
                                ": matrix is not positive definite");
  }
}

}  // namespace

MatrixXd sym(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

MatrixXd apply(const MatrixXd& a, const std::function<double(double)>& f) {
  const SymEig e = eig(sym(a));
  return rebuild(e, e.values.unaryExpr(f));
}

bool is_spd(const MatrixXd& a) {
  if (a.rows() == 0 || a.rows() != a.cols() || !a.allFinite()) return false;
  const double scale = std::max(a.norm(), 1e-300);
  if ((a - a.transpose()).norm() > 1e-10 * scale) return false;
  const VectorXd values = eig(sym(a)).values;
  const double hi = values.maxCoeff();
  return hi > 0.0 && values.minCoeff() > kRelEigFloor * hi;
}

void require_spd(const MatrixXd& a, const char* what) {
  if (!is_spd(a)) {
    throw std::invalid_argument(std::string(what) +
                                ": expected a symmetric positive-definite matrix");
  }
}

Frame::Frame(const MatrixXd& x) : x_(x) {
  if (x.rows() == 0 || x.rows() != x.cols()) {
    throw std::invalid_argument("spd::Frame: matrix must be square");
  }
  if (!x.allFinite()) throw NumericError("spd::Frame: non-finite matrix");
  const SymEig e = eig(sym(x));
  require_positive(e.values, "spd::Frame");
  min_eig_ = e.values.minCoeff();
  max_eig_ = e.values.maxCoeff();
  sqrt_ = rebuild(e, e.values.cwiseSqrt());
  inv_sqrt_ = rebuild(e, e.values.cwiseSqrt().cwiseInverse());
  inv_ = rebuild(e, e.values.cwiseInverse());
}

MatrixXd Frame::whiten(const MatrixXd& a) const {
  return sym(inv_sqrt_ * a * inv_sqrt_);
}

MatrixXd Frame::color(const MatrixXd& a) const { return sym(sqrt_ * a * sqrt_); }

MatrixXd Frame::exp(const MatrixXd& v) const {
  if (!v.allFinite()) throw NumericError("spd exp: non-finite tangent");
  const SymEig e = eig(whiten(v));
  const MatrixXd y = color(rebuild(e, e.values.array().exp().matrix()));
  if (!y.allFinite()) throw NumericError("spd exp: overflow");
  // Cheap conditioning bound first; only borderline cases pay for a second
  // eigendecomposition.
  const double log_ratio = std::log(min_eig_ / max_eig_) +
                           (e.values.minCoeff() - e.values.maxCoeff());
  if (!(log_ratio > std::log(kRelEigFloor))) {
    const SymEig check = eig(y);
    const double hi = check.values.maxCoeff();
    if (!(check.values.minCoeff() > kRelEigFloor * hi)) {
      throw NumericError("spd exp: eigenvalue underflow");
    }
  }
  return y;
}

MatrixXd Frame::log(const MatrixXd& y, double* dist) const {
  if (y.rows() != x_.rows() || y.cols() != x_.cols()) {
    throw std::invalid_argument("spd log: dimension mismatch");
  }
  if (!y.allFinite()) throw NumericError("spd log: non-finite matrix");
  const SymEig e = eig(whiten(y));
  require_positive(e.values, "spd log");
  const VectorXd logs = e.values.array().log().matrix();
  if (dist != nullptr) *dist = logs.norm();
  return color(rebuild(e, logs));
}

MatrixXd Frame::log(const MatrixXd& y) const { return log(y, nullptr); }

double Frame::distance(const MatrixXd& y) const {
  if (y.rows() != x_.rows() || y.cols() != x_.cols()) {
    throw std::invalid_argument("spd distance: dimension mismatch");
  }
  const SymEig e = eig(whiten(y));
  require_positive(e.values, "spd distance");
  return e.values.array().log().matrix().norm();
}

double Frame::inner(const MatrixXd& u, const MatrixXd& v) const {
  return (inv_ * u).cwiseProduct((inv_ * v).transpose()).sum();
}

}  // namespace rminmax::spd
