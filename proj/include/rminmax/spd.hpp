#pragma once

#include <Eigen/Dense>

#include <functional>

// Matrix functions for symmetric positive-definite matrices under the
// affine-invariant metric. Every result is re-symmetrized as (A + A^T) / 2.
namespace rminmax::spd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative eigenvalue floor: lambda_min must exceed kRelEigFloor * lambda_max.
inline constexpr double kRelEigFloor = 1e-12;

MatrixXd sym(const MatrixXd& a);

// V f(Lambda) V^T for symmetric `a`.
MatrixXd apply(const MatrixXd& a, const std::function<double(double)>& f);

// Throws std::invalid_argument unless `a` is square, symmetric within
// 1e-10 (relative Frobenius) and passes the eigenvalue floor.
void require_spd(const MatrixXd& a, const char* what);
bool is_spd(const MatrixXd& a);

/// A factored base point X. Caches X^{1/2}, X^{-1/2} and X^{-1} so that many
/// log/exp/distance evaluations at the same base share one eigendecomposition.
class Frame {
 public:
  explicit Frame(const MatrixXd& x);

  const MatrixXd& point() const { return x_; }
  const MatrixXd& sqrt() const { return sqrt_; }
  const MatrixXd& inv_sqrt() const { return inv_sqrt_; }
  const MatrixXd& inv() const { return inv_; }

  // X^{-1/2} A X^{-1/2}, symmetrized.
  MatrixXd whiten(const MatrixXd& a) const;
  // X^{1/2} A X^{1/2}, symmetrized.
  MatrixXd color(const MatrixXd& a) const;

  MatrixXd exp(const MatrixXd& v) const;
  MatrixXd log(const MatrixXd& y) const;
  // Log_X(Y) together with d(X, Y) from a single eigendecomposition.
  MatrixXd log(const MatrixXd& y, double* dist) const;
  double distance(const MatrixXd& y) const;
  double inner(const MatrixXd& u, const MatrixXd& v) const;

 private:
  MatrixXd x_;
  MatrixXd sqrt_;
  MatrixXd inv_sqrt_;
  MatrixXd inv_;
  double min_eig_ = 1.0;
  double max_eig_ = 1.0;
};

}  // namespace rminmax::spd
