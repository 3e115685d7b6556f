#pragma once

#include "rminmax/manifold.hpp"
#include "rminmax/saddle.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace rminmax {

// n matrices Q diag(lambda) Q^T with lambda uniform in [eig_lo, eig_hi] and Q
// Haar-random; deterministic per seed.
std::vector<Eigen::MatrixXd> gen_spd_data(int d, int n, double eig_lo,
                                          double eig_hi, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Robust PCA on SPD x sphere:
//   max over SPD M, min over unit x of  -x^T M x - (alpha / n) sum_i d(M, M_i).
// Registered as a SaddleProblem with x in the min slot and M in the max slot.

struct RpcaInstance {
  int d = 0;
  int n = 0;
  double alpha = 1.0;
  std::vector<Eigen::MatrixXd> data;
};

// Data eigenvalues in [0.2, 4.5].
RpcaInstance make_rpca_instance(int d, int n, double alpha, std::uint64_t seed);
void validate(const RpcaInstance& inst);

// Below this distance the distance term contributes the zero subgradient.
inline constexpr double kRpcaKinkTol = 1e-9;

double rpca_value(const RpcaInstance& inst, const Point& m, const Point& x);

struct RpcaGrad {
  Tangent m;  // affine-invariant gradient at M
  Tangent x;  // sphere gradient at x
};
RpcaGrad rpca_grad(const RpcaInstance& inst, const Point& m, const Point& x);

// SPD side defaults to the curvature interval [-1/2, 1] quoted for this
// experiment; override with Manifold::with_curvature on the result.
SaddleProblem rpca_problem(std::shared_ptr<const RpcaInstance> inst);

/// Minibatch gradient estimator for RPCA. Indices are drawn without
/// replacement from a per-epoch permutation; the sampled distance terms are
/// rescaled by n / batch_size so the estimate is unbiased.
class RpcaMinibatchOracle {
 public:
  RpcaMinibatchOracle(std::shared_ptr<const RpcaInstance> inst, int batch_size,
                      Rng rng);
  // Gradient estimate in SaddleProblem orientation (x slot, M slot).
  GradPair operator()(const Point& x, const Point& m);
  double data_passes() const { return passes_; }
  int batch_size() const { return batch_; }

 private:
  std::vector<int> next_batch();

  std::shared_ptr<const RpcaInstance> inst_;
  int batch_;
  Rng rng_;
  std::vector<int> perm_;
  std::size_t cursor_;
  double passes_ = 0.0;
};

// Installs a minibatch estimator as `p.stochastic_grad`, charging
// batch_size / n data passes per call.
void attach_minibatch_oracle(SaddleProblem& p,
                             std::shared_ptr<const RpcaInstance> inst,
                             int batch_size, Rng rng);

// ---------------------------------------------------------------------------
// Robust matrix Karcher mean:
//   min over X max over Y_1..Y_N of
//     sum_i d(X, Y_i)^2 - gamma sum_i d(Y_i, A_i)^2.
// X lives on SPD(d); Y on the product of N copies of SPD(d).

struct KarcherInstance {
  int d = 0;
  int N = 0;
  double gamma = 1.0;
  std::vector<Eigen::MatrixXd> anchors;
};

KarcherInstance make_karcher_instance(int d, int N, double gamma,
                                      std::uint64_t seed);
void validate(const KarcherInstance& inst);

double karcher_value(const KarcherInstance& inst, const Point& x,
                     const Point& ys);
GradPair karcher_grad(const KarcherInstance& inst, const Point& x,
                      const Point& ys);
SaddleProblem karcher_problem(std::shared_ptr<const KarcherInstance> inst);

// ---------------------------------------------------------------------------
// Euclidean bilinear test problem f(x, y) = x^T B y.

struct BilinearInstance {
  int k = 1;
  Eigen::MatrixXd coupling;  // k x k; identity by default
};

BilinearInstance make_bilinear_instance(int k);
SaddleProblem bilinear_problem(const BilinearInstance& inst);

// (a/2)||x||^2 - (b/2)||y||^2 on R^k x R^k.
SaddleProblem euclidean_quadratic_problem(int k, double a, double b);

// ---------------------------------------------------------------------------
// Empirical constants.

struct SamplingOptions {
  // Pairs are drawn around this point when set; otherwise around fresh
  // random points of each manifold.
  std::optional<std::pair<Point, Point>> anchor;
  // Scale of the random tangent used for each perturbation.
  double radius = 0.5;
};

// Largest observed ratio
//   max(||g_x(z) - G g_x(z')||, ||g_y(z) - G g_y(z')||) / (d(x,x') + d(y,y'))
// over `samples` random pairs, G being parallel transport. Samples cycle
// through perturbing both blocks, only x, and only y.
double estimate_smoothness(const SaddleProblem& p, int samples, Rng& rng,
                           const SamplingOptions& opts = {});

// Smallest observed monotonicity ratio of each block with the other held
// fixed; a nonpositive result means no strong convexity-concavity was seen.
double estimate_strong_convexity(const SaddleProblem& p, int samples, Rng& rng,
                                 const SamplingOptions& opts = {});

}  // namespace rminmax
