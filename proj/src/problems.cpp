#include "rminmax/problems.hpp"

#include "rminmax/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rminmax {

std::vector<Eigen::MatrixXd> gen_spd_data(int d, int n, double eig_lo,
                                          double eig_hi, std::uint64_t seed) {
  if (d < 1 || n < 1) throw std::invalid_argument("gen_spd_data: d, n >= 1");
  if (!(eig_lo > 0.0) || !(eig_lo <= eig_hi) || !std::isfinite(eig_hi)) {
    throw std::invalid_argument("gen_spd_data: need 0 < eig_lo <= eig_hi");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(eig_lo, eig_hi);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd lambda(d);
    for (int j = 0; j < d; ++j) lambda(j) = std::min(unif(rng), eig_hi);
    const Eigen::MatrixXd q = random_orthogonal(d, rng);
    out.push_back(spd::sym(q * lambda.asDiagonal() * q.transpose()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// RPCA

RpcaInstance make_rpca_instance(int d, int n, double alpha, std::uint64_t seed) {
  RpcaInstance inst;
  inst.d = d;
  inst.n = n;
  inst.alpha = alpha;
  inst.data = gen_spd_data(d, n, 0.2, 4.5, seed);
  validate(inst);
  return inst;
}

void validate(const RpcaInstance& inst) {
  if (inst.d < 1 || inst.n < 1) throw std::invalid_argument("rpca: d, n >= 1");
  if (!(inst.alpha > 0.0)) throw std::invalid_argument("rpca: alpha must be > 0");
  if (static_cast<int>(inst.data.size()) != inst.n) {
    throw std::invalid_argument("rpca: data size does not match n");
  }
  for (const auto& m : inst.data) {
    if (m.rows() != inst.d || m.cols() != inst.d) {
      throw std::invalid_argument("rpca: data matrix has wrong dimension");
    }
    spd::require_spd(m, "rpca data");
  }
}

namespace {

void check_rpca_args(const RpcaInstance& inst, const Point& m, const Point& x) {
  if (m.is_product() || x.is_product() || m.leaf.rows() != inst.d ||
      m.leaf.cols() != inst.d || x.leaf.rows() != inst.d || x.leaf.cols() != 1) {
    throw std::invalid_argument("rpca: argument dimension mismatch");
  }
}

// sum over `idx` of Log_M(M_i) / d(M, M_i), skipping kinks.
Eigen::MatrixXd distance_gradient_sum(const RpcaInstance& inst,
                                      const spd::Frame& frame,
                                      const std::vector<int>* idx) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(inst.d, inst.d);
  auto add = [&](int i) {
    double dist = 0.0;
    const Eigen::MatrixXd l = frame.log(inst.data[static_cast<std::size_t>(i)], &dist);
    if (dist > kRpcaKinkTol) acc += l / dist;
  };
  if (idx == nullptr) {
    for (int i = 0; i < inst.n; ++i) add(i);
  } else {
    for (int i : *idx) add(i);
  }
  return acc;
}

RpcaGrad rpca_grad_impl(const RpcaInstance& inst, const Point& m,
                        const Point& x, const std::vector<int>* idx,
                        double weight) {
  check_rpca_args(inst, m, x);
  const spd::Frame frame(m.leaf);
  const Eigen::VectorXd v = x.leaf.col(0);
  const Eigen::VectorXd mv = m.leaf * v;
  RpcaGrad g;
  // Quadratic term -x^T M x: Euclidean gradient -x x^T, Riemannian M(.)M.
  Eigen::MatrixXd gm = -mv * mv.transpose();
  gm += weight * distance_gradient_sum(inst, frame, idx);
  g.m = Tangent(spd::sym(gm));
  const Eigen::VectorXd ambient = -2.0 * mv;
  g.x = make_tangent(Eigen::VectorXd(ambient - v.dot(ambient) * v));
  return g;
}

}  // namespace

double rpca_value(const RpcaInstance& inst, const Point& m, const Point& x) {
  check_rpca_args(inst, m, x);
  const spd::Frame frame(m.leaf);
  const Eigen::VectorXd v = x.leaf.col(0);
  double penalty = 0.0;
  for (const auto& mi : inst.data) penalty += frame.distance(mi);
  return -v.dot(m.leaf * v) - inst.alpha / inst.n * penalty;
}

RpcaGrad rpca_grad(const RpcaInstance& inst, const Point& m, const Point& x) {
  return rpca_grad_impl(inst, m, x, nullptr, inst.alpha / inst.n);
}

SaddleProblem rpca_problem(std::shared_ptr<const RpcaInstance> inst) {
  validate(*inst);
  SaddleProblem p;
  p.name = "rpca";
  p.m_min = Manifold::sphere(inst->d);
  p.m_max = Manifold::spd(inst->d).with_curvature(-0.5, 1.0);
  p.value = [inst](const Point& x, const Point& m) {
    return rpca_value(*inst, m, x);
  };
  p.grad = [inst](const Point& x, const Point& m) {
    RpcaGrad g = rpca_grad(*inst, m, x);
    return GradPair{std::move(g.x), std::move(g.m)};
  };
  return p;
}

RpcaMinibatchOracle::RpcaMinibatchOracle(
    std::shared_ptr<const RpcaInstance> inst, int batch_size, Rng rng)
    : inst_(std::move(inst)), batch_(batch_size), rng_(std::move(rng)) {
  if (batch_size < 1 || batch_size > inst_->n) {
    throw std::invalid_argument("minibatch: need 1 <= batch_size <= n");
  }
  perm_.resize(static_cast<std::size_t>(inst_->n));
  std::iota(perm_.begin(), perm_.end(), 0);
  cursor_ = perm_.size();
}

std::vector<int> RpcaMinibatchOracle::next_batch() {
  const auto b = static_cast<std::size_t>(batch_);
  if (cursor_ + b > perm_.size()) {
    // New epoch. A short tail is dropped so every batch is a uniform draw
    // without replacement.
    std::shuffle(perm_.begin(), perm_.end(), rng_);
    cursor_ = 0;
  }
  std::vector<int> out(perm_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                       perm_.begin() + static_cast<std::ptrdiff_t>(cursor_ + b));
  cursor_ += b;
  return out;
}

GradPair RpcaMinibatchOracle::operator()(const Point& x, const Point& m) {
  const std::vector<int> idx = next_batch();
  passes_ += static_cast<double>(batch_) / inst_->n;
  RpcaGrad g = rpca_grad_impl(*inst_, m, x, &idx, inst_->alpha / batch_);
  return GradPair{std::move(g.x), std::move(g.m)};
}

void attach_minibatch_oracle(SaddleProblem& p,
                             std::shared_ptr<const RpcaInstance> inst,
                             int batch_size, Rng rng) {
  auto oracle =
      std::make_shared<RpcaMinibatchOracle>(inst, batch_size, std::move(rng));
  p.stochastic_grad = [oracle](const Point& x, const Point& m) {
    return (*oracle)(x, m);
  };
  p.stochastic_pass_cost = static_cast<double>(batch_size) / inst->n;
}

// ---------------------------------------------------------------------------
// Robust Karcher mean

KarcherInstance make_karcher_instance(int d, int N, double gamma,
                                      std::uint64_t seed) {
  KarcherInstance inst;
  inst.d = d;
  inst.N = N;
  inst.gamma = gamma;
  inst.anchors = gen_spd_data(d, N, 0.2, 4.5, seed);
  validate(inst);
  return inst;
}

void validate(const KarcherInstance& inst) {
  if (inst.d < 1 || inst.N < 1) throw std::invalid_argument("karcher: d, N >= 1");
  if (!(inst.gamma > 0.0)) throw std::invalid_argument("karcher: gamma must be > 0");
  if (static_cast<int>(inst.anchors.size()) != inst.N) {
    throw std::invalid_argument("karcher: anchor count does not match N");
  }
  for (const auto& a : inst.anchors) {
    if (a.rows() != inst.d || a.cols() != inst.d) {
      throw std::invalid_argument("karcher: anchor has wrong dimension");
    }
    spd::require_spd(a, "karcher anchor");
  }
}

namespace {

void check_karcher_args(const KarcherInstance& inst, const Point& x,
                        const Point& ys) {
  if (x.is_product() || x.leaf.rows() != inst.d || x.leaf.cols() != inst.d ||
      static_cast<int>(ys.parts.size()) != inst.N) {
    throw std::invalid_argument("karcher: argument dimension mismatch");
  }
  for (const auto& y : ys.parts) {
    if (y.leaf.rows() != inst.d || y.leaf.cols() != inst.d) {
      throw std::invalid_argument("karcher: argument dimension mismatch");
    }
  }
}

}  // namespace

double karcher_value(const KarcherInstance& inst, const Point& x,
                     const Point& ys) {
  check_karcher_args(inst, x, ys);
  const spd::Frame fx(x.leaf);
  double fit = 0.0;
  double penalty = 0.0;
  for (int i = 0; i < inst.N; ++i) {
    const auto& y = ys.parts[static_cast<std::size_t>(i)].leaf;
    const double dxy = fx.distance(y);
    const double dya = spd::Frame(y).distance(inst.anchors[static_cast<std::size_t>(i)]);
    fit += dxy * dxy;
    penalty += dya * dya;
  }
  return fit - inst.gamma * penalty;
}

GradPair karcher_grad(const KarcherInstance& inst, const Point& x,
                      const Point& ys) {
  check_karcher_args(inst, x, ys);
  const spd::Frame fx(x.leaf);
  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(inst.d, inst.d);
  std::vector<Tangent> gy;
  gy.reserve(static_cast<std::size_t>(inst.N));
  for (int i = 0; i < inst.N; ++i) {
    const auto& y = ys.parts[static_cast<std::size_t>(i)].leaf;
    gx -= 2.0 * fx.log(y);
    const spd::Frame fy(y);
    // grad of d(X, Y)^2 in Y is -2 Log_Y(X); of -gamma d(Y, A)^2 is
    // +2 gamma Log_Y(A).
    gy.emplace_back(Eigen::MatrixXd(
        spd::sym(-2.0 * fy.log(x.leaf) +
                 2.0 * inst.gamma * fy.log(inst.anchors[static_cast<std::size_t>(i)]))));
  }
  return GradPair{Tangent(spd::sym(gx)), Tangent(std::move(gy))};
}

SaddleProblem karcher_problem(std::shared_ptr<const KarcherInstance> inst) {
  validate(*inst);
  SaddleProblem p;
  p.name = "karcher";
  p.m_min = Manifold::spd(inst->d);
  p.m_max = Manifold::product(
      std::vector<Manifold>(static_cast<std::size_t>(inst->N), Manifold::spd(inst->d)));
  p.value = [inst](const Point& x, const Point& ys) {
    return karcher_value(*inst, x, ys);
  };
  p.grad = [inst](const Point& x, const Point& ys) {
    return karcher_grad(*inst, x, ys);
  };
  return p;
}

// ---------------------------------------------------------------------------
// Euclidean test problems

BilinearInstance make_bilinear_instance(int k) {
  if (k < 1) throw std::invalid_argument("bilinear: k >= 1");
  return BilinearInstance{k, Eigen::MatrixXd::Identity(k, k)};
}

SaddleProblem bilinear_problem(const BilinearInstance& inst) {
  if (inst.coupling.rows() != inst.k || inst.coupling.cols() != inst.k ||
      !inst.coupling.allFinite()) {
    throw std::invalid_argument("bilinear: coupling must be finite k x k");
  }
  SaddleProblem p;
  p.name = "bilinear";
  p.m_min = Manifold::euclidean(inst.k);
  p.m_max = Manifold::euclidean(inst.k);
  const Eigen::MatrixXd b = inst.coupling;
  p.value = [b](const Point& x, const Point& y) {
    return x.leaf.col(0).dot(b * y.leaf.col(0));
  };
  p.grad = [b](const Point& x, const Point& y) {
    return GradPair{make_tangent(Eigen::VectorXd(b * y.leaf.col(0))),
                    make_tangent(Eigen::VectorXd(b.transpose() * x.leaf.col(0)))};
  };
  const double sv_min =
      Eigen::JacobiSVD<Eigen::MatrixXd>(b).singularValues().minCoeff();
  if (sv_min > 0.0) {
    const Point origin = make_point(Eigen::VectorXd(Eigen::VectorXd::Zero(inst.k)));
    p.known_saddle = std::make_pair(origin, origin);
  }
  return p;
}

SaddleProblem euclidean_quadratic_problem(int k, double a, double b) {
  SaddleProblem p;
  p.name = "quadratic";
  p.m_min = Manifold::euclidean(k);
  p.m_max = Manifold::euclidean(k);
  p.value = [a, b](const Point& x, const Point& y) {
    return 0.5 * a * x.leaf.squaredNorm() - 0.5 * b * y.leaf.squaredNorm();
  };
  p.grad = [a, b](const Point& x, const Point& y) {
    return GradPair{make_tangent(Eigen::MatrixXd(a * x.leaf)),
                    make_tangent(Eigen::MatrixXd(-b * y.leaf))};
  };
  const Point origin = make_point(Eigen::VectorXd(Eigen::VectorXd::Zero(k)));
  p.known_saddle = std::make_pair(origin, origin);
  return p;
}

// ---------------------------------------------------------------------------
// Empirical constants

namespace {

std::pair<Point, Point> sample_center(const SaddleProblem& p, Rng& rng,
                                      const SamplingOptions& opts) {
  if (!opts.anchor) return {p.m_min.random_point(rng), p.m_max.random_point(rng)};
  const auto& [ax, ay] = *opts.anchor;
  return {p.m_min.exp(ax, p.m_min.random_tangent(ax, rng, opts.radius)),
          p.m_max.exp(ay, p.m_max.random_tangent(ay, rng, opts.radius))};
}

}  // namespace

double estimate_smoothness(const SaddleProblem& p, int samples, Rng& rng,
                           const SamplingOptions& opts) {
  if (samples < 1) throw std::invalid_argument("estimate_smoothness: samples >= 1");
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto [x, y] = sample_center(p, rng, opts);
    const int mode = s % 3;
    Point x2 = x;
    Point y2 = y;
    if (mode != 2) x2 = p.m_min.exp(x, p.m_min.random_tangent(x, rng, opts.radius));
    if (mode != 1) y2 = p.m_max.exp(y, p.m_max.random_tangent(y, rng, opts.radius));
    const double dist = p.m_min.distance(x, x2) + p.m_max.distance(y, y2);
    if (!(dist > 0.0)) continue;
    const GradPair g1 = p.grad(x, y);
    const GradPair g2 = p.grad(x2, y2);
    const double dx = p.m_min.norm(x, g1.x - p.m_min.transport(x2, x, g2.x));
    const double dy = p.m_max.norm(y, g1.y - p.m_max.transport(y2, y, g2.y));
    best = std::max(best, std::max(dx, dy) / dist);
  }
  if (!(best > 0.0)) {
    throw std::domain_error("estimate_smoothness: gradient is constant on samples");
  }
  return best;
}

double estimate_strong_convexity(const SaddleProblem& p, int samples, Rng& rng,
                                 const SamplingOptions& opts) {
  if (samples < 1) {
    throw std::invalid_argument("estimate_strong_convexity: samples >= 1");
  }
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const auto [x, y] = sample_center(p, rng, opts);
    if (s % 2 == 0) {
      const Point x2 = p.m_min.exp(x, p.m_min.random_tangent(x, rng, opts.radius));
      const double d = p.m_min.distance(x, x2);
      if (!(d > 0.0)) continue;
      const double m = p.m_min.inner(x, p.grad(x, y).x, p.m_min.log(x, x2)) +
                       p.m_min.inner(x2, p.grad(x2, y).x, p.m_min.log(x2, x));
      best = std::min(best, -m / (d * d));
    } else {
      const Point y2 = p.m_max.exp(y, p.m_max.random_tangent(y, rng, opts.radius));
      const double d = p.m_max.distance(y, y2);
      if (!(d > 0.0)) continue;
      const double m = p.m_max.inner(y, p.grad(x, y).y, p.m_max.log(y, y2)) +
                       p.m_max.inner(y2, p.grad(x, y2).y, p.m_max.log(y2, y));
      best = std::min(best, m / (d * d));
    }
  }
  return best;
}

}  // namespace rminmax
