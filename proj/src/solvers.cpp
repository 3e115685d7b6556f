#include "rminmax/solvers.hpp"

#include "rminmax/errors.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rminmax {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kRceg: return "rceg";
    case SolverKind::kSrceg: return "srceg";
    case SolverKind::kRgda: return "rgda";
    case SolverKind::kSrgda: return "srgda";
  }
  return "unknown";
}

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "rceg") return SolverKind::kRceg;
  if (name == "srceg") return SolverKind::kSrceg;
  if (name == "rgda") return SolverKind::kRgda;
  if (name == "srgda") return SolverKind::kSrgda;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

bool is_extragradient(SolverKind kind) {
  return kind == SolverKind::kRceg || kind == SolverKind::kSrceg;
}

bool is_stochastic(SolverKind kind) {
  return kind == SolverKind::kSrceg || kind == SolverKind::kSrgda;
}

GradPair sample_noise(const SaddleProblem& p, const Point& x, const Point& y,
                      const NoiseModel& noise, Rng& rng) {
  const double sx = noise.sigma / std::sqrt(2.0 * p.m_min.dim());
  const double sy = noise.sigma / std::sqrt(2.0 * p.m_max.dim());
  Tangent nx = sx * p.m_min.standard_normal_tangent(x, rng);
  Tangent ny = sy * p.m_max.standard_normal_tangent(y, rng);
  return {std::move(nx), std::move(ny)};
}

Rng substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

namespace {

void require_step(double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("step size must be finite and nonnegative");
  }
}

GradPair exact(const SaddleProblem& p, SolverState& s, const Point& x,
               const Point& y) {
  ++s.grad_calls;
  s.data_passes += p.grad_pass_cost;
  return p.grad(x, y);
}

GradPair noisy(const SaddleProblem& p, SolverState& s, const Point& x,
               const Point& y, const NoiseModel& noise, Rng& rng) {
  GradPair g;
  ++s.grad_calls;
  if (p.stochastic_grad) {
    g = p.stochastic_grad(x, y);
    s.data_passes += p.stochastic_pass_cost;
  } else {
    g = p.grad(x, y);
    s.data_passes += p.grad_pass_cost;
  }
  if (noise.sigma > 0.0) {
    const GradPair xi = sample_noise(p, x, y, noise, rng);
    g.x = g.x + xi.x;
    g.y = g.y + xi.y;
  }
  return g;
}

void extragradient(const SaddleProblem& p, SolverState& s, double eta,
                   const GradPair& g, const auto& second_query) {
  s.x_half = p.m_min.exp(s.x, -eta * g.x);
  s.y_half = p.m_max.exp(s.y, eta * g.y);
  const GradPair gh = second_query(s.x_half, s.y_half);
  Point x_next = p.m_min.exp(
      s.x_half, -eta * gh.x + p.m_min.log(s.x_half, s.x));
  Point y_next = p.m_max.exp(
      s.y_half, eta * gh.y + p.m_max.log(s.y_half, s.y));
  s.x = std::move(x_next);
  s.y = std::move(y_next);
  ++s.t;
}

void descent_ascent(const SaddleProblem& p, SolverState& s, double eta,
                    const GradPair& g) {
  Point x_next = p.m_min.exp(s.x, -eta * g.x);
  Point y_next = p.m_max.exp(s.y, eta * g.y);
  s.x = std::move(x_next);
  s.y = std::move(y_next);
  ++s.t;
}

}  // namespace

SolverState init_state(const SaddleProblem& p, Point x0, Point y0,
                       std::uint64_t seed) {
  p.m_min.check_point(x0);
  p.m_max.check_point(y0);
  SolverState s;
  s.x = std::move(x0);
  s.y = std::move(y0);
  s.rng = substream(seed, 1);
  s.rng_hat = substream(seed, 2);
  return s;
}

SolverState rceg_step(const SaddleProblem& p, SolverState s, double eta) {
  require_step(eta);
  const GradPair g = exact(p, s, s.x, s.y);
  extragradient(p, s, eta, g, [&](const Point& xh, const Point& yh) {
    return exact(p, s, xh, yh);
  });
  return s;
}

SolverState srceg_step(const SaddleProblem& p, SolverState s, double eta,
                       const NoiseModel& noise) {
  require_step(eta);
  const GradPair g = noisy(p, s, s.x, s.y, noise, s.rng);
  extragradient(p, s, eta, g, [&](const Point& xh, const Point& yh) {
    return noisy(p, s, xh, yh, noise, s.rng_hat);
  });
  return s;
}

SolverState rgda_step(const SaddleProblem& p, SolverState s, double eta) {
  require_step(eta);
  const GradPair g = exact(p, s, s.x, s.y);
  descent_ascent(p, s, eta, g);
  return s;
}

SolverState srgda_step(const SaddleProblem& p, SolverState s, double eta,
                       const NoiseModel& noise) {
  require_step(eta);
  const GradPair g = noisy(p, s, s.x, s.y, noise, s.rng);
  descent_ascent(p, s, eta, g);
  return s;
}

Point running_mean_update(const Manifold& m, const Point& x_bar,
                          const Point& x_new, long t) {
  if (t < 0) throw std::invalid_argument("running mean: t must be >= 0");
  const double w = 1.0 / static_cast<double>(t + 1);
  return m.exp(x_bar, w * m.log(x_bar, x_new));
}

void fold_average(const SaddleProblem& p, SolverState& s, const Point& x_in,
                  const Point& y_in) {
  if (s.averaged == 0) {
    s.x_bar = x_in;
    s.y_bar = y_in;
  } else {
    s.x_bar = running_mean_update(p.m_min, s.x_bar, x_in, s.averaged);
    s.y_bar = running_mean_update(p.m_max, s.y_bar, y_in, s.averaged);
  }
  ++s.averaged;
}

RunResult run(const SaddleProblem& p, SolverKind kind,
              const StepSchedule& schedule, long T, const Point& x0,
              const Point& y0, const RunOptions& opts) {
  if (T < 1) throw std::invalid_argument("run: T must be >= 1");
  if (opts.record_every < 1) {
    throw std::invalid_argument("run: record_every must be >= 1");
  }
  if (!is_stochastic(kind) && opts.noise.sigma != 0.0) {
    throw std::invalid_argument("run: deterministic solvers take no noise");
  }
  RunResult result;
  result.final_state = init_state(p, x0, y0, opts.seed);
  SolverState& s = result.final_state;

  const auto start = std::chrono::steady_clock::now();
  auto record = [&](double eta) {
    TraceRow row;
    row.iter = s.t;
    row.data_passes = s.data_passes;
    row.grad_calls = s.grad_calls;
    row.eta = eta;
    if (opts.recorder) opts.recorder(p, s, row);
    row.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    result.rows.push_back(row);
  };

  record(0.0);
  const bool check_divergence = std::isfinite(opts.divergence_cap);
  for (long t = 0; t < T; ++t) {
    double eta = 0.0;
    try {
      eta = schedule.at(t);
      // Steps work on a copy so a failing iteration leaves the last good
      // state in the result.
      SolverState next;
      switch (kind) {
        case SolverKind::kRceg:
          next = rceg_step(p, s, eta);
          fold_average(p, next, next.x_half, next.y_half);
          break;
        case SolverKind::kSrceg:
          next = srceg_step(p, s, eta, opts.noise);
          fold_average(p, next, next.x_half, next.y_half);
          break;
        case SolverKind::kRgda:
          next = rgda_step(p, s, eta);
          // Gradient descent ascent averages the iterates it stepped from.
          fold_average(p, next, s.x, s.y);
          break;
        case SolverKind::kSrgda:
          next = srgda_step(p, s, eta, opts.noise);
          fold_average(p, next, s.x, s.y);
          break;
      }
      if (!all_finite(next.x) || !all_finite(next.y)) {
        throw NumericError("non-finite iterate");
      }
      if (check_divergence) {
        const double drift =
            p.m_min.distance(next.x, x0) + p.m_max.distance(next.y, y0);
        if (!(drift <= opts.divergence_cap)) {
          throw NumericError("diverged: distance from start exceeds cap");
        }
      }
      s = std::move(next);
      if (opts.on_step) opts.on_step(s);
      const bool last = t + 1 == T;
      if (last || s.t % opts.record_every == 0) {
        record(eta);
        if (opts.stop_grad_norm > 0.0 &&
            result.rows.back().grad_norm <= opts.stop_grad_norm) {
          break;
        }
      }
    } catch (const NumericError& e) {
      result.failure = e.what();
      result.failed_iteration = t;
      break;
    } catch (const std::invalid_argument& e) {
      // Inputs were validated up front; anything rejected mid-run is an
      // iterate that left the manifold numerically.
      result.failure = e.what();
      result.failed_iteration = t;
      break;
    } catch (const std::domain_error& e) {
      result.failure = e.what();
      result.failed_iteration = t;
      break;
    }
  }
  return result;
}

}  // namespace rminmax
