#pragma once

#include "rminmax/manifold.hpp"
#include "rminmax/saddle.hpp"
#include "rminmax/schedules.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rminmax {

enum class SolverKind { kRceg, kSrceg, kRgda, kSrgda };

std::string to_string(SolverKind kind);
// Accepts "rceg", "srceg", "rgda", "srgda".
SolverKind parse_solver_kind(const std::string& name);
bool is_extragradient(SolverKind kind);
bool is_stochastic(SolverKind kind);

/// Additive Gaussian noise on the gradient oracle. Each block receives
/// isotropic tangent noise with E||xi||^2 = sigma^2 / 2, so that
/// E[||xi_x||^2 + ||xi_y||^2] = sigma^2.
struct NoiseModel {
  double sigma = 0.0;
};

GradPair sample_noise(const SaddleProblem& p, const Point& x, const Point& y,
                      const NoiseModel& noise, Rng& rng);

// Independent generator for stream `stream` of `seed`. Streams 1 and 2 feed
// the oracle noise of a run; the harness uses higher streams.
Rng substream(std::uint64_t seed, std::uint64_t stream);

struct SolverState {
  Point x, y;
  // Extrapolation points of the extragradient solvers.
  Point x_half, y_half;
  // Running Riemannian means; meaningful once `averaged` >= 1.
  Point x_bar, y_bar;
  long t = 0;
  long averaged = 0;
  long grad_calls = 0;
  double data_passes = 0.0;
  // Independent streams for the two oracle queries of one iteration.
  Rng rng;
  Rng rng_hat;
};

// Validates the initial points and seeds both noise streams from `seed`.
SolverState init_state(const SaddleProblem& p, Point x0, Point y0,
                       std::uint64_t seed);

SolverState rceg_step(const SaddleProblem& p, SolverState s, double eta);
SolverState srceg_step(const SaddleProblem& p, SolverState s, double eta,
                       const NoiseModel& noise);
SolverState rgda_step(const SaddleProblem& p, SolverState s, double eta);
SolverState srgda_step(const SaddleProblem& p, SolverState s, double eta,
                       const NoiseModel& noise);

// Exp_{bar}((1 / (t + 1)) Log_{bar}(x_new)).
Point running_mean_update(const Manifold& m, const Point& x_bar,
                          const Point& x_new, long t);

// Folds one input pair into the running means of `s`. The first input
// initializes the means.
void fold_average(const SaddleProblem& p, SolverState& s, const Point& x_in,
                  const Point& y_in);

/// One recorded row of a run. Metric columns are filled by the caller's
/// recorder; the driver owns iter, data_passes, grad_calls, eta and timing.
struct TraceRow {
  long iter = 0;
  double data_passes = 0.0;
  long grad_calls = 0;
  double eta = 0.0;
  double grad_norm = 0.0;
  double grad_norm_x = 0.0;
  double grad_norm_y = 0.0;
  double avg_grad_norm = 0.0;
  double avg_grad_norm_x = 0.0;
  double avg_grad_norm_y = 0.0;
  std::optional<double> dist_gap;
  std::optional<double> avg_dist_gap;
  double elapsed_ms = 0.0;
};

using Recorder = std::function<void(const SaddleProblem&, const SolverState&,
                                    TraceRow&)>;

struct RunOptions {
  NoiseModel noise;
  std::uint64_t seed = 0;
  // Record rows 0, every `record_every` iterations, and the last iteration.
  long record_every = 1;
  // Abort when d(x_t, x_0) + d(y_t, y_0) exceeds this.
  double divergence_cap = 1e6;
  // Stop early once the last-iterate gradient norm recorded by `recorder`
  // falls to this level (0 disables).
  double stop_grad_norm = 0.0;
  Recorder recorder;
  // Called after every step; used by tests and contraction checks.
  std::function<void(const SolverState&)> on_step;
};

struct RunResult {
  std::vector<TraceRow> rows;
  SolverState final_state;
  std::optional<std::string> failure;
  long failed_iteration = -1;
  bool ok() const { return !failure.has_value(); }
};

// Runs T iterations from (x0, y0). Geometry and numeric errors during the
// iteration end the run; the rows recorded so far are kept and the failure is
// reported in the result. Throws std::invalid_argument for T < 1 or invalid
// initial points.
RunResult run(const SaddleProblem& p, SolverKind kind,
              const StepSchedule& schedule, long T, const Point& x0,
              const Point& y0, const RunOptions& opts);

}  // namespace rminmax
