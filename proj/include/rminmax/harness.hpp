#pragma once

#include "rminmax/curvature.hpp"
#include "rminmax/problems.hpp"
#include "rminmax/serialize.hpp"
#include "rminmax/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rminmax {

const char* library_version();

// Invalid or inconsistent configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to reproduce one experiment. Mirrors the CLI flags; a
/// JSON config file uses the same keys (see `apply_json`).
struct RunConfig {
  std::string problem = "rpca";  // rpca | karcher | bilinear
  int d = 25;                    // matrix / vector dimension
  int n = 40;                    // RPCA sample count
  int big_n = 5;                 // Karcher anchor count
  int k = 1;                     // bilinear dimension
  double alpha = 1.0;
  double gamma = 2.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> data_seed;  // defaults to seed

  std::string solver = "rceg";
  // constant | practical | rceg-scsc | srceg-scsc | srceg-cc | rgda-scsc |
  // rgda-cc | srgda-cc
  std::string schedule = "constant";
  std::string eta = "auto";  // number, or "auto" = 1 / (2 ell)
  double ell = 0.0;          // 0: estimate
  double mu = 0.0;           // 0: estimate
  double big_l = 0.0;
  double a = 0.0;
  double d0 = 0.0;        // 0: squared diameter
  double diameter = 0.0;  // 0: descriptor bound when usable
  double sigma = 0.0;
  int batch_size = 0;
  std::optional<double> kappa_min;
  std::optional<double> kappa_max;

  long iters = 100;
  long record_every = 1;
  double stop_grad_norm = 0.0;
  bool record_time = false;
  int estimate_samples = 300;
  double estimate_radius = 0.1;

  std::string out;
  std::string reference;  // reference-saddle JSON; enables distance gaps
  std::string init_from;  // JSON with initial points {"x": .., "y": ..}
  std::string instance;   // pinned instance JSON
};

// Overrides fields present in `j`. Unknown keys are a ConfigError.
void apply_json(RunConfig& cfg, const Json& j);
Json config_to_json(const RunConfig& cfg);
// Cross-field checks; throws ConfigError.
void validate(const RunConfig& cfg);

struct GradientNorms {
  double combined = 0.0;
  double x_part = 0.0;
  double y_part = 0.0;
};

GradientNorms metric_gradient_norm(const SaddleProblem& p, const Point& x,
                                   const Point& y);
double metric_distance_gap(const SaddleProblem& p, const Point& x,
                           const Point& y,
                           const std::pair<Point, Point>& reference);

// Problem instance plus everything derived from the configuration.
struct PreparedRun {
  RunConfig config;
  SaddleProblem problem;
  SolverKind solver = SolverKind::kRceg;
  Point x0, y0;
  std::optional<std::pair<Point, Point>> reference;
  std::optional<StepSchedule> schedule;
  double ell = 0.0;  // used value (configured or estimated)
  double mu = 0.0;
  bool ell_estimated = false;
  bool mu_estimated = false;
  std::optional<CurvatureConstants> constants;
  std::string constants_note;
  Json instance_json;
  std::shared_ptr<const RpcaInstance> rpca;  // set for rpca problems
};

// Builds instance, problem, initial points, constants and schedule.
// Throws ConfigError.
PreparedRun prepare(const RunConfig& cfg);

struct RunReport {
  RunResult result;
  double empirical_diameter = 0.0;
};

// Standard recorder: gradient norms of last and averaged iterates, distance
// gaps when a reference is known.
Recorder make_recorder(const std::optional<std::pair<Point, Point>>& reference,
                       bool with_average = true);

RunReport execute(const PreparedRun& prep);

// --- Trace CSV ---------------------------------------------------------------

struct TraceColumns {
  bool dist_gap = false;
  bool elapsed = false;
};

std::string trace_header(const TraceColumns& cols);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows,
                     const TraceColumns& cols);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows,
                     const TraceColumns& cols);
std::vector<TraceRow> read_trace_csv(std::istream& in);
std::vector<TraceRow> read_trace_csv(const std::string& path);

Json run_metadata(const PreparedRun& prep, const RunReport& report);

// Writes the trace CSV to cfg.out and metadata to cfg.out + ".meta.json".
void write_run_outputs(const PreparedRun& prep, const RunReport& report);

// --- Grid search -------------------------------------------------------------

struct GridCandidate {
  std::string parameter;  // "ell" or "a"
  double value = 0.0;
  double eta_final = 0.0;  // step size at the last iteration
  double final_grad_norm = 0.0;
  bool ok = false;
  std::string status;
};

struct GridReport {
  std::vector<GridCandidate> ranking;  // best first
  bool any_ok() const;
};

// Runs each candidate for cfg.iters iterations and ranks by final
// last-iterate gradient norm; ties go to the smaller step size. `parameter`
// is "ell" (constant eta = 1/(2 ell), or the cap of the practical schedule)
// or "a" (practical schedule).
GridReport grid_search(const RunConfig& cfg, const std::string& parameter,
                       const std::vector<double>& grid);
void write_grid_csv(const std::string& path, const GridReport& report);

// --- Reference saddle ----------------------------------------------------------

struct ReferenceResult {
  Point x, y;
  double grad_norm = 0.0;
  long iterations = 0;
  bool exact = false;
  bool converged = false;
};

// Runs RCEG (schedule from cfg) until the gradient norm reaches `tol` or
// cfg.iters iterations pass. Known closed-form saddles are returned exactly.
// With cfg.init_from pointing at an earlier reference the run continues from
// it and the better of the two is kept.
ReferenceResult solve_reference(const RunConfig& cfg, double tol);
Json reference_to_json(const SaddleProblem& p, const ReferenceResult& r);
std::pair<Point, Point> reference_from_json(const SaddleProblem& p,
                                            const Json& j);

// --- Plot data -----------------------------------------------------------------

struct LabeledTrace {
  std::string label;  // e.g. "RCEG"
  std::vector<TraceRow> rows;
};

// Long-format rows: series, data_passes, grad_norm. Each trace contributes
// "<label>-last" and "<label>-avg".
void write_plot_csv(std::ostream& out, const std::vector<LabeledTrace>& traces);
// Static SVG line chart with a log-scale y axis.
void write_plot_svg(std::ostream& out, const std::vector<LabeledTrace>& traces,
                    const std::string& title);

}  // namespace rminmax
