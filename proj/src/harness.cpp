#include "rminmax/harness.hpp"

#include "rminmax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#ifndef RMINMAX_VERSION
#define RMINMAX_VERSION "0.0.0"
#endif

namespace rminmax {

const char* library_version() { return RMINMAX_VERSION; }

namespace {

constexpr std::uint64_t kInitStream = 3;
constexpr std::uint64_t kEstimateStream = 4;
constexpr std::uint64_t kBatchStream = 5;

const std::set<std::string> kProblems{"rpca", "karcher", "bilinear"};
const std::set<std::string> kSchedules{
    "constant", "practical", "rceg-scsc", "srceg-scsc",
    "srceg-cc", "rgda-scsc", "rgda-cc",   "srgda-cc"};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& key) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size()) {
    throw ConfigError("'" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

double get_double(const Json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_double(v.get<std::string>(), key);
  throw ConfigError("'" + key + "' expects a number");
}

long get_long(const Json& v, const std::string& key) {
  const double d = get_double(v, key);
  if (d != std::floor(d) || std::abs(d) > 9e15) {
    throw ConfigError("'" + key + "' expects an integer");
  }
  return static_cast<long>(d);
}

std::uint64_t get_seed(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const unsigned long long r = std::strtoull(s.c_str(), &end, 10);
    if (!s.empty() && s[0] != '-' && end == s.c_str() + s.size()) return r;
  }
  throw ConfigError("'" + key + "' expects a nonnegative integer");
}

std::string get_string(const Json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return fmt(v.get<double>());
  throw ConfigError("'" + key + "' expects a string");
}

bool get_bool(const Json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
  }
  throw ConfigError("'" + key + "' expects a boolean");
}

int get_int(const Json& v, const std::string& key) {
  const long r = get_long(v, key);
  if (r < std::numeric_limits<int>::min() ||
      r > std::numeric_limits<int>::max()) {
    throw ConfigError("'" + key + "' is out of range");
  }
  return static_cast<int>(r);
}

bool needs_ell(const RunConfig& cfg) {
  return (cfg.schedule == "constant" && cfg.eta == "auto") ||
         cfg.schedule == "practical" || cfg.schedule == "rceg-scsc" ||
         cfg.schedule == "srceg-scsc" || cfg.schedule == "srceg-cc";
}

bool needs_mu(const RunConfig& cfg) {
  return cfg.schedule == "rceg-scsc" || cfg.schedule == "srceg-scsc" ||
         cfg.schedule == "rgda-scsc";
}

bool needs_curvature(const RunConfig& cfg) {
  return cfg.schedule == "rceg-scsc" || cfg.schedule == "srceg-scsc" ||
         cfg.schedule == "srceg-cc" || cfg.schedule == "rgda-cc" ||
         cfg.schedule == "srgda-cc";
}

struct Built {
  SaddleProblem problem;
  Json instance_json;
  std::shared_ptr<const RpcaInstance> rpca;
};

Built build_problem(const RunConfig& cfg) {
  Built b;
  const std::uint64_t data_seed = cfg.data_seed.value_or(cfg.seed.value_or(0));
  std::optional<Json> pinned;
  if (!cfg.instance.empty()) pinned = read_json_file(cfg.instance);
  if (cfg.problem == "rpca") {
    auto inst = std::make_shared<RpcaInstance>(
        pinned ? rpca_instance_from_json(*pinned)
               : make_rpca_instance(cfg.d, cfg.n, cfg.alpha, data_seed));
    b.instance_json = instance_to_json(*inst);
    b.problem = rpca_problem(inst);
    b.rpca = inst;
  } else if (cfg.problem == "karcher") {
    auto inst = std::make_shared<KarcherInstance>(
        pinned ? karcher_instance_from_json(*pinned)
               : make_karcher_instance(cfg.d, cfg.big_n, cfg.gamma, data_seed));
    b.instance_json = instance_to_json(*inst);
    b.problem = karcher_problem(inst);
  } else {
    const BilinearInstance inst =
        pinned ? bilinear_instance_from_json(*pinned)
               : make_bilinear_instance(cfg.k);
    b.instance_json = instance_to_json(inst);
    b.problem = bilinear_problem(inst);
  }
  if (cfg.kappa_min || cfg.kappa_max) {
    auto apply = [&](Manifold& m) {
      m = m.with_curvature(cfg.kappa_min.value_or(m.kappa_min()),
                           cfg.kappa_max.value_or(m.kappa_max()));
    };
    apply(b.problem.m_min);
    apply(b.problem.m_max);
  }
  return b;
}

// Joint diameter used for the curvature constants: the configured value, or
// the larger descriptor bound when both are finite.
std::optional<double> joint_diameter(const RunConfig& cfg,
                                     const SaddleProblem& p) {
  if (cfg.diameter > 0.0) return cfg.diameter;
  const double d =
      std::max(p.m_min.diameter_bound(), p.m_max.diameter_bound());
  if (std::isfinite(d)) return d;
  return std::nullopt;
}

std::pair<Point, Point> load_pair(const SaddleProblem& p, const Json& j) {
  if (!j.is_object() || !j.contains("x") || !j.contains("y")) {
    throw ConfigError("point file needs keys \"x\" and \"y\"");
  }
  return {point_from_json(p.m_min, j.at("x")),
          point_from_json(p.m_max, j.at("y"))};
}

std::string schedule_kind_label(const RunConfig& cfg) { return cfg.schedule; }

}  // namespace

// --- Configuration -------------------------------------------------------------

void apply_json(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "problem") cfg.problem = get_string(v, key);
    else if (key == "d") cfg.d = get_int(v, key);
    else if (key == "n") cfg.n = get_int(v, key);
    else if (key == "N") cfg.big_n = get_int(v, key);
    else if (key == "k") cfg.k = get_int(v, key);
    else if (key == "alpha") cfg.alpha = get_double(v, key);
    else if (key == "gamma") cfg.gamma = get_double(v, key);
    else if (key == "seed") cfg.seed = get_seed(v, key);
    else if (key == "data-seed") cfg.data_seed = get_seed(v, key);
    else if (key == "solver") cfg.solver = get_string(v, key);
    else if (key == "schedule") cfg.schedule = get_string(v, key);
    else if (key == "eta") cfg.eta = get_string(v, key);
    else if (key == "ell") cfg.ell = get_double(v, key);
    else if (key == "mu") cfg.mu = get_double(v, key);
    else if (key == "L") cfg.big_l = get_double(v, key);
    else if (key == "a") cfg.a = get_double(v, key);
    else if (key == "D0") cfg.d0 = get_double(v, key);
    else if (key == "diameter") cfg.diameter = get_double(v, key);
    else if (key == "sigma") cfg.sigma = get_double(v, key);
    else if (key == "batch-size") cfg.batch_size = get_int(v, key);
    else if (key == "kappa-min") cfg.kappa_min = get_double(v, key);
    else if (key == "kappa-max") cfg.kappa_max = get_double(v, key);
    else if (key == "iters") cfg.iters = get_long(v, key);
    else if (key == "record-every") cfg.record_every = get_long(v, key);
    else if (key == "stop-grad-norm") cfg.stop_grad_norm = get_double(v, key);
    else if (key == "record-time") cfg.record_time = get_bool(v, key);
    else if (key == "estimate-samples") cfg.estimate_samples = get_int(v, key);
    else if (key == "estimate-radius") cfg.estimate_radius = get_double(v, key);
    else if (key == "out") cfg.out = get_string(v, key);
    else if (key == "reference") cfg.reference = get_string(v, key);
    else if (key == "init-from") cfg.init_from = get_string(v, key);
    else if (key == "instance") cfg.instance = get_string(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

Json config_to_json(const RunConfig& cfg) {
  Json j;
  j["problem"] = cfg.problem;
  j["d"] = cfg.d;
  j["n"] = cfg.n;
  j["N"] = cfg.big_n;
  j["k"] = cfg.k;
  j["alpha"] = cfg.alpha;
  j["gamma"] = cfg.gamma;
  if (cfg.seed) j["seed"] = *cfg.seed;
  if (cfg.data_seed) j["data-seed"] = *cfg.data_seed;
  j["solver"] = cfg.solver;
  j["schedule"] = cfg.schedule;
  j["eta"] = cfg.eta;
  j["ell"] = cfg.ell;
  j["mu"] = cfg.mu;
  j["L"] = cfg.big_l;
  j["a"] = cfg.a;
  j["D0"] = cfg.d0;
  j["diameter"] = cfg.diameter;
  j["sigma"] = cfg.sigma;
  j["batch-size"] = cfg.batch_size;
  if (cfg.kappa_min) j["kappa-min"] = *cfg.kappa_min;
  if (cfg.kappa_max) j["kappa-max"] = *cfg.kappa_max;
  j["iters"] = cfg.iters;
  j["record-every"] = cfg.record_every;
  j["stop-grad-norm"] = cfg.stop_grad_norm;
  j["record-time"] = cfg.record_time;
  j["estimate-samples"] = cfg.estimate_samples;
  j["estimate-radius"] = cfg.estimate_radius;
  if (!cfg.out.empty()) j["out"] = cfg.out;
  if (!cfg.reference.empty()) j["reference"] = cfg.reference;
  if (!cfg.init_from.empty()) j["init-from"] = cfg.init_from;
  if (!cfg.instance.empty()) j["instance"] = cfg.instance;
  return j;
}

void validate(const RunConfig& cfg) {
  if (!kProblems.count(cfg.problem)) {
    throw ConfigError("unknown problem '" + cfg.problem + "'");
  }
  if (!kSchedules.count(cfg.schedule)) {
    throw ConfigError("unknown schedule '" + cfg.schedule + "'");
  }
  SolverKind kind;
  try {
    kind = parse_solver_kind(cfg.solver);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!cfg.seed) throw ConfigError("a seed is required");
  if (cfg.d < 1 || cfg.n < 1 || cfg.big_n < 1 || cfg.k < 1) {
    throw ConfigError("dimensions and counts must be positive");
  }
  if (cfg.problem == "rpca" && !(cfg.alpha >= 0.0)) {
    throw ConfigError("alpha must be nonnegative");
  }
  if (cfg.problem == "karcher" && !(cfg.gamma > 0.0)) {
    throw ConfigError("gamma must be positive");
  }
  if (cfg.iters < 1) throw ConfigError("iters must be >= 1");
  if (cfg.record_every < 1) throw ConfigError("record-every must be >= 1");
  if (cfg.estimate_samples < 1) {
    throw ConfigError("estimate-samples must be >= 1");
  }
  if (!(cfg.estimate_radius > 0.0)) {
    throw ConfigError("estimate-radius must be positive");
  }
  for (const auto& [name, v] :
       {std::pair<const char*, double>{"ell", cfg.ell},
        {"mu", cfg.mu},
        {"L", cfg.big_l},
        {"a", cfg.a},
        {"D0", cfg.d0},
        {"diameter", cfg.diameter},
        {"sigma", cfg.sigma},
        {"stop-grad-norm", cfg.stop_grad_norm}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(name) + " must be finite and >= 0");
    }
  }
  if (cfg.batch_size < 0) throw ConfigError("batch-size must be >= 0");
  if (cfg.batch_size > 0) {
    if (cfg.problem != "rpca") {
      throw ConfigError("batch-size is only available for rpca");
    }
    if (cfg.batch_size > cfg.n && cfg.instance.empty()) {
      throw ConfigError("batch-size exceeds n");
    }
  }
  if (is_stochastic(kind)) {
    if (cfg.sigma == 0.0 && cfg.batch_size == 0) {
      throw ConfigError(cfg.solver + " requires sigma or batch-size");
    }
  } else if (cfg.sigma != 0.0 || cfg.batch_size != 0) {
    throw ConfigError(cfg.solver + " is deterministic; drop sigma/batch-size");
  }
  if (cfg.schedule == "constant" && cfg.eta != "auto") {
    const double eta = parse_double(cfg.eta, "eta");
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw ConfigError("eta must be positive");
    }
  } else if (cfg.schedule != "constant" && cfg.eta != "auto") {
    throw ConfigError("eta is only used by the constant schedule");
  }
  if (cfg.schedule == "practical" && !(cfg.a > 0.0)) {
    throw ConfigError("the practical schedule needs a > 0");
  }
  if ((cfg.schedule == "srceg-scsc" || cfg.schedule == "srceg-cc") &&
      !(cfg.sigma > 0.0)) {
    throw ConfigError(cfg.schedule + " needs sigma > 0");
  }
  if ((cfg.schedule == "rgda-cc" || cfg.schedule == "srgda-cc") &&
      !(cfg.big_l > 0.0)) {
    throw ConfigError(cfg.schedule + " needs L > 0");
  }
}

// --- Metrics -------------------------------------------------------------------

GradientNorms metric_gradient_norm(const SaddleProblem& p, const Point& x,
                                   const Point& y) {
  const GradPair g = p.grad(x, y);
  GradientNorms n;
  n.x_part = p.m_min.norm(x, g.x);
  n.y_part = p.m_max.norm(y, g.y);
  n.combined = std::hypot(n.x_part, n.y_part);
  return n;
}

double metric_distance_gap(const SaddleProblem& p, const Point& x,
                           const Point& y,
                           const std::pair<Point, Point>& reference) {
  const double dx = p.m_min.distance(x, reference.first);
  const double dy = p.m_max.distance(y, reference.second);
  return dx * dx + dy * dy;
}

Recorder make_recorder(const std::optional<std::pair<Point, Point>>& reference,
                       bool with_average) {
  return [reference, with_average](const SaddleProblem& p,
                                   const SolverState& s, TraceRow& row) {
    const GradientNorms last = metric_gradient_norm(p, s.x, s.y);
    row.grad_norm = last.combined;
    row.grad_norm_x = last.x_part;
    row.grad_norm_y = last.y_part;
    // Before the first average exists the average is the initial point.
    const bool has_avg = with_average && s.averaged > 0;
    const GradientNorms avg =
        has_avg ? metric_gradient_norm(p, s.x_bar, s.y_bar) : last;
    row.avg_grad_norm = avg.combined;
    row.avg_grad_norm_x = avg.x_part;
    row.avg_grad_norm_y = avg.y_part;
    if (reference) {
      row.dist_gap = metric_distance_gap(p, s.x, s.y, *reference);
      row.avg_dist_gap =
          has_avg ? metric_distance_gap(p, s.x_bar, s.y_bar, *reference)
                  : *row.dist_gap;
    }
  };
}

// --- Prepare / execute -----------------------------------------------------------

PreparedRun prepare(const RunConfig& cfg) {
  validate(cfg);
  PreparedRun prep;
  prep.config = cfg;
  prep.solver = parse_solver_kind(cfg.solver);
  try {
    Built built = build_problem(cfg);
    prep.problem = std::move(built.problem);
    prep.instance_json = std::move(built.instance_json);
    prep.rpca = built.rpca;
    if (cfg.batch_size > 0 && cfg.batch_size > built.rpca->n) {
      throw ConfigError("batch-size exceeds n");
    }

    const SaddleProblem& p = prep.problem;
    if (!cfg.init_from.empty()) {
      std::tie(prep.x0, prep.y0) = load_pair(p, read_json_file(cfg.init_from));
    } else {
      Rng rng = substream(*cfg.seed, kInitStream);
      prep.x0 = p.m_min.random_point(rng);
      prep.y0 = p.m_max.random_point(rng);
    }
    if (!cfg.reference.empty()) {
      prep.reference = reference_from_json(p, read_json_file(cfg.reference));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed JSON input: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  const SaddleProblem& p = prep.problem;
  SamplingOptions sampling;
  sampling.anchor = std::make_pair(prep.x0, prep.y0);
  sampling.radius = cfg.estimate_radius;

  prep.ell = cfg.ell;
  if (prep.ell == 0.0 && needs_ell(cfg)) {
    Rng rng = substream(*cfg.seed, kEstimateStream);
    try {
      prep.ell = estimate_smoothness(p, cfg.estimate_samples, rng, sampling);
    } catch (const std::domain_error& e) {
      throw ConfigError(std::string("smoothness estimate failed: ") + e.what());
    }
    prep.ell_estimated = true;
  }
  prep.mu = cfg.mu;
  if (prep.mu == 0.0 && needs_mu(cfg)) {
    Rng rng = substream(*cfg.seed, kEstimateStream + 100);
    prep.mu = estimate_strong_convexity(p, cfg.estimate_samples, rng, sampling);
    prep.mu_estimated = true;
    if (!(prep.mu > 0.0)) {
      throw ConfigError(
          "estimated strong convexity-concavity modulus is not positive (" +
          fmt(prep.mu) + "); the problem is not strongly convex-concave "
          "around the initial point");
    }
  }

  const std::optional<double> diam = joint_diameter(cfg, p);
  if (diam) {
    try {
      prep.constants = curvature_constants(p.m_min, p.m_max, *diam);
    } catch (const std::domain_error& e) {
      prep.constants_note = e.what();
    }
  } else {
    prep.constants_note = "no finite diameter bound configured";
  }
  if (needs_curvature(cfg)) {
    if (!prep.constants) {
      throw ConfigError("schedule " + cfg.schedule +
                        " needs curvature constants: " + prep.constants_note);
    }
    if (!(prep.constants->xi_lower_0 > 0.0)) {
      throw ConfigError("lower curvature constant is not positive at D = " +
                        fmt(*diam) + "; configure a smaller diameter");
    }
  }
  const double d0 = cfg.d0 > 0.0 ? cfg.d0 : (diam ? *diam * *diam : 0.0);
  auto require_d0 = [&] {
    if (!(d0 > 0.0)) throw ConfigError("schedule needs D0 or a diameter");
  };

  try {
    const std::string& s = cfg.schedule;
    if (s == "constant") {
      const double eta = cfg.eta == "auto" ? 1.0 / (2.0 * prep.ell)
                                           : parse_double(cfg.eta, "eta");
      prep.schedule = StepSchedule::constant(eta);
    } else if (s == "practical") {
      prep.schedule = StepSchedule::practical(prep.ell, cfg.a);
    } else if (s == "rceg-scsc") {
      prep.schedule = StepSchedule::constant(
          schedule_rceg_scsc(prep.ell, prep.mu, prep.constants->tau_0,
                             prep.constants->xi_lower_0));
    } else if (s == "srceg-scsc") {
      require_d0();
      prep.schedule = StepSchedule::constant(schedule_srceg_scsc(
          prep.ell, prep.mu, prep.constants->tau_0, prep.constants->xi_lower_0,
          cfg.iters, d0, cfg.sigma));
    } else if (s == "srceg-cc") {
      require_d0();
      prep.schedule = StepSchedule::constant(
          schedule_srceg_cc(prep.ell, prep.constants->tau_0,
                            prep.constants->xi_upper_0, cfg.iters, d0,
                            cfg.sigma));
    } else if (s == "rgda-scsc") {
      prep.schedule = StepSchedule::rgda_scsc(prep.mu);
    } else if (s == "rgda-cc") {
      require_d0();
      prep.schedule = StepSchedule::constant(schedule_rgda_cc(
          cfg.big_l, cfg.iters, d0, prep.constants->xi_upper_0));
    } else if (s == "srgda-cc") {
      require_d0();
      prep.schedule = StepSchedule::constant(
          schedule_srgda_cc(cfg.big_l, cfg.sigma, cfg.iters, d0,
                            prep.constants->xi_upper_0));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  return prep;
}

RunReport execute(const PreparedRun& prep) {
  const RunConfig& cfg = prep.config;
  // Each execution gets a fresh minibatch sampler so reruns are identical.
  SaddleProblem p = prep.problem;
  double injected_sigma = cfg.sigma;
  if (cfg.batch_size > 0) {
    attach_minibatch_oracle(p, prep.rpca, cfg.batch_size,
                            substream(*cfg.seed, kBatchStream));
    // With minibatches sigma only parameterizes the schedule.
    injected_sigma = 0.0;
  }

  RunReport report;
  RunOptions opts;
  opts.noise.sigma = injected_sigma;
  opts.seed = *cfg.seed;
  opts.record_every = cfg.record_every;
  opts.stop_grad_norm = cfg.stop_grad_norm;
  opts.recorder = make_recorder(prep.reference);
  opts.on_step = [&](const SolverState& s) {
    report.empirical_diameter =
        std::max({report.empirical_diameter, p.m_min.distance(s.x, prep.x0),
                  p.m_max.distance(s.y, prep.y0)});
  };
  report.result =
      run(p, prep.solver, *prep.schedule, cfg.iters, prep.x0, prep.y0, opts);
  return report;
}

// --- Trace CSV --------------------------------------------------------------------

namespace {

const std::vector<std::string> kBaseColumns{
    "iter",          "data_passes",     "grad_calls",     "eta",
    "grad_norm",     "grad_norm_x",     "grad_norm_y",    "avg_grad_norm",
    "avg_grad_norm_x", "avg_grad_norm_y"};

}  // namespace

std::string trace_header(const TraceColumns& cols) {
  std::string h;
  for (const auto& c : kBaseColumns) h += (h.empty() ? "" : ",") + c;
  if (cols.dist_gap) h += ",dist_gap,avg_dist_gap";
  if (cols.elapsed) h += ",elapsed_ms";
  return h;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows,
                     const TraceColumns& cols) {
  out << trace_header(cols) << '\n';
  for (const TraceRow& r : rows) {
    out << r.iter << ',' << fmt(r.data_passes) << ',' << r.grad_calls << ','
        << fmt(r.eta) << ',' << fmt(r.grad_norm) << ',' << fmt(r.grad_norm_x)
        << ',' << fmt(r.grad_norm_y) << ',' << fmt(r.avg_grad_norm) << ','
        << fmt(r.avg_grad_norm_x) << ',' << fmt(r.avg_grad_norm_y);
    if (cols.dist_gap) {
      out << ',' << (r.dist_gap ? fmt(*r.dist_gap) : "") << ','
          << (r.avg_dist_gap ? fmt(*r.avg_dist_gap) : "");
    }
    if (cols.elapsed) out << ',' << fmt(r.elapsed_ms);
    out << '\n';
  }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows,
                     const TraceColumns& cols) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_trace_csv(f, rows, cols);
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty trace");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  for (std::size_t i = 0; i < kBaseColumns.size(); ++i) {
    if (i >= header.size() || header[i] != kBaseColumns[i]) {
      throw std::invalid_argument("unexpected trace header");
    }
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != header.size()) {
      throw std::invalid_argument("trace row has wrong number of cells");
    }
    TraceRow r;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& h = header[i];
      const std::string& c = cells[i];
      if (h == "iter") r.iter = get_long(Json(c), h);
      else if (h == "grad_calls") r.grad_calls = get_long(Json(c), h);
      else if (h == "data_passes") r.data_passes = parse_double(c, h);
      else if (h == "eta") r.eta = parse_double(c, h);
      else if (h == "grad_norm") r.grad_norm = parse_double(c, h);
      else if (h == "grad_norm_x") r.grad_norm_x = parse_double(c, h);
      else if (h == "grad_norm_y") r.grad_norm_y = parse_double(c, h);
      else if (h == "avg_grad_norm") r.avg_grad_norm = parse_double(c, h);
      else if (h == "avg_grad_norm_x") r.avg_grad_norm_x = parse_double(c, h);
      else if (h == "avg_grad_norm_y") r.avg_grad_norm_y = parse_double(c, h);
      else if (h == "dist_gap") {
        if (!c.empty()) r.dist_gap = parse_double(c, h);
      } else if (h == "avg_dist_gap") {
        if (!c.empty()) r.avg_dist_gap = parse_double(c, h);
      } else if (h == "elapsed_ms") r.elapsed_ms = parse_double(c, h);
      else throw std::invalid_argument("unknown trace column '" + h + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read " + path);
  try {
    return read_trace_csv(f);
  } catch (const ConfigError& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

Json run_metadata(const PreparedRun& prep, const RunReport& report) {
  const RunConfig& cfg = prep.config;
  Json j;
  j["version"] = library_version();
  j["seed"] = *cfg.seed;
  j["data_seed"] = cfg.data_seed.value_or(*cfg.seed);
  j["config"] = config_to_json(cfg);
  j["problem"] = prep.problem.name;
  j["solver"] = to_string(prep.solver);
  j["schedule"] = {{"kind", schedule_kind_label(cfg)},
                   {"description", prep.schedule->describe()},
                   {"eta_0", prep.schedule->at(0)},
                   {"eta_last", prep.schedule->at(cfg.iters - 1)}};
  j["ell"] = prep.ell;
  j["ell_estimated"] = prep.ell_estimated;
  j["mu"] = prep.mu;
  j["mu_estimated"] = prep.mu_estimated;
  Json curv;
  curv["kappa_min"] =
      std::min(prep.problem.m_min.kappa_min(), prep.problem.m_max.kappa_min());
  curv["kappa_max"] =
      std::max(prep.problem.m_min.kappa_max(), prep.problem.m_max.kappa_max());
  if (prep.constants) {
    curv["diameter"] = prep.constants->at_diameter;
    curv["xi_lower_0"] = prep.constants->xi_lower_0;
    curv["xi_upper_0"] = prep.constants->xi_upper_0;
    curv["tau_0"] = prep.constants->tau_0;
  } else {
    curv["note"] = prep.constants_note;
  }
  j["curvature"] = curv;
  j["empirical_diameter"] = report.empirical_diameter;
  const RunResult& r = report.result;
  j["status"] = r.ok() ? "ok" : "numeric_failure";
  if (!r.ok()) {
    j["failure"] = *r.failure;
    j["failed_iteration"] = r.failed_iteration;
  }
  j["iterations"] = r.final_state.t;
  j["rows"] = r.rows.size();
  j["columns"] = trace_header({prep.reference.has_value(), cfg.record_time});
  return j;
}

void write_run_outputs(const PreparedRun& prep, const RunReport& report) {
  const RunConfig& cfg = prep.config;
  if (cfg.out.empty()) return;
  write_trace_csv(cfg.out, report.result.rows,
                  {prep.reference.has_value(), cfg.record_time});
  write_json_file(cfg.out + ".meta.json", run_metadata(prep, report));
}

// --- Grid search ------------------------------------------------------------------

bool GridReport::any_ok() const {
  return std::any_of(ranking.begin(), ranking.end(),
                     [](const GridCandidate& c) { return c.ok; });
}

GridReport grid_search(const RunConfig& cfg_in, const std::string& parameter,
                       const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("grid must not be empty");
  if (parameter != "ell" && parameter != "a") {
    throw ConfigError("grid parameter must be 'ell' or 'a'");
  }
  for (double v : grid) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("grid values must be positive");
    }
  }
  RunConfig base = cfg_in;
  base.out.clear();
  base.record_time = false;
  if (parameter == "ell") {
    if (base.schedule != "practical") {
      base.schedule = "constant";
      base.eta = "auto";
    }
  } else {
    base.schedule = "practical";
    base.eta = "auto";
    if (base.ell == 0.0) {
      // Estimate once; every candidate shares it.
      RunConfig probe = base;
      probe.a = grid.front();
      base.ell = prepare(probe).ell;
    }
  }

  GridReport report;
  for (double v : grid) {
    RunConfig c = base;
    if (parameter == "ell") c.ell = v;
    else c.a = v;
    GridCandidate cand;
    cand.parameter = parameter;
    cand.value = v;
    const PreparedRun prep = prepare(c);
    cand.eta_final = prep.schedule->at(c.iters - 1);
    const RunReport rr = execute(prep);
    const double g = rr.result.rows.back().grad_norm;
    cand.final_grad_norm = g;
    cand.ok = rr.result.ok() && std::isfinite(g);
    cand.status = rr.result.ok() ? (cand.ok ? "ok" : "non-finite")
                                 : *rr.result.failure;
    report.ranking.push_back(cand);
  }
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [](const GridCandidate& a, const GridCandidate& b) {
                     if (a.ok != b.ok) return a.ok;
                     if (!a.ok) return false;
                     if (a.final_grad_norm != b.final_grad_norm) {
                       return a.final_grad_norm < b.final_grad_norm;
                     }
                     return a.eta_final < b.eta_final;
                   });
  return report;
}

void write_grid_csv(const std::string& path, const GridReport& report) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "rank,parameter,value,eta_final,final_grad_norm,status\n";
  for (std::size_t i = 0; i < report.ranking.size(); ++i) {
    const GridCandidate& c = report.ranking[i];
    f << i + 1 << ',' << c.parameter << ',' << fmt(c.value) << ','
      << fmt(c.eta_final) << ',' << fmt(c.final_grad_norm) << ','
      << '"' << c.status << '"' << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

// --- Reference saddle ---------------------------------------------------------------

ReferenceResult solve_reference(const RunConfig& cfg_in, double tol) {
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  RunConfig cfg = cfg_in;
  cfg.solver = "rceg";
  cfg.sigma = 0.0;
  cfg.batch_size = 0;
  cfg.reference.clear();
  // cfg.init_from may name an earlier reference; it becomes the start, and
  // the start is kept unless the run improves on it.
  PreparedRun prep = prepare(cfg);
  const SaddleProblem& p = prep.problem;

  ReferenceResult res;
  if (p.known_saddle) {
    res.x = p.known_saddle->first;
    res.y = p.known_saddle->second;
    res.grad_norm = metric_gradient_norm(p, res.x, res.y).combined;
    res.exact = true;
    res.converged = true;
    return res;
  }

  const double start_norm = metric_gradient_norm(p, prep.x0, prep.y0).combined;
  RunOptions opts;
  opts.seed = *cfg.seed;
  opts.record_every = 1;
  opts.stop_grad_norm = tol;
  opts.recorder = make_recorder(std::nullopt, /*with_average=*/false);
  const RunResult r =
      run(p, prep.solver, *prep.schedule, cfg.iters, prep.x0, prep.y0, opts);

  // Best recorded iterate; the start counts when resuming.
  res.x = prep.x0;
  res.y = prep.y0;
  res.grad_norm = start_norm;
  res.iterations = 0;
  const double final_norm = r.rows.back().grad_norm;
  if (std::isfinite(final_norm) && final_norm < start_norm) {
    res.x = r.final_state.x;
    res.y = r.final_state.y;
    res.grad_norm = final_norm;
    res.iterations = r.final_state.t;
  }
  res.converged = res.grad_norm <= tol;
  return res;
}

Json reference_to_json(const SaddleProblem& p, const ReferenceResult& r) {
  Json j;
  j["problem"] = p.name;
  j["x"] = point_to_json(p.m_min, r.x);
  j["y"] = point_to_json(p.m_max, r.y);
  j["grad_norm"] = r.grad_norm;
  j["iterations"] = r.iterations;
  j["exact"] = r.exact;
  j["converged"] = r.converged;
  return j;
}

std::pair<Point, Point> reference_from_json(const SaddleProblem& p,
                                            const Json& j) {
  return load_pair(p, j);
}

// --- Plot data ----------------------------------------------------------------------

namespace {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

std::vector<Series> to_series(const std::vector<LabeledTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("no traces to plot");
  std::vector<Series> out;
  for (const LabeledTrace& t : traces) {
    if (t.rows.empty()) {
      throw std::invalid_argument("trace '" + t.label + "' is empty");
    }
    Series last{t.label + "-last", {}};
    Series avg{t.label + "-avg", {}};
    for (const TraceRow& r : t.rows) {
      last.points.emplace_back(r.data_passes, r.grad_norm);
      avg.points.emplace_back(r.data_passes, r.avg_grad_norm);
    }
    out.push_back(std::move(last));
    out.push_back(std::move(avg));
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    switch (c) {
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '&': r += "&amp;"; break;
      case '"': r += "&quot;"; break;
      default: r += c;
    }
  }
  return r;
}

std::string fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_plot_csv(std::ostream& out, const std::vector<LabeledTrace>& traces) {
  const std::vector<Series> series = to_series(traces);
  out << "series,data_passes,grad_norm\n";
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      out << s.name << ',' << fmt(x) << ',' << fmt(y) << '\n';
    }
  }
}

void write_plot_svg(std::ostream& out, const std::vector<LabeledTrace>& traces,
                    const std::string& title) {
  const std::vector<Series> series = to_series(traces);
  // Values at or below this floor are clipped on the log axis.
  constexpr double kFloor = 1e-300;
  double xmax = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (std::isfinite(x)) xmax = std::max(xmax, x);
      if (std::isfinite(y) && y > kFloor) {
        lo = std::min(lo, std::log10(y));
        hi = std::max(hi, std::log10(y));
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = -1.0;
    hi = 1.0;
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1.0;
  if (xmax <= 0.0) xmax = 1.0;

  const double w = 720, h = 480, ml = 80, mr = 170, mt = 40, mb = 60;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto sx = [&](double x) { return ml + pw * x / xmax; };
  auto sy = [&](double y) {
    const double ly = std::log10(std::max(y, kFloor));
    return mt + ph * (hi - std::clamp(ly, lo, hi)) / (hi - lo);
  };
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title)
      << "</text>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int decades = static_cast<int>(hi - lo);
  const int step = std::max(1, decades / 10);
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
    const double y = sy(std::pow(10.0, e));
    out << "<line x1=\"" << ml << "\" x2=\"" << ml + pw << "\" y1=\""
        << fixed(y, 2) << "\" y2=\"" << fixed(y, 2)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << fixed(y + 4, 2)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"12\">1e" << e << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmax * i / 5.0;
    out << "<text x=\"" << fixed(sx(xv), 2) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\">" << fmt(std::round(xv * 100) / 100)
        << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">data passes</text>\n";
  out << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\" transform=\"rotate(-90 18 " << mt + ph / 2
      << ")\">gradient norm</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const char* color = kColors[i % 8];
    const bool dashed = s.name.size() >= 4 &&
                        s.name.compare(s.name.size() - 4, 4, "-avg") == 0;
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\""
        << (dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      out << (first ? "" : " ") << fixed(sx(x), 2) << ',' << fixed(sy(y), 2);
      first = false;
    }
    out << "\"/>\n";
    const double ly = mt + 16 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << ml + pw + 12 << "\" x2=\"" << ml + pw + 40
        << "\" y1=\"" << ly << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\""
        << (dashed ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
    out << "<text x=\"" << ml + pw + 46 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace rminmax
