// Command-line front end: run, grid-search, reference, plot.
//
// Exit codes: 0 ok, 2 configuration error (nothing written), 3 numeric
// failure (partial outputs written).

#include "rminmax/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using rminmax::ConfigError;
using rminmax::Json;
using rminmax::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// Flags shared by run, grid-search and reference. Values are kept as strings
// and merged over the optional --config file, so a JSON config and the
// command line use identical keys.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool record_time = false;
  CLI::Option* record_time_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "flat JSON config file");
    const std::vector<std::pair<std::string, std::string>> keys{
        {"problem", "rpca | karcher | bilinear"},
        {"d", "dimension"},
        {"n", "RPCA sample count"},
        {"N", "Karcher anchor count"},
        {"k", "bilinear dimension"},
        {"alpha", "RPCA robustness weight"},
        {"gamma", "Karcher anchor weight"},
        {"seed", "run seed"},
        {"data-seed", "instance seed (defaults to seed)"},
        {"solver", "rceg | srceg | rgda | srgda"},
        {"schedule",
         "constant | practical | rceg-scsc | srceg-scsc | srceg-cc | "
         "rgda-scsc | rgda-cc | srgda-cc"},
        {"eta", "constant step size or 'auto' = 1/(2 ell)"},
        {"ell", "smoothness constant (0: estimate)"},
        {"mu", "strong convexity modulus (0: estimate)"},
        {"L", "Lipschitz constant"},
        {"a", "practical schedule numerator"},
        {"D0", "initial squared distance bound (0: diameter^2)"},
        {"diameter", "domain diameter for curvature constants"},
        {"sigma", "noise level"},
        {"batch-size", "RPCA minibatch size"},
        {"kappa-min", "override lower curvature bound"},
        {"kappa-max", "override upper curvature bound"},
        {"iters", "iterations"},
        {"record-every", "record a row every k iterations"},
        {"stop-grad-norm", "stop once the gradient norm reaches this"},
        {"estimate-samples", "samples for constant estimation"},
        {"estimate-radius", "perturbation radius for constant estimation"},
        {"out", "output path"},
        {"reference", "reference saddle JSON"},
        {"init-from", "initial points JSON"},
        {"instance", "pinned instance JSON"},
    };
    for (const auto& [key, help] : keys) {
      options[key] = app->add_option("--" + key, values[key], help);
    }
    record_time_opt =
        app->add_flag("--record-time", record_time, "add elapsed_ms column");
  }

  RunConfig build() const {
    RunConfig cfg;
    if (!config_file.empty()) {
      try {
        rminmax::apply_json(cfg, rminmax::read_json_file(config_file));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    Json overrides = Json::object();
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) overrides[key] = values.at(key);
    }
    if (record_time_opt->count() > 0) overrides["record-time"] = record_time;
    rminmax::apply_json(cfg, overrides);
    return cfg;
  }
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cell.size()) throw ConfigError("bad grid value '" + cell + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("grid is empty");
  return out;
}

int cmd_run(const ConfigFlags& flags, const std::string& save_instance,
            const std::string& save_init) {
  const RunConfig cfg = flags.build();
  if (cfg.out.empty()) throw ConfigError("--out is required");
  const rminmax::PreparedRun prep = rminmax::prepare(cfg);
  if (cfg.reference.empty()) {
    std::cerr << "warning: no reference saddle; distance gaps omitted\n";
  }
  const rminmax::RunReport report = rminmax::execute(prep);
  rminmax::write_run_outputs(prep, report);
  if (!save_instance.empty()) {
    rminmax::write_json_file(save_instance, prep.instance_json);
  }
  if (!save_init.empty()) {
    Json j;
    j["x"] = rminmax::point_to_json(prep.problem.m_min, prep.x0);
    j["y"] = rminmax::point_to_json(prep.problem.m_max, prep.y0);
    rminmax::write_json_file(save_init, j);
  }
  const auto& r = report.result;
  if (!r.ok()) {
    std::cerr << "numeric failure at iteration " << r.failed_iteration << ": "
              << *r.failure << "\n";
    return kExitNumeric;
  }
  std::cout << "final grad_norm " << r.rows.back().grad_norm << " avg "
            << r.rows.back().avg_grad_norm << "\n";
  return kExitOk;
}

int cmd_grid(const ConfigFlags& flags, const std::string& param,
             const std::string& grid_text) {
  const RunConfig cfg = flags.build();
  if (cfg.out.empty()) throw ConfigError("--out is required");
  const std::vector<double> grid = parse_grid(grid_text);
  const rminmax::GridReport report = rminmax::grid_search(cfg, param, grid);
  rminmax::write_grid_csv(cfg.out, report);
  if (!report.any_ok()) {
    std::cerr << "every candidate failed\n";
    return kExitNumeric;
  }
  const auto& best = report.ranking.front();
  std::cout << "best " << best.parameter << " = " << best.value
            << " (final grad_norm " << best.final_grad_norm << ")\n";
  return kExitOk;
}

int cmd_reference(const ConfigFlags& flags, double tol) {
  const RunConfig cfg = flags.build();
  if (cfg.out.empty()) throw ConfigError("--out is required");
  const rminmax::ReferenceResult ref = rminmax::solve_reference(cfg, tol);
  const rminmax::PreparedRun prep = rminmax::prepare([&] {
    RunConfig c = cfg;
    c.solver = "rceg";
    c.sigma = 0.0;
    c.batch_size = 0;
    c.reference.clear();
    return c;
  }());
  rminmax::write_json_file(cfg.out,
                           rminmax::reference_to_json(prep.problem, ref));
  std::cout << "reference grad_norm " << ref.grad_norm
            << (ref.exact ? " (exact)" : "") << "\n";
  if (!ref.converged) {
    std::cerr << "tolerance not reached\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& traces, const std::string& out,
             const std::string& svg, const std::string& title) {
  if (traces.empty()) throw ConfigError("at least one --trace is required");
  if (out.empty()) throw ConfigError("--out is required");
  std::vector<rminmax::LabeledTrace> labeled;
  for (const std::string& t : traces) {
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("--trace expects LABEL=PATH, got '" + t + "'");
    }
    try {
      labeled.push_back(
          {t.substr(0, eq), rminmax::read_trace_csv(t.substr(eq + 1))});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + out);
    rminmax::write_plot_csv(f, labeled);
  }
  if (!svg.empty()) {
    std::ofstream f(svg, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + svg);
    rminmax::write_plot_svg(f, labeled, title);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian min-max solvers and experiment harness"};
  app.set_version_flag("--version", rminmax::library_version());
  app.require_subcommand(1);

  ConfigFlags run_flags, grid_flags, ref_flags;
  std::string save_instance, save_init;
  auto* run = app.add_subcommand("run", "run one solver and write a trace CSV");
  run_flags.attach(run);
  run->add_option("--save-instance", save_instance, "write the instance JSON");
  run->add_option("--save-init", save_init, "write the initial points JSON");

  std::string param = "ell", grid_text;
  auto* grid = app.add_subcommand("grid-search", "rank step-size parameters");
  grid_flags.attach(grid);
  grid->add_option("--param", param, "ell | a")->check(
      CLI::IsMember({"ell", "a"}));
  grid->add_option("--grid", grid_text, "comma-separated values")->required();

  double tol = 1e-10;
  auto* ref = app.add_subcommand("reference", "compute a reference saddle");
  ref_flags.attach(ref);
  ref->add_option("--tol", tol, "gradient-norm tolerance");

  std::vector<std::string> traces;
  std::string plot_out, plot_svg, title = "gradient norm vs data passes";
  auto* plot = app.add_subcommand("plot", "long-format plot data and SVG");
  plot->add_option("--trace", traces, "LABEL=trace.csv (repeatable)");
  plot->add_option("--out", plot_out, "plot CSV path");
  plot->add_option("--svg", plot_svg, "SVG path");
  plot->add_option("--title", title, "SVG title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags, save_instance, save_init);
    if (*grid) return cmd_grid(grid_flags, param, grid_text);
    if (*ref) return cmd_reference(ref_flags, tol);
    if (*plot) return cmd_plot(traces, plot_out, plot_svg, title);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
