#include "rminmax/harness.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rminmax;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test.
class Scratch {
 public:
  Scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("rminmax_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(RMINMAX_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig bilinear_config() {
  RunConfig cfg;
  cfg.problem = "bilinear";
  cfg.k = 2;
  cfg.seed = 1;
  cfg.eta = "0.1";
  cfg.iters = 50;
  return cfg;
}

TraceRow sample_row(long i) {
  TraceRow r;
  r.iter = i;
  r.data_passes = 0.1 * static_cast<double>(i);
  r.grad_calls = 2 * i;
  r.eta = 1.0 / 3.0;
  r.grad_norm = std::exp(-0.37 * static_cast<double>(i));
  r.grad_norm_x = 1e-300 * static_cast<double>(i + 1);
  r.grad_norm_y = std::nextafter(1.0, 2.0);
  r.avg_grad_norm = 0.1 + 0.2;
  r.avg_grad_norm_x = 5e-324;
  r.avg_grad_norm_y = 12345.678901234567;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics.

TEST(Metrics, BilinearGradientNorm) {
  const SaddleProblem p = bilinear_problem(make_bilinear_instance(1));
  const GradientNorms g = metric_gradient_norm(p, vec({1}), vec({1}));
  EXPECT_NEAR(g.combined, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(g.x_part, 1.0);
  EXPECT_EQ(g.y_part, 1.0);
}

TEST(Metrics, DistanceGap) {
  const SaddleProblem p = bilinear_problem(make_bilinear_instance(1));
  EXPECT_NEAR(metric_distance_gap(p, vec({1}), vec({1}), {vec({0}), vec({0})}),
              2.0, 1e-15);
  EXPECT_EQ(metric_distance_gap(p, vec({0}), vec({0}), {vec({0}), vec({0})}), 0.0);
}

// ---------------------------------------------------------------------------
// Configuration.

TEST(Config, JsonAcceptsNumbersAndStrings) {
  RunConfig cfg;
  apply_json(cfg, Json{{"problem", "karcher"}, {"d", "3"}, {"gamma", 4.5},
                       {"seed", 9}, {"eta", 0.25}, {"record-time", "true"}});
  EXPECT_EQ(cfg.problem, "karcher");
  EXPECT_EQ(cfg.d, 3);
  EXPECT_EQ(cfg.gamma, 4.5);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.eta, "0.25");
  EXPECT_TRUE(cfg.record_time);
}

TEST(Config, UnknownKeyRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_json(cfg, Json{{"etta", 1}}), ConfigError);
  EXPECT_THROW(apply_json(cfg, Json{{"d", "five"}}), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  RunConfig cfg = bilinear_config();
  cfg.kappa_max = 0.5;
  cfg.reference = "ref.json";
  RunConfig back;
  apply_json(back, config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(Config, ValidateCatchesInconsistencies) {
  RunConfig cfg = bilinear_config();
  EXPECT_NO_THROW(validate(cfg));
  RunConfig no_seed = cfg;
  no_seed.seed.reset();
  EXPECT_THROW(validate(no_seed), ConfigError);
  RunConfig noisy = cfg;
  noisy.solver = "srceg";
  EXPECT_THROW(validate(noisy), ConfigError);  // no sigma, no batch
  noisy.sigma = 0.1;
  EXPECT_NO_THROW(validate(noisy));
  RunConfig det_sigma = cfg;
  det_sigma.sigma = 0.1;
  EXPECT_THROW(validate(det_sigma), ConfigError);
  RunConfig practical = cfg;
  practical.schedule = "practical";
  practical.eta = "auto";
  EXPECT_THROW(validate(practical), ConfigError);  // needs a > 0
  practical.a = 1.0;
  EXPECT_NO_THROW(validate(practical));
  practical.eta = "0.1";
  EXPECT_THROW(validate(practical), ConfigError);
  RunConfig bad_problem = cfg;
  bad_problem.problem = "lasso";
  EXPECT_THROW(validate(bad_problem), ConfigError);
  RunConfig batch = cfg;
  batch.solver = "srgda";
  batch.batch_size = 2;
  EXPECT_THROW(validate(batch), ConfigError);  // minibatches are RPCA only
}

TEST(Prepare, NonPositiveModulusRejected) {
  RunConfig cfg;
  cfg.problem = "karcher";
  cfg.d = 2;
  cfg.big_n = 3;
  cfg.gamma = 0.5;
  cfg.seed = 1;
  cfg.schedule = "rceg-scsc";
  cfg.diameter = 1.0;
  EXPECT_THROW(prepare(cfg), ConfigError);
}

TEST(Prepare, TheoremScheduleUsesCurvatureConstants) {
  RunConfig cfg;
  cfg.problem = "karcher";
  cfg.d = 2;
  cfg.big_n = 3;
  cfg.gamma = 5.0;
  cfg.seed = 1;
  cfg.schedule = "rceg-scsc";
  cfg.diameter = 2.0;
  const PreparedRun prep = prepare(cfg);
  ASSERT_TRUE(prep.constants.has_value());
  EXPECT_EQ(prep.constants->at_diameter, 2.0);
  EXPECT_NEAR(prep.constants->xi_upper_0, 2.0 * std::sqrt(0.5) /
                                              std::tanh(2.0 * std::sqrt(0.5)),
              1e-14);
  ASSERT_TRUE(prep.schedule.has_value());
  const double expect =
      std::min(1.0 / (2.0 * prep.ell * std::sqrt(prep.constants->tau_0)),
               prep.constants->xi_lower_0 / (2.0 * prep.mu));
  EXPECT_NEAR(prep.schedule->at(0), expect, 1e-15);
  EXPECT_GT(prep.mu, 0.0);
}

TEST(Prepare, AutoEtaIsHalfInverseSmoothness) {
  RunConfig cfg = bilinear_config();
  cfg.eta = "auto";
  const PreparedRun prep = prepare(cfg);
  EXPECT_TRUE(prep.ell_estimated);
  EXPECT_NEAR(prep.ell, 1.0, 1e-9);
  EXPECT_EQ(prep.schedule->at(7), 1.0 / (2.0 * prep.ell));
}

TEST(Prepare, SeedDeterminesInitialPoints) {
  RunConfig cfg;
  cfg.d = 4;
  cfg.n = 5;
  cfg.seed = 3;
  cfg.eta = "0.1";
  const PreparedRun a = prepare(cfg), b = prepare(cfg);
  EXPECT_EQ(a.x0, b.x0);
  EXPECT_EQ(a.y0, b.y0);
  cfg.seed = 4;
  EXPECT_NE(prepare(cfg).x0, a.x0);
}

// ---------------------------------------------------------------------------
// Execution and traces.

TEST(Execute, BilinearWithReference) {
  Scratch s;
  RunConfig cfg = bilinear_config();
  const SaddleProblem p = bilinear_problem(make_bilinear_instance(2));
  ReferenceResult ref;
  ref.x = vec({0, 0});
  ref.y = vec({0, 0});
  write_json_file(s.path("ref.json"), reference_to_json(p, ref));
  cfg.reference = s.path("ref.json");
  const PreparedRun prep = prepare(cfg);
  const RunReport rep = execute(prep);
  ASSERT_TRUE(rep.result.ok());
  ASSERT_EQ(rep.result.rows.size(), 51u);
  const TraceRow& first = rep.result.rows.front();
  const TraceRow& last = rep.result.rows.back();
  ASSERT_TRUE(first.dist_gap.has_value());
  EXPECT_NEAR(*first.dist_gap,
              prep.x0.leaf.squaredNorm() + prep.y0.leaf.squaredNorm(), 1e-12);
  EXPECT_LT(*last.dist_gap, *first.dist_gap);
  EXPECT_GT(rep.empirical_diameter, 0.0);
}

TEST(TraceCsv, RoundTripIsExact) {
  std::vector<TraceRow> rows;
  for (long i = 0; i < 5; ++i) rows.push_back(sample_row(i));
  rows[2].dist_gap = 1.0 / 7.0;
  rows[2].avg_dist_gap = 2.0 / 7.0;
  rows[3].dist_gap = 0.5;
  rows[3].avg_dist_gap = 0.25;
  for (auto& r : rows) r.elapsed_ms = 0.125;
  std::stringstream ss;
  write_trace_csv(ss, rows, {true, true});
  const std::vector<TraceRow> back = read_trace_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].iter, rows[i].iter);
    EXPECT_EQ(back[i].data_passes, rows[i].data_passes);
    EXPECT_EQ(back[i].grad_calls, rows[i].grad_calls);
    EXPECT_EQ(back[i].eta, rows[i].eta);
    EXPECT_EQ(back[i].grad_norm, rows[i].grad_norm);
    EXPECT_EQ(back[i].grad_norm_x, rows[i].grad_norm_x);
    EXPECT_EQ(back[i].grad_norm_y, rows[i].grad_norm_y);
    EXPECT_EQ(back[i].avg_grad_norm, rows[i].avg_grad_norm);
    EXPECT_EQ(back[i].avg_grad_norm_x, rows[i].avg_grad_norm_x);
    EXPECT_EQ(back[i].avg_grad_norm_y, rows[i].avg_grad_norm_y);
    EXPECT_EQ(back[i].dist_gap, rows[i].dist_gap);
    EXPECT_EQ(back[i].avg_dist_gap, rows[i].avg_dist_gap);
    EXPECT_EQ(back[i].elapsed_ms, rows[i].elapsed_ms);
  }
}

TEST(TraceCsv, HeaderColumns) {
  EXPECT_EQ(trace_header({false, false}),
            "iter,data_passes,grad_calls,eta,grad_norm,grad_norm_x,grad_norm_y,"
            "avg_grad_norm,avg_grad_norm_x,avg_grad_norm_y");
  EXPECT_NE(trace_header({true, false}).find(",dist_gap,avg_dist_gap"),
            std::string::npos);
  EXPECT_NE(trace_header({false, true}).find("elapsed_ms"), std::string::npos);
}

TEST(TraceCsv, MalformedRejected) {
  std::stringstream ss("iter,grad_norm\n1,abc\n");
  EXPECT_THROW(read_trace_csv(ss), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Grid search.

TEST(Grid, SingletonReturnsItself) {
  const GridReport r = grid_search(bilinear_config(), "ell", {1.0});
  ASSERT_EQ(r.ranking.size(), 1u);
  EXPECT_EQ(r.ranking[0].value, 1.0);
  EXPECT_EQ(r.ranking[0].eta_final, 0.5);
  EXPECT_TRUE(r.any_ok());
}

TEST(Grid, DivergentCandidateRanksLast) {
  RunConfig cfg = bilinear_config();
  cfg.solver = "rgda";
  cfg.iters = 200;
  // eta = 5 blows up under descent ascent; eta = 0.05 grows slowly.
  const GridReport r = grid_search(cfg, "ell", {0.1, 10.0});
  ASSERT_EQ(r.ranking.size(), 2u);
  EXPECT_EQ(r.ranking[0].value, 10.0);
  EXPECT_TRUE(r.ranking[0].ok);
  EXPECT_FALSE(r.ranking[1].ok);
}

TEST(Grid, PracticalParameter) {
  RunConfig cfg = bilinear_config();
  cfg.eta = "auto";
  const GridReport r = grid_search(cfg, "a", {0.5, 2.0, 8.0});
  ASSERT_EQ(r.ranking.size(), 3u);
  EXPECT_EQ(r.ranking[0].parameter, "a");
  for (std::size_t i = 1; i < r.ranking.size(); ++i) {
    EXPECT_LE(r.ranking[i - 1].final_grad_norm, r.ranking[i].final_grad_norm);
  }
}

TEST(Grid, CsvHasOneRowPerCandidate) {
  Scratch s;
  const GridReport r = grid_search(bilinear_config(), "ell", {1.0, 2.0, 4.0});
  write_grid_csv(s.path("grid.csv"), r);
  const std::string text = slurp(s.path("grid.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_EQ(text.rfind("rank,parameter,value,eta_final,final_grad_norm,status", 0), 0u);
}

// ---------------------------------------------------------------------------
// Reference saddles.

TEST(Reference, BilinearIsExactOrigin) {
  const ReferenceResult r = solve_reference(bilinear_config(), 1e-10);
  EXPECT_TRUE(r.exact);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x, vec({0, 0}));
  EXPECT_EQ(r.y, vec({0, 0}));
  EXPECT_EQ(r.grad_norm, 0.0);
}

TEST(Reference, RerunNeverWorsens) {
  Scratch s;
  RunConfig cfg;
  cfg.problem = "karcher";
  cfg.d = 2;
  cfg.big_n = 3;
  cfg.gamma = 4.0;
  cfg.seed = 2;
  cfg.eta = "0.02";
  cfg.iters = 200;
  const ReferenceResult first = solve_reference(cfg, 1e-13);
  EXPECT_FALSE(first.exact);
  const PreparedRun prep = prepare(cfg);
  write_json_file(s.path("ref.json"), reference_to_json(prep.problem, first));
  RunConfig again = cfg;
  again.init_from = s.path("ref.json");
  const ReferenceResult second = solve_reference(again, 1e-13);
  EXPECT_LE(second.grad_norm, first.grad_norm);
  const auto loaded =
      reference_from_json(prep.problem, read_json_file(s.path("ref.json")));
  EXPECT_EQ(loaded.first, first.x);
  EXPECT_EQ(loaded.second, first.y);
}

// ---------------------------------------------------------------------------
// Plot output.

TEST(Plot, SeriesNames) {
  std::vector<TraceRow> rows{sample_row(0), sample_row(1)};
  std::stringstream ss;
  write_plot_csv(ss, {{"RCEG", rows}, {"RGDA", rows}});
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("series,data_passes,grad_norm\n", 0), 0u);
  for (const char* name : {"RCEG-last,", "RCEG-avg,", "RGDA-last,", "RGDA-avg,"}) {
    EXPECT_NE(text.find(name), std::string::npos) << name;
  }
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}

TEST(Plot, SvgIsWellFormedAndLabeled) {
  std::vector<TraceRow> rows;
  for (long i = 0; i < 20; ++i) rows.push_back(sample_row(i));
  std::stringstream ss;
  write_plot_svg(ss, {{"RCEG", rows}}, "demo");
  const std::string svg = ss.str();
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("RCEG-last"), std::string::npos);
  EXPECT_NE(svg.find("RCEG-avg"), std::string::npos);
  EXPECT_NE(svg.find("demo"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Command line.

TEST(Cli, RunWritesTraceAndMetadata) {
  Scratch s;
  const std::string out = s.path("t.csv");
  ASSERT_EQ(cli("run --problem bilinear --k 2 --seed 1 --eta 0.1 --iters 20 --out " + out), 0);
  const std::string text = slurp(out);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 22);
  const Json meta = read_json_file(out + ".meta.json");
  EXPECT_EQ(meta.at("config").at("problem"), "bilinear");
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  Scratch s;
  const std::string args =
      "run --problem karcher --d 2 --N 2 --gamma 3 --seed 5 --solver srceg "
      "--sigma 0.1 --eta 0.01 --iters 30 --out ";
  const std::string out = s.path("t.csv");
  ASSERT_EQ(cli(args + out), 0);
  const std::string trace = slurp(out), meta = slurp(out + ".meta.json");
  ASSERT_EQ(cli(args + out), 0);
  EXPECT_EQ(slurp(out), trace);
  EXPECT_EQ(slurp(out + ".meta.json"), meta);
}

TEST(Cli, ConfigFileAndFlagOverride) {
  Scratch s;
  write_json_file(s.path("cfg.json"),
                  Json{{"problem", "bilinear"}, {"seed", 1}, {"eta", 0.1},
                       {"iters", 5}});
  ASSERT_EQ(cli("run --config " + s.path("cfg.json") + " --iters 3 --out " +
                s.path("t.csv")),
            0);
  const std::string text = slurp(s.path("t.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(Cli, ConfigErrorsExitTwoWithoutOutput) {
  Scratch s;
  const std::string out = s.path("t.csv");
  EXPECT_EQ(cli("run --problem bilinear --eta 0.1 --out " + out), 2);  // no seed
  EXPECT_EQ(cli("run --problem nope --seed 1 --out " + out), 2);
  EXPECT_EQ(cli("run --problem bilinear --seed 1 --iters abc --out " + out), 2);
  EXPECT_EQ(cli("run --bogus-flag 1"), 2);
  EXPECT_EQ(cli("run --problem karcher --d 2 --gamma 0.5 --seed 1 "
                "--schedule rceg-scsc --diameter 1 --out " + out),
            2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, NumericFailureExitsThreeWithPartialTrace) {
  Scratch s;
  const std::string out = s.path("t.csv");
  EXPECT_EQ(cli("run --problem bilinear --seed 1 --solver rgda --eta 5 "
                "--iters 1000 --out " + out),
            3);
  ASSERT_TRUE(fs::exists(out));
  const std::string text = slurp(out);
  EXPECT_GT(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Cli, GridReferenceAndPlot) {
  Scratch s;
  EXPECT_EQ(cli("grid-search --problem bilinear --seed 1 --iters 20 --param ell "
                "--grid 1,2,4 --out " + s.path("g.csv")),
            0);
  EXPECT_EQ(cli("reference --problem bilinear --seed 1 --out " + s.path("r.json")), 0);
  EXPECT_EQ(cli("run --problem bilinear --seed 1 --eta 0.1 --iters 10 --reference " +
                s.path("r.json") + " --out " + s.path("t.csv")),
            0);
  EXPECT_NE(slurp(s.path("t.csv")).find("dist_gap"), std::string::npos);
  EXPECT_EQ(cli("plot --trace RCEG=" + s.path("t.csv") + " --out " +
                s.path("p.csv") + " --svg " + s.path("p.svg")),
            0);
  EXPECT_NE(slurp(s.path("p.csv")).find("RCEG-avg"), std::string::npos);
  EXPECT_EQ(cli("plot --trace nolabel --out " + s.path("q.csv")), 2);
}
