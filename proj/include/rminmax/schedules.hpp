#pragma once

#include <string>
#include <variant>
#include <vector>

namespace rminmax {

// Step sizes prescribed by the convergence theorems. All throw
// std::invalid_argument on nonpositive inputs.

// min{1 / (2 ell sqrt(tau0)), xi_lower0 / (2 mu)}.
double schedule_rceg_scsc(double ell, double mu, double tau0, double xi_lower0);

// min{1 / (24 ell sqrt(tau0)), xi_lower0 / (2 mu),
//     2 (log T + log(mu^2 D0 / sigma^2)) / (mu T)}.
// The last branch is treated as +inf when log(mu^2 D0 T / sigma^2) <= 0.
double schedule_srceg_scsc(double ell, double mu, double tau0, double xi_lower0,
                           long T, double d0, double sigma);

// min{1 / (4 ell sqrt(tau0)), sqrt(D0 / (xi_upper0 T)) / sigma}.
double schedule_srceg_cc(double ell, double tau0, double xi_upper0, long T,
                         double d0, double sigma);

// (1 / mu) min{1, 2 / t}; t <= 2 gives 1 / mu.
double schedule_rgda_scsc(double mu, long t);

// (1 / L) sqrt(D0 / (2 xi_upper0 T)).
double schedule_rgda_cc(double big_l, long T, double d0, double xi_upper0);

// (1/2) sqrt(D0 / (xi_upper0 (L^2 + sigma^2) T)); sigma may be 0.
double schedule_srgda_cc(double big_l, double sigma, long T, double d0,
                         double xi_upper0);

// min{1 / (2 ell), a / t}; t = 0 uses 1 / (2 ell).
double schedule_practical(double ell, double a, long t);

/// Per-iteration step size eta_t.
class StepSchedule {
 public:
  struct Constant {
    double eta;
  };
  struct RgdaScsc {
    double mu;
  };
  struct Practical {
    double ell;
    double a;
  };
  struct Explicit {
    std::vector<double> table;
  };

  static StepSchedule constant(double eta);
  static StepSchedule rgda_scsc(double mu);
  static StepSchedule practical(double ell, double a);
  static StepSchedule explicit_table(std::vector<double> table);

  // Step size at iteration t (0-based). Throws std::out_of_range past the end
  // of an explicit table.
  double at(long t) const;
  std::string describe() const;

 private:
  explicit StepSchedule(std::variant<Constant, RgdaScsc, Practical, Explicit> k)
      : kind_(std::move(k)) {}
  std::variant<Constant, RgdaScsc, Practical, Explicit> kind_;
};

}  // namespace rminmax
