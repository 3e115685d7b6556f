#include "rminmax/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace rminmax {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("schedule: ") + name +
                                " must be positive and finite");
  }
}

void require_horizon(long T) {
  if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double schedule_rceg_scsc(double ell, double mu, double tau0, double xi_lower0) {
  require_positive(ell, "ell");
  require_positive(mu, "mu");
  require_positive(tau0, "tau0");
  require_positive(xi_lower0, "xi_lower0");
  if (tau0 < 1.0) throw std::invalid_argument("schedule: tau0 must be >= 1");
  if (xi_lower0 > 1.0) {
    throw std::invalid_argument("schedule: xi_lower0 must be <= 1");
  }
  return std::min(1.0 / (2.0 * ell * std::sqrt(tau0)), xi_lower0 / (2.0 * mu));
}

double schedule_srceg_scsc(double ell, double mu, double tau0, double xi_lower0,
                           long T, double d0, double sigma) {
  require_positive(ell, "ell");
  require_positive(mu, "mu");
  require_positive(tau0, "tau0");
  require_positive(xi_lower0, "xi_lower0");
  require_positive(d0, "D0");
  require_positive(sigma, "sigma");
  require_horizon(T);
  const double t = static_cast<double>(T);
  const double eta = std::min(1.0 / (24.0 * ell * std::sqrt(tau0)),
                              xi_lower0 / (2.0 * mu));
  // log T + log(mu^2 D0 / sigma^2), split so that tiny sigma does not overflow.
  const double log_arg =
      std::log(t) + 2.0 * std::log(mu) + std::log(d0) - 2.0 * std::log(sigma);
  if (log_arg <= 0.0) return eta;
  return std::min(eta, 2.0 * log_arg / (mu * t));
}

double schedule_srceg_cc(double ell, double tau0, double xi_upper0, long T,
                         double d0, double sigma) {
  require_positive(ell, "ell");
  require_positive(tau0, "tau0");
  require_positive(xi_upper0, "xi_upper0");
  require_positive(d0, "D0");
  require_positive(sigma, "sigma");
  require_horizon(T);
  return std::min(1.0 / (4.0 * ell * std::sqrt(tau0)),
                  std::sqrt(d0 / (xi_upper0 * static_cast<double>(T))) / sigma);
}

double schedule_rgda_scsc(double mu, long t) {
  require_positive(mu, "mu");
  if (t < 0) throw std::invalid_argument("schedule: t must be >= 0");
  if (t <= 2) return 1.0 / mu;
  return (2.0 / static_cast<double>(t)) / mu;
}

double schedule_rgda_cc(double big_l, long T, double d0, double xi_upper0) {
  require_positive(big_l, "L");
  require_positive(d0, "D0");
  require_positive(xi_upper0, "xi_upper0");
  require_horizon(T);
  return std::sqrt(d0 / (2.0 * xi_upper0 * static_cast<double>(T))) / big_l;
}

double schedule_srgda_cc(double big_l, double sigma, long T, double d0,
                         double xi_upper0) {
  if (!(big_l >= 0.0) || !(sigma >= 0.0) || !(big_l * big_l + sigma * sigma > 0)) {
    throw std::invalid_argument("schedule: need L, sigma >= 0 and L^2 + sigma^2 > 0");
  }
  require_positive(d0, "D0");
  require_positive(xi_upper0, "xi_upper0");
  require_horizon(T);
  return 0.5 * std::sqrt(d0 / (xi_upper0 * (big_l * big_l + sigma * sigma) *
                               static_cast<double>(T)));
}

double schedule_practical(double ell, double a, long t) {
  require_positive(ell, "ell");
  require_positive(a, "a");
  if (t < 0) throw std::invalid_argument("schedule: t must be >= 0");
  const double cap = 1.0 / (2.0 * ell);
  if (t == 0) return cap;
  return std::min(cap, a / static_cast<double>(t));
}

StepSchedule StepSchedule::constant(double eta) {
  require_positive(eta, "eta");
  return StepSchedule(Constant{eta});
}

StepSchedule StepSchedule::rgda_scsc(double mu) {
  require_positive(mu, "mu");
  return StepSchedule(RgdaScsc{mu});
}

StepSchedule StepSchedule::practical(double ell, double a) {
  require_positive(ell, "ell");
  require_positive(a, "a");
  return StepSchedule(Practical{ell, a});
}

StepSchedule StepSchedule::explicit_table(std::vector<double> table) {
  if (table.empty()) throw std::invalid_argument("schedule: empty table");
  for (double v : table) require_positive(v, "table entry");
  return StepSchedule(Explicit{std::move(table)});
}

double StepSchedule::at(long t) const {
  struct Visitor {
    long t;
    double operator()(const Constant& c) const { return c.eta; }
    double operator()(const RgdaScsc& r) const { return schedule_rgda_scsc(r.mu, t); }
    double operator()(const Practical& p) const {
      return schedule_practical(p.ell, p.a, t);
    }
    double operator()(const Explicit& e) const {
      if (t < 0 || static_cast<std::size_t>(t) >= e.table.size()) {
        throw std::out_of_range("schedule: iteration past explicit table");
      }
      return e.table[static_cast<std::size_t>(t)];
    }
  };
  return std::visit(Visitor{t}, kind_);
}

std::string StepSchedule::describe() const {
  struct Visitor {
    std::string operator()(const Constant& c) const {
      return "constant(eta=" + fmt(c.eta) + ")";
    }
    std::string operator()(const RgdaScsc& r) const {
      return "rgda-scsc(mu=" + fmt(r.mu) + ")";
    }
    std::string operator()(const Practical& p) const {
      return "practical(ell=" + fmt(p.ell) + ",a=" + fmt(p.a) + ")";
    }
    std::string operator()(const Explicit& e) const {
      return "explicit(n=" + std::to_string(e.table.size()) + ")";
    }
  };
  return std::visit(Visitor{}, kind_);
}

}  // namespace rminmax
