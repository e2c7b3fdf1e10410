#include "fts/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fts {
namespace {

constexpr double kDivergenceThreshold = 1e6;
constexpr int kTrendPoints = 4;
constexpr double kFiniteRelTol = 1e-3;
// Slope growth factor that marks a still-diverging quotient sequence even
// when the magnitudes stay far below the hard threshold (slowly diverging
// slopes such as sqrt(log) never reach it on representable grids).
constexpr double kGrowthFactor = 2.0;
// Fitted exponents within this margin of {0, 1} are treated as outside the
// open interval: a linear field fits slope 1 up to rounding.
constexpr double kExponentMargin = 1e-6;

double sign_of(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

double checked_eval(const ScalarField& f, double x) {
  double v;
  try {
    v = f.h(x);
  } catch (const std::exception& e) {
    throw DomainError("scalar field evaluation failed at x=" + std::to_string(x) + ": " +
                      e.what());
  }
  if (!std::isfinite(v)) {
    throw DomainError("scalar field returned a non-finite value at x=" + std::to_string(x));
  }
  return v;
}

void validate_field(const ScalarField& f) {
  if (!f.h) throw std::invalid_argument("scalar field: missing h");
  if (!(f.domain_min < 0 && f.domain_max > 0)) {
    throw std::invalid_argument("scalar field: domain must contain 0 in its interior");
  }
  if (std::abs(checked_eval(f, 0.0)) > 1e-12) {
    throw std::invalid_argument("scalar field: h(0) must vanish");
  }
}

struct SideVerdict {
  bool finite = false;
  bool divergent = false;
};

SideVerdict classify(const std::vector<double>& q) {
  const auto n = q.size();
  SideVerdict v;
  const double q_last = q[n - 1];
  const double q_first = q[0];
  bool monotone_dec = true;
  for (std::size_t i = n - kTrendPoints; i + 1 < n; ++i) {
    if (!(q[i] > q[i + 1])) monotone_dec = false;
  }
  const double rel_change =
      std::abs(q[n - 1] - q[n - kTrendPoints]) / std::max(std::abs(q_last), 1e-300);
  v.finite = rel_change < kFiniteRelTol;
  v.divergent = monotone_dec && q_last < 0 &&
                (q_last < -kDivergenceThreshold ||
                 (rel_change >= kFiniteRelTol && std::abs(q_last) >= kGrowthFactor * std::abs(q_first)));
  return v;
}

}  // namespace

ScalarField power_law_field(double k, double alpha) {
  if (!(k > 0)) throw std::invalid_argument("power_law_field: require k > 0");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("power_law_field: require alpha in (0,1)");
  ScalarField f;
  f.h = [k, alpha](double x) { return -k * sign_of(x) * std::pow(std::abs(x), alpha); };
  f.domain_min = -1e6;
  f.domain_max = 1e6;
  return f;
}

ScalarField linear_field(double lambda) {
  ScalarField f;
  f.h = [lambda](double x) { return -lambda * x; };
  f.domain_min = -1e6;
  f.domain_max = 1e6;
  return f;
}

ScalarField gaussian_tail_field() {
  ScalarField f;
  f.h = [](double x) {
    if (x == 0.0) return 0.0;
    return -2.0 * x * std::sqrt(std::log(1.0 / std::abs(x)));
  };
  f.domain_min = -0.5;
  f.domain_max = 0.5;
  return f;
}

NecessaryConditionReport check_necessary_condition(const ScalarField& f, double window,
                                                   int num_samples) {
  validate_field(f);
  if (!(window > 0)) throw std::invalid_argument("check_necessary_condition: require window > 0");
  if (window > f.domain_max || -window < f.domain_min) {
    throw std::invalid_argument("check_necessary_condition: window exceeds field domain");
  }
  if (num_samples < 8) {
    throw std::invalid_argument("check_necessary_condition: require num_samples >= 8");
  }

  NecessaryConditionReport report;
  report.divergence_threshold = kDivergenceThreshold;
  report.finite_rel_tol = kFiniteRelTol;
  report.trend_points = kTrendPoints;

  auto sample_side = [&](double sign) {
    QuotientSeries s;
    s.x.reserve(num_samples);
    s.quotient.reserve(num_samples);
    for (int j = 0; j < num_samples; ++j) {
      const double x = sign * window * std::pow(2.0, -j);
      if (x == 0.0) throw DomainError("check_necessary_condition: grid underflowed to 0");
      s.x.push_back(x);
      s.quotient.push_back(checked_eval(f, x) / x);
    }
    return s;
  };
  report.positive_side = sample_side(1.0);
  report.negative_side = sample_side(-1.0);

  const SideVerdict pos = classify(report.positive_side.quotient);
  const SideVerdict neg = classify(report.negative_side.quotient);
  if (pos.divergent && neg.divergent) {
    report.verdict = SlopeVerdict::DivergentSlope;
  } else if (pos.finite && neg.finite) {
    report.verdict = SlopeVerdict::FiniteSlope;
  } else {
    report.verdict = SlopeVerdict::Inconclusive;
  }
  return report;
}

EnvelopeFit fit_sufficient_envelope(const ScalarField& f, const std::vector<double>& grid) {
  validate_field(f);
  if (grid.empty()) throw std::invalid_argument("fit_sufficient_envelope: empty grid");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  for (double x : sorted) {
    if (x == 0.0) throw std::invalid_argument("fit_sufficient_envelope: grid contains 0");
    if (x < f.domain_min || x > f.domain_max) {
      throw std::invalid_argument("fit_sufficient_envelope: grid exceeds field domain");
    }
    // Symmetry: the mirrored sample must be present (grids are built by negation).
    if (!std::binary_search(sorted.begin(), sorted.end(), -x)) {
      throw std::invalid_argument("fit_sufficient_envelope: grid not symmetric about 0");
    }
  }

  EnvelopeFit fit;
  std::vector<double> s(sorted.size());  // sign(x) h(x), must be < 0 for a valid envelope
  bool has_zero_sample = false;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    s[i] = sign_of(sorted[i]) * checked_eval(f, sorted[i]);
    if (s[i] > 0) {
      throw NotStableError("field increases |x| at x=" + std::to_string(sorted[i]));
    }
    if (s[i] == 0.0) has_zero_sample = true;
  }
  if (has_zero_sample) return fit;  // log fit undefined; no positive-k envelope

  // Least squares of ln(-s) against ln|x|.
  double su = 0, sy = 0, suu = 0, suy = 0;
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double u = std::log(std::abs(sorted[i]));
    const double y = std::log(-s[i]);
    su += u;
    sy += y;
    suu += u * u;
    suy += u * y;
  }
  const double denom = n * suu - su * su;
  if (denom == 0) throw std::invalid_argument("fit_sufficient_envelope: degenerate grid");
  const double alpha = (n * suy - su * sy) / denom;
  const double intercept = (sy - alpha * su) / n;
  fit.alpha = alpha;
  fit.k = std::exp(intercept);

  auto margin_at = [&](double k) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      m = std::max(m, s[i] + k * std::pow(std::abs(sorted[i]), alpha));
    }
    return m;
  };

  // Shrink k to the tightest value that keeps the bound valid at every sample.
  double k = fit.k;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    k = std::min(k, -s[i] / std::pow(std::abs(sorted[i]), alpha));
  }
  for (int guard = 0; guard < 64 && margin_at(k) > 0; ++guard) {
    k *= 1.0 - 4 * std::numeric_limits<double>::epsilon();
  }
  fit.k = k;
  fit.violation_margin = margin_at(k);
  fit.found = alpha > kExponentMargin && alpha < 1.0 - kExponentMargin && k > 0 &&
              fit.violation_margin <= 0;
  return fit;
}

double envelope_margin(const ScalarField& f, double k, double alpha,
                       const std::vector<double>& grid) {
  validate_field(f);
  double m = -std::numeric_limits<double>::infinity();
  for (double x : grid) {
    if (x == 0.0) continue;
    m = std::max(m, sign_of(x) * checked_eval(f, x) + k * std::pow(std::abs(x), alpha));
  }
  return m;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0 && hi > lo)) throw std::invalid_argument("log_grid: require 0 < lo < hi");
  if (points < 2) throw std::invalid_argument("log_grid: require points >= 2");
  std::vector<double> g(points);
  const double step = (std::log(hi) - std::log(lo)) / (points - 1);
  for (int i = 0; i < points; ++i) g[i] = std::exp(std::log(lo) + step * i);
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> symmetric_log_grid(double floor, double edge, int per_side) {
  std::vector<double> pos = log_grid(floor, edge, per_side);
  std::vector<double> g;
  g.reserve(2 * pos.size());
  for (double x : pos) {
    g.push_back(x);
    g.push_back(-x);
  }
  return g;
}

double analytic_settling_time(double k, double alpha, double x0) {
  if (!(k > 0)) throw std::invalid_argument("analytic_settling_time: require k > 0");
  if (!(alpha > 0 && alpha < 1)) {
    throw std::invalid_argument("analytic_settling_time: require alpha in (0,1)");
  }
  return std::pow(std::abs(x0), 1.0 - alpha) / (k * (1.0 - alpha));
}

double lyapunov_settling_bound(double v0, double c, double beta) {
  if (!(v0 >= 0)) throw std::invalid_argument("lyapunov_settling_bound: require V0 >= 0");
  if (!(c > 0)) throw std::invalid_argument("lyapunov_settling_bound: require c > 0");
  if (!(beta > 0 && beta < 1)) {
    throw std::invalid_argument("lyapunov_settling_bound: require beta in (0,1)");
  }
  return std::pow(v0, 1.0 - beta) / (c * (1.0 - beta));
}

LyapunovCheckReport verify_decrement_series(const std::vector<double>& times,
                                            const std::vector<double>& v, double c, double beta,
                                            double tol) {
  if (times.size() != v.size()) {
    throw std::invalid_argument("verify_decrement_series: length mismatch");
  }
  if (times.size() < 3) {
    throw std::invalid_argument("verify_decrement_series: need at least 3 samples");
  }
  if (!(c > 0)) throw std::invalid_argument("verify_decrement_series: require c > 0");
  if (!(beta > 0 && beta < 1)) {
    throw std::invalid_argument("verify_decrement_series: require beta in (0,1)");
  }
  LyapunovCheckReport report;
  report.c = c;
  report.beta = beta;
  report.tol = tol;
  report.max_residual = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0) throw std::invalid_argument("verify_decrement_series: V must be nonnegative");
  }
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == 0.0) continue;  // snapped or exactly at the target
    const double vdot = (v[i + 1] - v[i - 1]) / (times[i + 1] - times[i - 1]);
    const double residual = vdot + c * std::pow(v[i], beta);
    ++report.checked;
    report.max_residual = std::max(report.max_residual, residual);
    if (residual > tol) report.violations.emplace_back(times[i], residual);
  }
  return report;
}

LyapunovCheckReport verify_lyapunov_decrement(const Trajectory& traj,
                                              const std::function<double(const StateVector&)>& V,
                                              double c, double beta, double tol) {
  std::vector<double> v(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) v[i] = V(traj.states[i]);
  return verify_decrement_series(traj.times, v, c, beta, tol);
}

VectorFieldFn fts_flow(double k, double alpha, int n) {
  if (!(k > 0)) throw std::invalid_argument("fts_flow: require k > 0");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("fts_flow: require alpha in (0,1)");
  if (n < 1) throw std::invalid_argument("fts_flow: require n >= 1");
  return [k, alpha, n](const StateVector& x, double) -> StateVector {
    if (x.size() != n) throw std::invalid_argument("fts_flow: state dimension mismatch");
    const double r = x.norm();
    if (r == 0.0) return StateVector::Zero(n);
    return -k * std::pow(r, alpha - 1.0) * x;
  };
}

}  // namespace fts
