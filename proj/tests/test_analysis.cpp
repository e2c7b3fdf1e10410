#include "doctest.h"

#include "fts/analysis.hpp"
#include "fts/integrator.hpp"

#include <cmath>

using fts::ScalarField;
using fts::SlopeVerdict;
using fts::StateVector;

TEST_SUITE_BEGIN("analysis");

TEST_CASE("necessary condition: fractional power law has a divergent slope") {
  auto report = fts::check_necessary_condition(fts::power_law_field(1.0, 0.5), 0.5);
  CHECK(report.verdict == SlopeVerdict::DivergentSlope);
  CHECK(report.positive_side.quotient.back() < -1e6);
  CHECK(report.negative_side.quotient.back() < -1e6);
}

TEST_CASE("necessary condition: linear field has a finite slope") {
  auto report = fts::check_necessary_condition(fts::linear_field(1.0), 0.5);
  CHECK(report.verdict == SlopeVerdict::FiniteSlope);
  CHECK(report.positive_side.quotient.back() == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("necessary condition: gaussian-tail field diverges despite its slow rate") {
  auto report = fts::check_necessary_condition(fts::gaussian_tail_field(), 0.5);
  CHECK(report.verdict == SlopeVerdict::DivergentSlope);
  // The slope grows like sqrt(log) and stays far above the hard threshold.
  CHECK(report.positive_side.quotient.back() > -100.0);
  CHECK(report.positive_side.quotient.back() < -10.0);
}

TEST_CASE("necessary condition: input validation") {
  CHECK_THROWS_AS(fts::check_necessary_condition(fts::gaussian_tail_field(), 0.7),
                  std::invalid_argument);
  CHECK_THROWS_AS(fts::check_necessary_condition(fts::linear_field(1.0), 0.5, 7),
                  std::invalid_argument);
  ScalarField bad;
  bad.h = [](double x) { return x == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(fts::check_necessary_condition(bad, 0.5), fts::DomainError);
  ScalarField offset;
  offset.h = [](double) { return 1e-3; };
  CHECK_THROWS_AS(fts::check_necessary_condition(offset, 0.5), std::invalid_argument);
}

TEST_CASE("envelope fit recovers an exact power law") {
  auto grid = fts::symmetric_log_grid(1e-8, 1.0);
  auto fit = fts::fit_sufficient_envelope(fts::power_law_field(1.0, 1.0 / 3.0), grid);
  REQUIRE(fit.found);
  CHECK(std::abs(fit.alpha - 1.0 / 3.0) <= 0.02);
  CHECK(std::abs(fit.k - 1.0) <= 0.05);
  CHECK(fit.violation_margin <= 0.0);
}

TEST_CASE("envelope fit rejects the linear field") {
  auto grid = fts::symmetric_log_grid(1e-6, 1.0);
  auto fit = fts::fit_sufficient_envelope(fts::linear_field(1.0), grid);
  CHECK(!fit.found);
  CHECK(fit.alpha == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("envelope fit isolates the dominant fractional term") {
  ScalarField f;
  f.h = [](double x) {
    return -2.0 * (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0)) * std::sqrt(std::abs(x)) - x;
  };
  f.domain_min = -2.0;
  f.domain_max = 2.0;
  auto fit = fts::fit_sufficient_envelope(f, fts::symmetric_log_grid(1e-8, 1.0));
  REQUIRE(fit.found);
  CHECK(fit.alpha == doctest::Approx(0.5).epsilon(0.1));
  CHECK(fit.k >= 1.9);
  CHECK(fit.k <= 2.5);
  CHECK(fit.violation_margin <= 0.0);
}

TEST_CASE("envelope fit raises on a destabilizing field") {
  ScalarField f;
  f.h = [](double x) { return x * std::abs(x); };
  CHECK_THROWS_AS(fts::fit_sufficient_envelope(f, fts::symmetric_log_grid(1e-4, 1.0)),
                  fts::NotStableError);
}

TEST_CASE("envelope fit: a flat spot forces found = false") {
  ScalarField f;
  f.h = [](double x) { return std::abs(x) < 1e-3 ? 0.0 : -x; };
  auto fit = fts::fit_sufficient_envelope(f, fts::symmetric_log_grid(1e-4, 1.0));
  CHECK(!fit.found);
}

TEST_CASE("envelope fit validates its grid") {
  auto f = fts::linear_field(1.0);
  CHECK_THROWS_AS(fts::fit_sufficient_envelope(f, {}), std::invalid_argument);
  CHECK_THROWS_AS(fts::fit_sufficient_envelope(f, {0.5, 0.25}), std::invalid_argument);
  CHECK_THROWS_AS(fts::fit_sufficient_envelope(f, {0.0, 0.5, -0.5}), std::invalid_argument);
}

TEST_CASE("gaussian-tail field: divergent slope yet no envelope survives refinement") {
  // This is the separation between the divergence requirement and the
  // power-law sufficiency: the checker flags the field, but any envelope
  // fitted on a bounded grid fails on scales below the grid floor.
  auto f = fts::gaussian_tail_field();
  CHECK(fts::check_necessary_condition(f, 0.5).verdict == SlopeVerdict::DivergentSlope);
  auto fit = fts::fit_sufficient_envelope(f, fts::symmetric_log_grid(1e-8, 0.45));
  if (fit.found) {
    const double refined =
        fts::envelope_margin(f, fit.k, fit.alpha, fts::symmetric_log_grid(1e-30, 0.45, 256));
    CHECK(refined > 0.0);
  }
  // A true power law survives the same refinement.
  auto pl = fts::power_law_field(1.5, 0.5);
  auto pl_fit = fts::fit_sufficient_envelope(pl, fts::symmetric_log_grid(1e-8, 0.45));
  REQUIRE(pl_fit.found);
  CHECK(fts::envelope_margin(pl, pl_fit.k, pl_fit.alpha,
                             fts::symmetric_log_grid(1e-30, 0.45, 256)) <= 0.0);
}

TEST_CASE("analytic settling time") {
  CHECK(fts::analytic_settling_time(1.0, 0.5, 0.0) == 0.0);
  CHECK(fts::analytic_settling_time(1.0, 0.5, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fts::analytic_settling_time(2.0, 0.5, 4.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fts::analytic_settling_time(1.0, 0.5, -1.0) ==
        fts::analytic_settling_time(1.0, 0.5, 1.0));
  CHECK_THROWS_AS(fts::analytic_settling_time(0.0, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(fts::analytic_settling_time(1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("lyapunov settling bound matches the scalar extinction time") {
  CHECK(fts::lyapunov_settling_bound(0.0, 1.0, 0.5) == 0.0);
  CHECK(fts::lyapunov_settling_bound(1.0, 1.0, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
  // With V = x^2/2 the decrement rate of the power-law flow is c = k 2^beta,
  // beta = (1+alpha)/2, and the bound equals the extinction time exactly.
  for (double k : {0.5, 1.0, 2.0}) {
    for (double alpha : {0.3, 0.5, 0.75, 0.9}) {
      for (double x0 : {0.1, 1.0, 10.0}) {
        const double beta = (1.0 + alpha) / 2.0;
        const double c = k * std::pow(2.0, beta);
        const double bound = fts::lyapunov_settling_bound(x0 * x0 / 2.0, c, beta);
        CHECK(bound == doctest::Approx(fts::analytic_settling_time(k, alpha, x0)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("decrement check: equality case of the power-law flow stays within tolerance") {
  fts::Dynamics dyn;
  dyn.rhs = fts::fts_flow(1.0, 0.5, 1);
  dyn.non_lipschitz = true;
  fts::StepPolicy policy;
  StateVector x0(1), eq(1);
  x0 << 1.0;
  eq << 0.0;
  auto traj = fts::integrate(dyn, x0, 0.0, 3.0, policy, eq);
  auto report = fts::verify_lyapunov_decrement(
      traj, [](const StateVector& x) { return 0.5 * x.squaredNorm(); }, std::pow(2.0, 0.75),
      0.75, 1e-2);
  CHECK(report.violations.empty());
  CHECK(report.checked > 0);
}

TEST_CASE("decrement check: a stalled trajectory violates everywhere") {
  std::vector<double> t, v;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.01 * i);
    v.push_back(0.5);
  }
  auto report = fts::verify_decrement_series(t, v, 1.0, 0.5, 1e-6);
  CHECK(report.violations.size() == v.size() - 2);
  CHECK(report.max_residual == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("decrement check: exponential decay cannot sustain a strong rate") {
  fts::Dynamics dyn;
  dyn.rhs = [](const StateVector& x, double) { return StateVector(-x); };
  fts::StepPolicy policy;
  StateVector x0(1);
  x0 << 0.01;
  auto traj = fts::integrate(dyn, x0, 0.0, 2.0, policy);
  auto report = fts::verify_lyapunov_decrement(
      traj, [](const StateVector& x) { return 0.5 * x.squaredNorm(); }, 10.0, 0.5, 1e-6);
  CHECK(!report.violations.empty());
}

TEST_CASE("decrement check: input validation") {
  std::vector<double> t{0.0, 0.1, 0.2};
  std::vector<double> good{1.0, 0.9, 0.8};
  std::vector<double> negative{1.0, -0.1, 0.8};
  CHECK_THROWS_AS(fts::verify_decrement_series(t, negative, 1.0, 0.5, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(fts::verify_decrement_series(t, good, 0.0, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fts::verify_decrement_series(t, good, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("canonical flow: scalar and vector forms") {
  auto flow1 = fts::fts_flow(2.0, 0.5, 1);
  StateVector x(1);
  x << -4.0;
  CHECK(flow1(x, 0.0)[0] == doctest::Approx(4.0).epsilon(1e-12));
  x << 0.0;
  CHECK(flow1(x, 0.0)[0] == 0.0);

  auto flow2 = fts::fts_flow(1.0, 0.5, 2);
  StateVector y(2);
  y << 3.0, 4.0;
  StateVector v = flow2(y, 0.0);
  // -x ||x||^(alpha-1) with ||x|| = 5.
  CHECK(v[0] == doctest::Approx(-3.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(-4.0 / std::sqrt(5.0)).epsilon(1e-12));
}

TEST_SUITE_END();
