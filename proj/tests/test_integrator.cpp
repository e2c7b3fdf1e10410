#include "doctest.h"

#include "fts/analysis.hpp"
#include "fts/csv.hpp"
#include "fts/integrator.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using fts::Dynamics;
using fts::StateVector;
using fts::StepPolicy;
using fts::Trajectory;

namespace {

StateVector scalar(double v) {
  StateVector x(1);
  x[0] = v;
  return x;
}

Dynamics linear_decay() {
  Dynamics dyn;
  dyn.rhs = [](const StateVector& x, double) { return StateVector(-x); };
  return dyn;
}

Dynamics sqrt_flow() {
  Dynamics dyn;
  dyn.rhs = fts::fts_flow(1.0, 0.5, 1);
  dyn.non_lipschitz = true;
  return dyn;
}

}  // namespace

TEST_SUITE_BEGIN("integrator");

TEST_CASE("zero field holds the state constant") {
  Dynamics dyn;
  dyn.rhs = [](const StateVector& x, double) { return StateVector(StateVector::Zero(x.size())); };
  StepPolicy policy;
  Trajectory traj = fts::integrate(dyn, scalar(3.5), 0.0, 1.0, policy);
  for (const auto& x : traj.states) CHECK(x[0] == 3.5);
}

TEST_CASE("linear decay endpoint matches the exponential") {
  StepPolicy policy;
  Trajectory traj = fts::integrate(linear_decay(), scalar(1.0), 0.0, 1.0, policy);
  CHECK(traj.times.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(traj.states.back()[0] - std::exp(-1.0)) <= 1e-6);
}

TEST_CASE("halving dt shrinks the endpoint error at fourth order") {
  auto endpoint_error = [](double dt) {
    StepPolicy policy;
    policy.dt = dt;
    Trajectory traj = fts::integrate(linear_decay(), scalar(1.0), 0.0, 1.0, policy);
    return std::abs(traj.states.back()[0] - std::exp(-1.0));
  };
  const double coarse = endpoint_error(0.05);
  const double fine = endpoint_error(0.025);
  CHECK(coarse / fine >= 8.0);
}

TEST_CASE("euler method converges at first order") {
  StepPolicy policy;
  policy.method = StepPolicy::Method::Euler;
  Trajectory traj = fts::integrate(linear_decay(), scalar(1.0), 0.0, 1.0, policy);
  CHECK(std::abs(traj.states.back()[0] - std::exp(-1.0)) <= 5e-4);
}

TEST_CASE("snap pins the fractional-power flow exactly to zero near t = 2") {
  // Extinction time of x' = -sign(x)|x|^0.5 from x0 = 1 is 2.0.
  StepPolicy policy;
  policy.dt = 1e-5;
  policy.snap_radius = 1e-9;
  Trajectory traj =
      fts::integrate(sqrt_flow(), scalar(1.0), 0.0, 3.0, policy, scalar(0.0));
  double snap_time = -1.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.states[i][0] == 0.0) {
      snap_time = traj.times[i];
      break;
    }
  }
  REQUIRE(snap_time >= 0.0);
  CHECK(snap_time == doctest::Approx(2.0).epsilon(0.01));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] >= snap_time) CHECK(traj.states[i][0] == 0.0);
  }
}

TEST_CASE("non-Lipschitz field without a snap radius records a warning") {
  StepPolicy policy;
  policy.snap_radius = 0.0;
  Trajectory traj = fts::integrate(sqrt_flow(), scalar(1.0), 0.0, 0.1, policy);
  REQUIRE(traj.warnings.size() == 1);
  CHECK(traj.warnings[0].find("snap radius") != std::string::npos);
}

TEST_CASE("non-finite derivative evaluation reports the offending time") {
  Dynamics dyn;
  dyn.rhs = [](const StateVector& x, double t) {
    StateVector v = -x;
    if (t > 0.5) v[0] = std::numeric_limits<double>::quiet_NaN();
    return v;
  };
  StepPolicy policy;
  try {
    fts::integrate(dyn, scalar(1.0), 0.0, 1.0, policy);
    FAIL("expected SimulationError");
  } catch (const fts::SimulationError& e) {
    CHECK(e.time() >= 0.5);
    CHECK(e.time() <= 0.5 + 2 * policy.dt);
  }
}

TEST_CASE("time grid is uniform, monotone, and lands exactly on tf") {
  Dynamics dyn;
  dyn.rhs = [](const StateVector& x, double) { return StateVector(-x); };
  StepPolicy policy;
  policy.dt = 0.3;
  Trajectory traj = fts::integrate(dyn, scalar(1.0), 0.0, 1.0, policy);
  REQUIRE(traj.size() == 5);
  CHECK(traj.times[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(traj.times[3] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(traj.times[4] == 1.0);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) CHECK(traj.times[i] < traj.times[i + 1]);
}

TEST_CASE("repeated integration is bit-identical") {
  StepPolicy policy;
  auto run = [&] { return fts::integrate(sqrt_flow(), scalar(1.0), 0.0, 2.5, policy, scalar(0.0)); };
  Trajectory a = run();
  Trajectory b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.times[i] == b.times[i]);
    CHECK(a.states[i][0] == b.states[i][0]);
  }
}

TEST_CASE("settling: constant trajectory at the target settles at t0") {
  Dynamics dyn;
  dyn.rhs = [](const StateVector& x, double) { return StateVector(StateVector::Zero(x.size())); };
  StepPolicy policy;
  Trajectory traj = fts::integrate(dyn, scalar(2.0), 1.0, 2.0, policy);
  auto report = fts::detect_settling(traj, scalar(2.0), 1e-9, 0.05);
  CHECK(report.settled);
  CHECK(report.settling_time == 1.0);
}

TEST_CASE("settling: fractional-power flow settles at the analytic extinction time") {
  StepPolicy policy;
  Trajectory traj = fts::integrate(sqrt_flow(), scalar(1.0), 0.0, 3.0, policy, scalar(0.0));
  auto report = fts::detect_settling(traj, scalar(0.0), 1e-6, 0.15);
  REQUIRE(report.settled);
  // The threshold 1e-6 is reached 2 sqrt(1e-6) = 2e-3 before extinction at 2.0.
  CHECK(report.settling_time == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("settling: exponential decay never reaches a tiny threshold on a short horizon") {
  StepPolicy policy;
  Trajectory traj = fts::integrate(linear_decay(), scalar(1.0), 0.0, 10.0, policy);
  auto report = fts::detect_settling(traj, scalar(0.0), 1e-12, 0.5);
  CHECK(!report.settled);
}

TEST_CASE("settling: dwell longer than the horizon is an error") {
  StepPolicy policy;
  Trajectory traj = fts::integrate(linear_decay(), scalar(1.0), 0.0, 1.0, policy);
  CHECK_THROWS_AS(fts::detect_settling(traj, scalar(0.0), 1e-3, 2.0), fts::HorizonError);
  CHECK_THROWS_AS(fts::detect_settling(traj, scalar(0.0), 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("csv traces round-trip bit-exactly") {
  Dynamics dyn;
  dyn.rhs = [](const StateVector& x, double) {
    StateVector v(2);
    v << -x[0], -2 * x[1];
    return v;
  };
  dyn.control = [](const StateVector& x, double) { return StateVector(0.5 * x.head(1)); };
  StepPolicy policy;
  policy.dt = 0.1;
  StateVector x0(2);
  x0 << 1.0, -0.3;
  Trajectory traj = fts::integrate(dyn, x0, 0.0, 1.0, policy);

  std::vector<fts::NamedColumn> extras(1);
  extras[0].name = "norm";
  for (const auto& x : traj.states) extras[0].values.push_back(x.norm());

  const std::string path =
      (std::filesystem::temp_directory_path() / "fts_trace_roundtrip.csv").string();
  fts::write_trace_csv(path, traj, extras);
  fts::CsvTable table = fts::read_csv(path);
  REQUIRE(table.header.size() == 5);
  CHECK(table.header[0] == "t");
  CHECK(table.header[1] == "x1");
  CHECK(table.header[2] == "x2");
  CHECK(table.header[3] == "u1");
  CHECK(table.header[4] == "norm");
  REQUIRE(table.rows.size() == traj.size());
  for (std::size_t r = 0; r < traj.size(); ++r) {
    CHECK(table.rows[r][0] == traj.times[r]);
    CHECK(table.rows[r][1] == traj.states[r][0]);
    CHECK(table.rows[r][2] == traj.states[r][1]);
    CHECK(table.rows[r][3] == traj.controls[r][0]);
    CHECK(table.rows[r][4] == extras[0].values[r]);
  }
  std::remove(path.c_str());

  extras[0].values.pop_back();
  CHECK_THROWS_AS(fts::write_trace_csv(path, traj, extras), std::invalid_argument);
}

TEST_SUITE_END();
