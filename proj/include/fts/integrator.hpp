#pragma once

#include "fts/trajectory.hpp"

#include <functional>
#include <optional>

namespace fts {

using VectorFieldFn = std::function<StateVector(const StateVector& x, double t)>;

// Closed-loop right-hand side plus an optional control recorder evaluated at
// every accepted sample. Fields with fractional-power terms must set
// non_lipschitz so the integrator can insist on a snap rule.
struct Dynamics {
  VectorFieldFn rhs;
  VectorFieldFn control;
  bool non_lipschitz = false;
};

// Integrates dyn.rhs over [t0, tf] on the uniform grid t0 + k*dt (the last
// step is shortened to land exactly on tf). When an equilibrium is supplied
// and the state enters the snap ball around it, the state is pinned to the
// equilibrium for all later samples. Throws SimulationError on non-finite or
// failing field evaluations, tagged with the simulation time.
Trajectory integrate(const Dynamics& dyn, const StateVector& x0, double t0, double tf,
                     const StepPolicy& policy,
                     const std::optional<StateVector>& equilibrium = std::nullopt);

// Settling detector: finds the first sample time T such that the error stays
// within eps from T through the end of the horizon, and at least a full dwell
// window fits after T. Throws HorizonError when dwell exceeds the horizon.
SettlingReport detect_settling_error(
    const Trajectory& traj,
    const std::function<double(double t, const StateVector& x)>& error_norm, double eps,
    double dwell);

SettlingReport detect_settling(const Trajectory& traj, const StateVector& target, double eps,
                               double dwell);

SettlingReport detect_settling(const Trajectory& traj,
                               const std::function<StateVector(double)>& target, double eps,
                               double dwell);

}  // namespace fts
