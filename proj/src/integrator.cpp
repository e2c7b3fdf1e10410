#include "fts/integrator.hpp"

#include <cmath>
#include <utility>

namespace fts {
namespace {

StateVector eval_field(const VectorFieldFn& f, const StateVector& x, double t,
                       const char* label) {
  StateVector v;
  try {
    v = f(x, t);
  } catch (const SimulationError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulationError(t, std::string(label) + " evaluation failed: " + e.what());
  }
  if (!v.allFinite()) {
    throw SimulationError(t, std::string("non-finite ") + label + " evaluation");
  }
  return v;
}

StateVector rk4_step(const VectorFieldFn& f, const StateVector& x, double t, double h) {
  const StateVector k1 = eval_field(f, x, t, "derivative");
  const StateVector k2 = eval_field(f, x + (h / 2) * k1, t + h / 2, "derivative");
  const StateVector k3 = eval_field(f, x + (h / 2) * k2, t + h / 2, "derivative");
  const StateVector k4 = eval_field(f, x + h * k3, t + h, "derivative");
  return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

StateVector euler_step(const VectorFieldFn& f, const StateVector& x, double t, double h) {
  return x + h * eval_field(f, x, t, "derivative");
}

}  // namespace

Trajectory integrate(const Dynamics& dyn, const StateVector& x0, double t0, double tf,
                     const StepPolicy& policy, const std::optional<StateVector>& equilibrium) {
  if (!dyn.rhs) throw std::invalid_argument("integrate: missing right-hand side");
  if (!(tf > t0)) throw std::invalid_argument("integrate: require tf > t0");
  if (!(policy.dt > 0)) throw std::invalid_argument("integrate: require dt > 0");
  if (equilibrium && equilibrium->size() != x0.size()) {
    throw std::invalid_argument("integrate: equilibrium dimension mismatch");
  }

  const double span = tf - t0;
  const auto n_steps =
      static_cast<std::size_t>(std::ceil(span / policy.dt - 1e-12));

  Trajectory traj;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  if (dyn.control) traj.controls.reserve(n_steps + 1);
  if (dyn.non_lipschitz && !(policy.snap_radius > 0)) {
    traj.warnings.push_back(
        "non-Lipschitz field integrated without a positive snap radius; "
        "expect chattering near the equilibrium");
  }

  StateVector x = x0;
  bool snapped = false;
  auto maybe_snap = [&](StateVector& s) {
    if (snapped) {
      s = *equilibrium;
      return;
    }
    if (equilibrium && policy.snap_radius > 0 &&
        (s - *equilibrium).norm() < policy.snap_radius) {
      s = *equilibrium;
      snapped = true;
    }
  };
  maybe_snap(x);

  auto record = [&](double t, const StateVector& s) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    if (dyn.control) traj.controls.push_back(eval_field(dyn.control, s, t, "control"));
  };

  record(t0, x);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = t0 + static_cast<double>(k) * policy.dt;
    const double t_next = (k + 1 == n_steps) ? tf : t0 + static_cast<double>(k + 1) * policy.dt;
    if (snapped) {
      record(t_next, x);
      continue;
    }
    const double h = t_next - t;
    StateVector x_next = (policy.method == StepPolicy::Method::Rk4)
                             ? rk4_step(dyn.rhs, x, t, h)
                             : euler_step(dyn.rhs, x, t, h);
    if (!x_next.allFinite()) throw SimulationError(t_next, "non-finite state after step");
    maybe_snap(x_next);
    x = std::move(x_next);
    record(t_next, x);
  }
  return traj;
}

SettlingReport detect_settling_error(
    const Trajectory& traj, const std::function<double(double, const StateVector&)>& error_norm,
    double eps, double dwell) {
  if (traj.size() == 0) throw std::invalid_argument("detect_settling: empty trajectory");
  if (!(eps > 0)) throw std::invalid_argument("detect_settling: require eps > 0");
  if (dwell < 0) throw std::invalid_argument("detect_settling: require dwell >= 0");
  const double t_front = traj.times.front();
  const double t_back = traj.times.back();
  const double horizon = t_back - t_front;
  if (dwell > horizon * (1 + 1e-12)) {
    throw HorizonError("detect_settling: dwell window exceeds trajectory horizon");
  }

  // Walk backwards to the last violation; everything after it is within eps.
  std::size_t first_ok = 0;
  for (std::size_t i = traj.size(); i-- > 0;) {
    if (error_norm(traj.times[i], traj.states[i]) > eps) {
      first_ok = i + 1;
      break;
    }
  }

  SettlingReport report;
  report.eps = eps;
  report.dwell = dwell;
  if (first_ok < traj.size() && t_back - traj.times[first_ok] >= dwell * (1 - 1e-12)) {
    report.settled = true;
    report.settling_time = traj.times[first_ok];
  }
  return report;
}

SettlingReport detect_settling(const Trajectory& traj, const StateVector& target, double eps,
                               double dwell) {
  if (!traj.states.empty() && traj.states.front().size() != target.size()) {
    throw std::invalid_argument("detect_settling: target dimension mismatch");
  }
  return detect_settling_error(
      traj, [&](double, const StateVector& x) { return (x - target).norm(); }, eps, dwell);
}

SettlingReport detect_settling(const Trajectory& traj,
                               const std::function<StateVector(double)>& target, double eps,
                               double dwell) {
  return detect_settling_error(
      traj, [&](double t, const StateVector& x) { return (x - target(t)).norm(); }, eps, dwell);
}

}  // namespace fts
