#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fts {

using StateVector = Eigen::VectorXd;

// Raised when an integration step cannot proceed; `time` is the simulation
// time of the offending evaluation.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(double time, const std::string& what)
      : std::runtime_error("t=" + std::to_string(time) + ": " + what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// Raised when a settling query asks for a dwell window longer than the
// trajectory horizon can contain.
class HorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-step integration policy. Fractional-power closed loops stall on a
// spurious fixed point of the discrete step map at a distance O(dt^(1/(1-alpha)))
// from the equilibrium; a positive snap radius above that floor pins the state
// exactly once it gets close enough.
struct StepPolicy {
  enum class Method { Rk4, Euler };
  Method method = Method::Rk4;
  double dt = 1e-3;
  double snap_radius = 1e-9;
  // Softening scale for fractional powers of near-zero errors inside
  // controllers; forwarded by the scenario runner, unused by the integrator.
  double regularization = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
  // One entry per sample when a control recorder is attached, empty otherwise.
  std::vector<StateVector> controls;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }
  int state_dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  int control_dim() const { return controls.empty() ? 0 : static_cast<int>(controls.front().size()); }
};

struct SettlingReport {
  bool settled = false;
  // First sample time after which the error stays within eps through the end
  // of the horizon; meaningful only when settled.
  double settling_time = 0.0;
  double eps = 0.0;
  double dwell = 0.0;
};

}  // namespace fts
