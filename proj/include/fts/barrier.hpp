#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "fts/integrator.hpp"
#include "fts/trajectory.hpp"

namespace fts::barrier {

// Thrown when a query point lies inside the protected shell around the
// obstacle, where the barrier quotient is undefined.
class SafetyViolatedError : public std::runtime_error {
 public:
  explicit SafetyViolatedError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a query point coincides with the obstacle center, where the
// gradient direction is undefined.
class SingularPointError : public std::runtime_error {
 public:
  explicit SingularPointError(const std::string& what) : std::runtime_error(what) {}
};

// Scene description for a single-integrator vehicle steering to `goal` while
// keeping `clearance()` away from a circular obstacle.  Defaults reproduce
// the stock demonstration scene.
struct BarrierParams {
  Eigen::VectorXd goal = Eigen::Vector2d(10.0, 20.0);
  Eigen::VectorXd obstacle = Eigen::Vector2d(4.0, 6.0);
  double obstacle_radius = 1.0;
  double standoff = 1.0;     // extra distance kept beyond the obstacle radius
  double epsilon = 1000.0;   // barrier sharpness, must be >= 100
  double k1 = 1.0;           // control gain
  double alpha = 0.5;        // power-law exponent in (0,1)
  double delta = 1e-9;       // gradient-norm regularization in the control law

  // Minimum allowed distance from the obstacle center.
  double clearance() const { return obstacle_radius + standoff; }
};

void validate(const BarrierParams& p);

// Half-line behind the obstacle (as seen from the goal) on which the barrier
// gradient can vanish away from the goal.  Points within `thickness` of the
// set {origin + s * direction : s >= 1} are excluded from convergence claims.
struct ExclusionRay {
  Eigen::VectorXd origin;
  Eigen::VectorXd direction;
  double thickness = 0.0;
};

ExclusionRay exclusion_ray(const BarrierParams& p);
bool in_exclusion_ray(const Eigen::VectorXd& x, const ExclusionRay& ray);

// Barrier quotient ||x - goal||^2 / (||x - obstacle|| - clearance + 1/epsilon).
double barrier_value(const Eigen::VectorXd& x, const BarrierParams& p);

// Analytic gradient of barrier_value.
Eigen::VectorXd barrier_gradient(const Eigen::VectorXd& x, const BarrierParams& p);

// The point behind the obstacle where the gradient vanishes although the
// vehicle is away from the goal; it always lies on the exclusion ray.
Eigen::VectorXd degenerate_point(const BarrierParams& p);

// Finite-time descent input u = -k1 * grad B * ||grad B||^(alpha - 1), with the
// magnitude factor regularized at `delta` and pinned to zero at the goal.
Eigen::VectorXd control(const Eigen::VectorXd& x, const BarrierParams& p);

// Minimum over the trajectory samples of ||x - obstacle|| - clearance.
double safety_margin(const Trajectory& traj, const BarrierParams& p);

// Single-integrator closed loop x' = control(x).
Dynamics closed_loop(const BarrierParams& p);

}  // namespace fts::barrier
