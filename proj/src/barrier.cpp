#include "fts/barrier.hpp"

#include <cmath>
#include <sstream>

namespace fts::barrier {

namespace {

void check_dimension(const Eigen::VectorXd& x, const BarrierParams& p) {
  if (x.size() != p.goal.size()) {
    std::ostringstream msg;
    msg << "query point has dimension " << x.size() << " but the scene is "
        << p.goal.size() << "-dimensional";
    throw std::invalid_argument(msg.str());
  }
}

// Shifted obstacle distance appearing in the barrier denominator.
double denominator(const Eigen::VectorXd& x, const BarrierParams& p) {
  return (x - p.obstacle).norm() - p.clearance() + 1.0 / p.epsilon;
}

void require_safe(double denom, const Eigen::VectorXd& x) {
  if (denom <= 0.0) {
    std::ostringstream msg;
    msg << "point (" << x.transpose() << ") violates the protected shell "
        << "around the obstacle (barrier denominator " << denom << ")";
    throw SafetyViolatedError(msg.str());
  }
}

}  // namespace

void validate(const BarrierParams& p) {
  if (p.goal.size() < 1 || p.goal.size() != p.obstacle.size()) {
    throw std::invalid_argument("goal and obstacle must share a positive dimension");
  }
  if (!(p.obstacle_radius >= 0.0) || !(p.standoff >= 0.0) || !(p.clearance() > 0.0)) {
    throw std::invalid_argument("obstacle radius and standoff must give a positive clearance");
  }
  if (!(p.epsilon >= 100.0)) {
    throw std::invalid_argument("epsilon must be at least 100 for a sharp barrier");
  }
  if (!(p.k1 > 0.0)) {
    throw std::invalid_argument("gain k1 must be positive");
  }
  if (!(p.alpha > 0.0) || !(p.alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (!(p.delta > 0.0)) {
    throw std::invalid_argument("delta must be positive");
  }
  const double separation = (p.obstacle - p.goal).norm();
  if (!(separation > 2.0 * p.clearance())) {
    std::ostringstream msg;
    msg << "goal-to-obstacle distance " << separation
        << " must exceed twice the clearance " << p.clearance();
    throw std::invalid_argument(msg.str());
  }
}

ExclusionRay exclusion_ray(const BarrierParams& p) {
  ExclusionRay ray;
  ray.origin = p.goal;
  ray.direction = p.obstacle - p.goal;
  ray.thickness = 1e-3 * ray.direction.norm();
  return ray;
}

bool in_exclusion_ray(const Eigen::VectorXd& x, const ExclusionRay& ray) {
  const double scale2 = ray.direction.squaredNorm();
  if (scale2 == 0.0) {
    throw std::invalid_argument("exclusion ray has zero direction");
  }
  // Closest parameter of the half-line {origin + s * direction : s >= 1}.
  double s = (x - ray.origin).dot(ray.direction) / scale2;
  s = std::max(s, 1.0);
  const double dist = (x - (ray.origin + s * ray.direction)).norm();
  return dist < ray.thickness;
}

double barrier_value(const Eigen::VectorXd& x, const BarrierParams& p) {
  check_dimension(x, p);
  const double denom = denominator(x, p);
  require_safe(denom, x);
  return (x - p.goal).squaredNorm() / denom;
}

Eigen::VectorXd barrier_gradient(const Eigen::VectorXd& x, const BarrierParams& p) {
  check_dimension(x, p);
  const Eigen::VectorXd to_obstacle = x - p.obstacle;
  const double dist = to_obstacle.norm();
  if (dist == 0.0) {
    throw SingularPointError("gradient is undefined at the obstacle center");
  }
  const double denom = dist - p.clearance() + 1.0 / p.epsilon;
  require_safe(denom, x);
  const Eigen::VectorXd to_goal = x - p.goal;
  return 2.0 * to_goal / denom -
         (to_goal.squaredNorm() / (denom * denom)) * to_obstacle / dist;
}

Eigen::VectorXd degenerate_point(const BarrierParams& p) {
  const Eigen::VectorXd axis = p.obstacle - p.goal;
  const double separation = axis.norm();
  const double scale = 2.0 * (separation + p.clearance() - 1.0 / p.epsilon) / separation;
  return p.goal + scale * axis;
}

Eigen::VectorXd control(const Eigen::VectorXd& x, const BarrierParams& p) {
  const Eigen::VectorXd grad = barrier_gradient(x, p);
  const double norm = grad.norm();
  if (norm == 0.0) {
    return Eigen::VectorXd::Zero(x.size());
  }
  const double magnitude = std::pow(std::max(norm, p.delta), p.alpha - 1.0);
  return -p.k1 * magnitude * grad;
}

double safety_margin(const Trajectory& traj, const BarrierParams& p) {
  if (traj.size() == 0) {
    throw std::invalid_argument("safety margin of an empty trajectory");
  }
  double margin = std::numeric_limits<double>::infinity();
  for (const StateVector& x : traj.states) {
    margin = std::min(margin, (x - p.obstacle).norm() - p.clearance());
  }
  return margin;
}

Dynamics closed_loop(const BarrierParams& p) {
  validate(p);
  Dynamics dyn;
  dyn.non_lipschitz = true;
  dyn.rhs = [p](const StateVector& x, double) { return control(x, p); };
  dyn.control = [p](const StateVector& x, double) { return control(x, p); };
  return dyn;
}

}  // namespace fts::barrier
