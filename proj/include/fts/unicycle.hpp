#pragma once

#include "fts/integrator.hpp"
#include "fts/trajectory.hpp"

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <vector>

namespace fts::unicycle {

using Eigen::Vector2d;

// Raised when the guidance field vanishes, leaving the heading target
// undefined.
class DegenerateFieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a reference's stated derivatives disagree with finite
// differences of the curve itself.
class ReferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Twice-differentiable planar reference curve. The constructor spot-checks
// that velocity and acceleration are consistent with central differences of
// the level below at fixed pseudo-random times inside [check_lo, check_hi].
class ReferenceTrajectory {
 public:
  using Fn = std::function<Vector2d(double)>;

  ReferenceTrajectory(Fn position, Fn velocity, Fn acceleration, double check_lo = 0.0,
                      double check_hi = 10.0);

  Vector2d position(double t) const { return position_(t); }
  Vector2d velocity(double t) const { return velocity_(t); }
  Vector2d acceleration(double t) const { return acceleration_(t); }

 private:
  Fn position_, velocity_, acceleration_;
};

ReferenceTrajectory sinusoid_reference();     // (t, cos t)
ReferenceTrajectory line_reference(const Vector2d& start, const Vector2d& velocity);
ReferenceTrajectory circle_reference(double radius, double angular_rate);
ReferenceTrajectory static_point_reference(const Vector2d& point);

// Dense samples (t, position, velocity, acceleration); interpolated linearly.
struct ReferenceSample {
  double t;
  Vector2d position, velocity, acceleration;
};
ReferenceTrajectory table_reference(const std::vector<ReferenceSample>& samples);

struct UnicycleGains {
  double k = 0.5;        // position-error gain
  double k_omega = 2.0;  // heading-error gain
  double alpha = 0.5;    // fractional exponent, in (0,1)
  double delta = 1e-6;   // softening radius for fractional powers of ||r_e||
};

void validate(const UnicycleGains& gains);

// Unicycle pose (x, y, theta); theta wrapped to (-pi, pi] on construction.
struct UnicycleState {
  Vector2d position;
  double theta;
  UnicycleState(const Vector2d& r, double heading);
};

double wrap_angle(double theta);  // into (-pi, pi]

// Guidance field F_p = -k r_e ||r_e||^(alpha-1) + dr_g: a finite-time
// contraction on the position error plus the reference feedforward. Inside
// the softening ball 0 < ||r_e|| < delta the fractional power is evaluated
// at delta; at r_e = 0 the feedback term vanishes.
Vector2d vector_field(const Vector2d& position, double t, const ReferenceTrajectory& ref,
                      const UnicycleGains& gains);

// Rotation rate of the guidance-field direction, by the chain rule with the
// realized velocity u [cos theta, sin theta]. Throws DegenerateFieldError
// when ||F_p|| < 1e-12.
double heading_target_rate(const Vector2d& position, double theta, double u, double t,
                           const ReferenceTrajectory& ref, const UnicycleGains& gains);

// Finite-time heading law: -k_omega sign(e)|e|^alpha + feedforward.
double angular_rate(double heading_error, double heading_target_rate,
                    const UnicycleGains& gains);

struct UnicycleControl {
  double u = 0;            // forward speed, ||F_p||
  double omega = 0;        // turn rate
  double heading_target = 0;  // direction of F_p
  double heading_error = 0;   // wrapped theta - heading_target
};

UnicycleControl control(const UnicycleState& state, double t, const ReferenceTrajectory& ref,
                        const UnicycleGains& gains);

// Closed-loop dynamics of [x, y, theta] under the tracking law.
Dynamics closed_loop(const ReferenceTrajectory& ref, const UnicycleGains& gains);

}  // namespace fts::unicycle
