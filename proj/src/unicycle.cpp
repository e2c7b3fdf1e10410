#include "fts/unicycle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fts::unicycle {
namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr double kCheckStep = 1e-3;
constexpr double kCheckTol = 1e-4;
constexpr int kCheckCount = 10;

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Spot-checks that `derivative` matches central differences of `curve` at
// fixed pseudo-random times inside [t_lo, t_hi].
void check_consistency(const ReferenceTrajectory::Fn& curve,
                       const ReferenceTrajectory::Fn& derivative, double t_lo, double t_hi,
                       const char* label) {
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> pick(t_lo + kCheckStep, t_hi - kCheckStep);
  for (int i = 0; i < kCheckCount; ++i) {
    const double t = pick(rng);
    const Vector2d fd = (curve(t + kCheckStep) - curve(t - kCheckStep)) / (2 * kCheckStep);
    const double err = (fd - derivative(t)).norm();
    if (!(err <= kCheckTol)) {
      throw ReferenceError(std::string("reference ") + label +
                           " disagrees with finite differences at t=" + std::to_string(t) +
                           " (error " + std::to_string(err) + ")");
    }
  }
}

}  // namespace

ReferenceTrajectory::ReferenceTrajectory(Fn position, Fn velocity, Fn acceleration,
                                         double check_lo, double check_hi)
    : position_(std::move(position)),
      velocity_(std::move(velocity)),
      acceleration_(std::move(acceleration)) {
  if (!position_ || !velocity_ || !acceleration_) {
    throw std::invalid_argument("ReferenceTrajectory: all three levels are required");
  }
  if (!(check_hi - check_lo > 4 * kCheckStep)) {
    throw std::invalid_argument("ReferenceTrajectory: consistency window too short");
  }
  check_consistency(position_, velocity_, check_lo, check_hi, "velocity");
  check_consistency(velocity_, acceleration_, check_lo, check_hi, "acceleration");
}

ReferenceTrajectory sinusoid_reference() {
  return ReferenceTrajectory(
      [](double t) { return Vector2d(t, std::cos(t)); },
      [](double t) { return Vector2d(1.0, -std::sin(t)); },
      [](double t) { return Vector2d(0.0, -std::cos(t)); });
}

ReferenceTrajectory line_reference(const Vector2d& start, const Vector2d& velocity) {
  return ReferenceTrajectory([=](double t) { return Vector2d(start + t * velocity); },
                             [=](double) { return velocity; },
                             [](double) { return Vector2d(0.0, 0.0); });
}

ReferenceTrajectory circle_reference(double radius, double angular_rate) {
  if (!(radius > 0)) throw std::invalid_argument("circle_reference: require radius > 0");
  const double w = angular_rate;
  return ReferenceTrajectory(
      [=](double t) { return Vector2d(radius * std::cos(w * t), radius * std::sin(w * t)); },
      [=](double t) {
        return Vector2d(-radius * w * std::sin(w * t), radius * w * std::cos(w * t));
      },
      [=](double t) {
        return Vector2d(-radius * w * w * std::cos(w * t), -radius * w * w * std::sin(w * t));
      });
}

ReferenceTrajectory static_point_reference(const Vector2d& point) {
  return ReferenceTrajectory([=](double) { return point; },
                             [](double) { return Vector2d(0.0, 0.0); },
                             [](double) { return Vector2d(0.0, 0.0); });
}

ReferenceTrajectory table_reference(const std::vector<ReferenceSample>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("table_reference: need >= 2 samples");
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (!(samples[i].t < samples[i + 1].t)) {
      throw std::invalid_argument("table_reference: sample times must be strictly increasing");
    }
  }
  auto interpolate = [samples](auto field) {
    return [samples, field](double t) -> Vector2d {
      if (t <= samples.front().t) return field(samples.front());
      if (t >= samples.back().t) return field(samples.back());
      auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                 [](double v, const ReferenceSample& s) { return v < s.t; });
      const ReferenceSample& hi = *it;
      const ReferenceSample& lo = *(it - 1);
      const double w = (t - lo.t) / (hi.t - lo.t);
      return (1 - w) * field(lo) + w * field(hi);
    };
  };
  // The consistency spot check runs inside the table's own span.
  return ReferenceTrajectory(
      interpolate([](const ReferenceSample& s) { return s.position; }),
      interpolate([](const ReferenceSample& s) { return s.velocity; }),
      interpolate([](const ReferenceSample& s) { return s.acceleration; }), samples.front().t,
      samples.back().t);
}

void validate(const UnicycleGains& gains) {
  if (!(gains.k > 0)) throw std::invalid_argument("unicycle gains: require k > 0");
  if (!(gains.k_omega > 0)) throw std::invalid_argument("unicycle gains: require k_omega > 0");
  if (!(gains.alpha > 0 && gains.alpha < 1)) {
    throw std::invalid_argument("unicycle gains: require alpha in (0,1)");
  }
  if (!(gains.delta > 0)) throw std::invalid_argument("unicycle gains: require delta > 0");
}

double wrap_angle(double theta) {
  double w = std::remainder(theta, 2 * M_PI);
  if (w == -M_PI) w = M_PI;
  return w;
}

UnicycleState::UnicycleState(const Vector2d& r, double heading)
    : position(r), theta(wrap_angle(heading)) {}

Vector2d vector_field(const Vector2d& position, double t, const ReferenceTrajectory& ref,
                      const UnicycleGains& gains) {
  const Vector2d r_e = position - ref.position(t);
  const double m = r_e.norm();
  Vector2d feedback(0.0, 0.0);
  if (m > 0) {
    feedback = -gains.k * std::pow(std::max(m, gains.delta), gains.alpha - 1.0) * r_e;
  }
  return feedback + ref.velocity(t);
}

double heading_target_rate(const Vector2d& position, double theta, double u, double t,
                           const ReferenceTrajectory& ref, const UnicycleGains& gains) {
  const Vector2d f = vector_field(position, t, ref, gains);
  const double nf = f.norm();
  if (nf < kDegenerateNorm) {
    throw DegenerateFieldError("guidance field vanished at t=" + std::to_string(t));
  }
  const Vector2d r_e = position - ref.position(t);
  const Vector2d re_dot = Vector2d(u * std::cos(theta), u * std::sin(theta)) - ref.velocity(t);
  const double m = std::max(r_e.norm(), gains.delta);
  const Vector2d f_dot = -gains.k * (std::pow(m, gains.alpha - 1.0) * re_dot +
                                     (gains.alpha - 1.0) * std::pow(m, gains.alpha - 3.0) *
                                         r_e.dot(re_dot) * r_e) +
                         ref.acceleration(t);
  return (f.x() * f_dot.y() - f.y() * f_dot.x()) / (nf * nf);
}

double angular_rate(double heading_error, double heading_target_rate,
                    const UnicycleGains& gains) {
  return -gains.k_omega * sign_of(heading_error) *
             std::pow(std::abs(heading_error), gains.alpha) +
         heading_target_rate;
}

UnicycleControl control(const UnicycleState& state, double t, const ReferenceTrajectory& ref,
                        const UnicycleGains& gains) {
  const Vector2d f = vector_field(state.position, t, ref, gains);
  UnicycleControl out;
  out.u = f.norm();  // the speed is fixed before the turn-rate chain rule uses it
  if (out.u < kDegenerateNorm) {
    throw DegenerateFieldError("guidance field vanished at t=" + std::to_string(t));
  }
  out.heading_target = std::atan2(f.y(), f.x());
  out.heading_error = wrap_angle(state.theta - out.heading_target);
  const double rate = heading_target_rate(state.position, state.theta, out.u, t, ref, gains);
  out.omega = angular_rate(out.heading_error, rate, gains);
  return out;
}

Dynamics closed_loop(const ReferenceTrajectory& ref, const UnicycleGains& gains) {
  validate(gains);
  Dynamics dyn;
  dyn.non_lipschitz = true;
  dyn.rhs = [ref, gains](const StateVector& q, double t) -> StateVector {
    if (q.size() != 3) throw std::invalid_argument("unicycle state must be [x, y, theta]");
    const UnicycleState s(q.head<2>(), q[2]);
    const UnicycleControl c = control(s, t, ref, gains);
    StateVector dq(3);
    dq << c.u * std::cos(q[2]), c.u * std::sin(q[2]), c.omega;
    return dq;
  };
  dyn.control = [ref, gains](const StateVector& q, double t) -> StateVector {
    const UnicycleState s(q.head<2>(), q[2]);
    const UnicycleControl c = control(s, t, ref, gains);
    StateVector u(2);
    u << c.u, c.omega;
    return u;
  };
  return dyn;
}

}  // namespace fts::unicycle
