#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "fts/integrator.hpp"
#include "fts/trajectory.hpp"

namespace fts::lti {

class NotControllableError : public std::runtime_error {
 public:
  explicit NotControllableError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an operation needs an invertible input matrix.
class RankError : public std::runtime_error {
 public:
  explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when the target-chain recursion produces a non-finite value; `stage`
// is the 1-based chain entry that overflowed.
class ChainOverflowError : public std::runtime_error {
 public:
  ChainOverflowError(int stage, const std::string& what)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_ = 0;
};

// State-space pair x' = A x + B u.  When `canonical` is set, A is the
// integrator-chain companion matrix whose last row is `a` and B is the last
// standard basis vector.
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  bool canonical = false;
  Eigen::VectorXd a;
};

// Validates shapes, finiteness, the companion structure when flagged, and
// controllability of the pair.
void validate(const LinearSystem& sys);

LinearSystem make_system(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// Builds the integrator chain x_i' = x_{i+1}, x_n' = a . x + u.
LinearSystem make_canonical(const Eigen::VectorXd& a);

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// Gains for the canonical controller.  alpha must lie strictly inside
// ((n-1)/n, 1), which keeps every chain derivative bounded; powers
// |e|^(alpha - m) with negative exponents are evaluated at `delta` whenever
// |e| < delta.
struct CanonicalGains {
  Eigen::VectorXd k;
  double alpha = 0.8;
  double delta = 1e-6;
};

void validate(const CanonicalGains& gains, Eigen::Index n);

// Stabilizing linear gain with an explicit quadratic certificate:
// (A + B K1)' P + P (A + B K1) = -Q.
struct LyapunovCertificate {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd K1;
};

// Desired-state chain evaluated at one state sample: entry i is the target
// for state component i, xd_dot its time derivative along the closed loop.
struct DesiredChain {
  Eigen::VectorXd xd;
  Eigen::VectorXd xd_dot;
  double xd_dot_n() const { return xd_dot[xd_dot.size() - 1]; }
};

// Direction-preserving signed power x ||x||^(alpha - 1), continuously
// extended by zero at the origin.  For n = 1 this is sign(x) |x|^alpha.
Eigen::VectorXd x_alpha(const Eigen::VectorXd& x, double alpha);

// Places every closed-loop pole at -1 via K1 = B^{-1}(-I - A), certified by
// P = I, Q = 2 I.  Requires square invertible B.
LyapunovCertificate make_hurwitz_gain(const LinearSystem& sys);

// u = K1 x - B^{-1} x_alpha(x), which turns the loop into x' = (A+BK1)x - x_alpha.
Eigen::VectorXd full_rank_control(const LinearSystem& sys, const LyapunovCertificate& cert,
                                  const Eigen::VectorXd& x, double alpha);

// Tracking law for x' = a x + b u: cancels the drift and drives the error to
// the reference with a signed-power term.
double scalar_tracking_control(double a, double b, double x, double xd, double xd_dot,
                               double k, double alpha);

// Backstepping-style chain of targets: xd_1 = x1d (constant), and each next
// target steers the previous error through a signed power.  Time derivatives
// are carried analytically to the exact depth the recursion needs, so no
// state derivative beyond x_n is ever required.
DesiredChain desired_chain(const Eigen::VectorXd& x, double x1d, const CanonicalGains& gains);

// Chain controller for canonical systems:
// u = xd_dot_n - a . x - k_n sign(e_n) |e_n|^alpha.
double canonical_control(const LinearSystem& sys, const Eigen::VectorXd& x, double x1d,
                         const CanonicalGains& gains);

// Smallest uniform gain that places x0 inside the certified attraction
// domain; computed from the unit-gain chain at x0.  Gains strictly above
// this value make the composite error energy decrease to zero.
double min_global_gain(const Eigen::VectorXd& x0, double x1d, double alpha);

// Similarity transform z = T x onto the integrator-chain form; returns the
// canonical system and T.  Requires a controllable single-input pair.
std::pair<LinearSystem, Eigen::MatrixXd> to_canonical(const LinearSystem& sys);

// Closed loops for simulation.
Dynamics full_rank_loop(const LinearSystem& sys, const LyapunovCertificate& cert, double alpha);
Dynamics canonical_loop(const LinearSystem& sys, double x1d, const CanonicalGains& gains);

}  // namespace fts::lti
