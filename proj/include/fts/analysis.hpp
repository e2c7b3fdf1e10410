#pragma once

#include "fts/integrator.hpp"
#include "fts/trajectory.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace fts {

// Raised when a scalar field cannot be evaluated (non-finite result or thrown
// error) inside the region a query needs.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a field increases |x| somewhere on the fitting grid, so no
// stabilizing envelope exists at all.
class NotStableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scalar autonomous field x' = h(x) on an interval containing 0 with h(0) = 0.
struct ScalarField {
  std::function<double(double)> h;
  double domain_min = -1.0;
  double domain_max = 1.0;
};

ScalarField power_law_field(double k, double alpha);  // h = -k sign(x)|x|^alpha
ScalarField linear_field(double lambda);              // h = -lambda x
// Solutions from x0 = 1 are exp(-t^2): every trajectory converges, none in
// finite time. The slope h(x)/x = -2 sqrt(ln(1/|x|)) diverges at 0, yet no
// fixed power-law envelope holds all the way to 0.
ScalarField gaussian_tail_field();

enum class SlopeVerdict { DivergentSlope, FiniteSlope, Inconclusive };

struct QuotientSeries {
  std::vector<double> x;
  std::vector<double> quotient;  // h(x)/x
};

struct NecessaryConditionReport {
  SlopeVerdict verdict = SlopeVerdict::Inconclusive;
  QuotientSeries positive_side;
  QuotientSeries negative_side;
  double divergence_threshold = 0;
  double finite_rel_tol = 0;
  int trend_points = 0;
};

// Probes whether the slope h(x)/x diverges to -inf as x -> 0 (a requirement
// for finite-time convergence) by evaluating difference quotients on the
// geometric grid x_j = window * 2^-j on both sides of 0.
NecessaryConditionReport check_necessary_condition(const ScalarField& f, double window,
                                                   int num_samples = 64);

struct EnvelopeFit {
  bool found = false;
  double k = 0;
  double alpha = 0;
  // max over the grid of sign(x) h(x) + k |x|^alpha; <= 0 means the bound
  // sign(x) h(x) <= -k |x|^alpha holds at every sample.
  double violation_margin = 0;
};

// Fits k, alpha by least squares on log|h| vs log|x|, then shrinks k until
// the envelope holds at every grid sample. found = false when the fitted
// exponent falls outside (0, 1) or some sample has sign(x) h(x) = 0.
EnvelopeFit fit_sufficient_envelope(const ScalarField& f, const std::vector<double>& grid);

// Re-evaluates the envelope inequality for a given (k, alpha) on an arbitrary
// grid. A fit whose margin turns positive on a refined grid is degenerate:
// the sampled scales admitted an envelope that fails closer to 0.
double envelope_margin(const ScalarField& f, double k, double alpha,
                       const std::vector<double>& grid);

std::vector<double> log_grid(double lo, double hi, int points);
// Log-spaced samples of both signs over [floor, edge], the fitting default.
std::vector<double> symmetric_log_grid(double floor, double edge, int per_side = 64);

// Extinction time |x0|^(1-alpha) / (k (1-alpha)) of x' = -k sign(x)|x|^alpha.
double analytic_settling_time(double k, double alpha, double x0);

// Settling bound V0^(1-beta) / (c (1-beta)) implied by V' + c V^beta <= 0.
double lyapunov_settling_bound(double v0, double c, double beta);

struct LyapunovCheckReport {
  double max_residual = 0;
  std::size_t checked = 0;
  std::vector<std::pair<double, double>> violations;  // (t, residual) with residual > tol
  double c = 0;
  double beta = 0;
  double tol = 0;
};

// Checks the decrement inequality Vdot + c V^beta <= tol along a sampled
// trajectory, with Vdot estimated by central differences at interior samples.
// Samples where V = 0 exactly (snapped states) are excluded.
LyapunovCheckReport verify_decrement_series(const std::vector<double>& times,
                                            const std::vector<double>& v, double c, double beta,
                                            double tol);

LyapunovCheckReport verify_lyapunov_decrement(const Trajectory& traj,
                                              const std::function<double(const StateVector&)>& V,
                                              double c, double beta, double tol);

// The canonical finite-time flow x' = -k x ||x||^(alpha-1) in dimension n;
// for n = 1 this is x' = -k sign(x)|x|^alpha.
VectorFieldFn fts_flow(double k, double alpha, int n);

}  // namespace fts
