#include "fts/lti.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace fts::lti {

namespace {

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double signed_power(double e, double alpha) {
  return sign_of(e) * std::pow(std::abs(e), alpha);
}

// Truncated Taylor series: jet[j] is the j-th derivative divided by j!.
using Jet = std::vector<double>;

Jet jet_derivative(const Jet& f) {
  Jet d(f.size() - 1);
  for (std::size_t j = 0; j + 1 < f.size(); ++j) d[j] = double(j + 1) * f[j + 1];
  return d;
}

Jet jet_mul(const Jet& a, const Jet& b, std::size_t depth) {
  Jet out(depth + 1, 0.0);
  for (std::size_t i = 0; i <= depth && i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size() && i + j <= depth; ++j) {
      out[i + j] += a[i] * b[j];
    }
  }
  return out;
}

// Taylor coefficients of sign(e)|e|^alpha around e0.  Derivative orders m >= 1
// carry the factor |e0|^(alpha - m), which is evaluated at `delta` whenever
// |e0| < delta; odd orders are even functions of e0, even orders odd ones.
Jet power_law_jet(double e0, double alpha, double delta, std::size_t depth) {
  Jet g(depth + 1, 0.0);
  g[0] = signed_power(e0, alpha);
  const double mag = std::abs(e0);
  double coeff = 1.0;
  double factorial = 1.0;
  for (std::size_t m = 1; m <= depth; ++m) {
    coeff *= alpha - double(m - 1);
    factorial *= double(m);
    const double base = (delta > 0.0 && mag < delta) ? delta : mag;
    const double parity = (m % 2 == 1) ? 1.0 : sign_of(e0);
    g[m] = coeff * std::pow(base, alpha - double(m)) * parity / factorial;
  }
  return g;
}

// Series composition g(e(h)) truncated at `depth`; g is expanded around e[0].
Jet jet_compose(const Jet& g, const Jet& e, std::size_t depth) {
  Jet increment(depth + 1, 0.0);
  for (std::size_t j = 1; j <= depth && j < e.size(); ++j) increment[j] = e[j];
  Jet out(depth + 1, 0.0);
  out[0] = g[0];
  Jet power(depth + 1, 0.0);
  power[0] = 1.0;
  for (std::size_t m = 1; m <= depth; ++m) {
    power = jet_mul(power, increment, depth);
    for (std::size_t j = m; j <= depth; ++j) out[j] += g[m] * power[j];
  }
  return out;
}

void require_finite(const Eigen::MatrixXd& m, const char* label) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(label) + " contains non-finite entries");
  }
}

}  // namespace

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Eigen::MatrixXd ctrb(n, n * m);
  Eigen::MatrixXd block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = A * block;
  }
  return ctrb;
}

void validate(const LinearSystem& sys) {
  const Eigen::Index n = sys.A.rows();
  if (n == 0 || sys.A.cols() != n) {
    throw std::invalid_argument("A must be square and non-empty");
  }
  if (sys.B.rows() != n || sys.B.cols() < 1) {
    throw std::invalid_argument("B must have one row per state and at least one column");
  }
  require_finite(sys.A, "A");
  require_finite(sys.B, "B");
  if (sys.canonical) {
    if (sys.B.cols() != 1 || sys.a.size() != n) {
      throw std::invalid_argument("canonical systems are single-input with n chain coefficients");
    }
    Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(n, n);
    shift.topRightCorner(n - 1, n - 1).setIdentity();
    shift.row(n - 1) = sys.a.transpose();
    Eigen::VectorXd last = Eigen::VectorXd::Unit(n, n - 1);
    if ((sys.A - shift).cwiseAbs().maxCoeff() > 1e-12 ||
        (sys.B.col(0) - last).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("canonical flag set on a non-companion system");
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(controllability_matrix(sys.A, sys.B));
  if (lu.rank() < n) {
    std::ostringstream msg;
    msg << "controllability matrix has rank " << lu.rank() << " < " << n;
    throw NotControllableError(msg.str());
  }
}

LinearSystem make_system(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  LinearSystem sys;
  sys.A = A;
  sys.B = B;
  validate(sys);
  return sys;
}

LinearSystem make_canonical(const Eigen::VectorXd& a) {
  const Eigen::Index n = a.size();
  if (n == 0) throw std::invalid_argument("chain coefficients must be non-empty");
  LinearSystem sys;
  sys.A = Eigen::MatrixXd::Zero(n, n);
  sys.A.topRightCorner(n - 1, n - 1).setIdentity();
  sys.A.row(n - 1) = a.transpose();
  sys.B = Eigen::VectorXd::Unit(n, n - 1);
  sys.canonical = true;
  sys.a = a;
  validate(sys);
  return sys;
}

void validate(const CanonicalGains& gains, Eigen::Index n) {
  if (gains.k.size() != n) {
    throw std::invalid_argument("need one gain per state component");
  }
  if ((gains.k.array() <= 0.0).any()) {
    throw std::invalid_argument("gains must be positive");
  }
  const double lower = double(n - 1) / double(n);
  if (!(gains.alpha > lower) || !(gains.alpha < 1.0)) {
    std::ostringstream msg;
    msg << "alpha " << gains.alpha << " must lie strictly inside (" << lower << ", 1)";
    throw std::invalid_argument(msg.str());
  }
  if (!(gains.delta >= 0.0)) {
    throw std::invalid_argument("delta must be non-negative");
  }
}

Eigen::VectorXd x_alpha(const Eigen::VectorXd& x, double alpha) {
  const double norm = x.norm();
  if (norm == 0.0) return Eigen::VectorXd::Zero(x.size());
  return x * std::pow(norm, alpha - 1.0);
}

LyapunovCertificate make_hurwitz_gain(const LinearSystem& sys) {
  const Eigen::Index n = sys.A.rows();
  if (sys.B.cols() != n) {
    throw RankError("pole placement through B requires a square input matrix");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.B);
  if (!lu.isInvertible()) {
    throw RankError("input matrix is singular");
  }
  LyapunovCertificate cert;
  cert.K1 = lu.solve(-(Eigen::MatrixXd::Identity(n, n) + sys.A));
  cert.P = Eigen::MatrixXd::Identity(n, n);
  cert.Q = 2.0 * Eigen::MatrixXd::Identity(n, n);
  return cert;
}

Eigen::VectorXd full_rank_control(const LinearSystem& sys, const LyapunovCertificate& cert,
                                  const Eigen::VectorXd& x, double alpha) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.B);
  if (!lu.isInvertible()) {
    throw RankError("input matrix is singular");
  }
  return cert.K1 * x - lu.solve(x_alpha(x, alpha));
}

double scalar_tracking_control(double a, double b, double x, double xd, double xd_dot,
                               double k, double alpha) {
  if (b == 0.0) {
    throw NotControllableError("scalar system with b = 0 cannot be steered");
  }
  if (!(k > 0.0) || !(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("need k > 0 and alpha in (0, 1)");
  }
  return (-a * x - k * signed_power(x - xd, alpha) + xd_dot) / b;
}

DesiredChain desired_chain(const Eigen::VectorXd& x, double x1d, const CanonicalGains& gains) {
  const Eigen::Index n = x.size();
  validate(gains, n);
  if (!x.allFinite() || !std::isfinite(x1d)) {
    throw std::invalid_argument("chain inputs must be finite");
  }
  DesiredChain out;
  out.xd.resize(n);
  out.xd_dot.resize(n);
  out.xd[0] = x1d;
  out.xd_dot[0] = 0.0;

  // target[i] holds the jet of chain entry i+1; entry 1 is the constant x1d
  // carried to depth n, and each step loses exactly one derivative order.
  std::vector<Jet> target(n);
  target[0] = Jet(std::size_t(n) + 1, 0.0);
  target[0][0] = x1d;

  for (Eigen::Index i = 1; i < n; ++i) {
    const std::size_t depth = std::size_t(n - i);
    // Error jet: derivatives of state component i are the next components.
    Jet error(depth + 1);
    double factorial = 1.0;
    for (std::size_t j = 0; j <= depth; ++j) {
      if (j > 0) factorial *= double(j);
      error[j] = x[i - 1 + Eigen::Index(j)] / factorial - target[i - 1][j];
    }
    const Jet g = power_law_jet(error[0], gains.alpha, gains.delta, depth);
    const Jet steer = jet_compose(g, error, depth);
    const Jet drift = jet_derivative(target[i - 1]);
    Jet next(depth + 1);
    for (std::size_t j = 0; j <= depth; ++j) {
      next[j] = -gains.k[i - 1] * steer[j] + drift[j];
      if (!std::isfinite(next[j])) {
        std::ostringstream msg;
        msg << "chain entry " << (i + 1) << " overflowed at derivative order " << j;
        throw ChainOverflowError(int(i + 1), msg.str());
      }
    }
    target[i] = next;
    out.xd[i] = next[0];
    out.xd_dot[i] = next[1];
  }
  return out;
}

double canonical_control(const LinearSystem& sys, const Eigen::VectorXd& x, double x1d,
                         const CanonicalGains& gains) {
  if (!sys.canonical) {
    throw std::invalid_argument("chain controller requires the companion form");
  }
  if (x.size() != sys.a.size()) {
    throw std::invalid_argument("state dimension does not match the system");
  }
  const DesiredChain chain = desired_chain(x, x1d, gains);
  const Eigen::Index n = x.size();
  const double tail_error = x[n - 1] - chain.xd[n - 1];
  return chain.xd_dot_n() - sys.a.dot(x) -
         gains.k[n - 1] * signed_power(tail_error, gains.alpha);
}

double min_global_gain(const Eigen::VectorXd& x0, double x1d, double alpha) {
  CanonicalGains unit;
  unit.k = Eigen::VectorXd::Ones(x0.size());
  unit.alpha = alpha;
  const DesiredChain chain = desired_chain(x0, x1d, unit);
  const double energy = 0.5 * (x0 - chain.xd).squaredNorm();
  const double beta = (1.0 + alpha) / 2.0;
  return std::pow(energy, 1.0 - alpha) / std::pow(2.0, beta);
}

std::pair<LinearSystem, Eigen::MatrixXd> to_canonical(const LinearSystem& sys) {
  validate(sys);
  if (sys.B.cols() != 1) {
    throw std::invalid_argument("canonical transform is defined for single-input systems");
  }
  const Eigen::Index n = sys.A.rows();
  // Characteristic polynomial s^n + c[n-1] s^(n-1) + ... + c[0] by the
  // trace recursion; the chain coefficients are a_i = -c[i-1].
  Eigen::VectorXd c(n);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    M = sys.A * M;
    const double ck = -M.trace() / double(k);
    c[n - k] = ck;
    M.diagonal().array() += ck;
  }
  LinearSystem chain = make_canonical(-c);

  const Eigen::MatrixXd source = controllability_matrix(sys.A, sys.B);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(source);
  if (!lu.isInvertible()) {
    throw NotControllableError("controllability matrix is singular");
  }
  const Eigen::MatrixXd mapped = controllability_matrix(chain.A, chain.B);
  Eigen::MatrixXd T = mapped * lu.inverse();
  return {chain, T};
}

Dynamics full_rank_loop(const LinearSystem& sys, const LyapunovCertificate& cert,
                        double alpha) {
  validate(sys);
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  Dynamics dyn;
  dyn.non_lipschitz = true;
  dyn.rhs = [sys, cert, alpha](const StateVector& x, double) {
    return StateVector(sys.A * x + sys.B * full_rank_control(sys, cert, x, alpha));
  };
  dyn.control = [sys, cert, alpha](const StateVector& x, double) {
    return StateVector(full_rank_control(sys, cert, x, alpha));
  };
  return dyn;
}

Dynamics canonical_loop(const LinearSystem& sys, double x1d, const CanonicalGains& gains) {
  validate(sys);
  validate(gains, sys.A.rows());
  if (!sys.canonical) {
    throw std::invalid_argument("chain controller requires the companion form");
  }
  Dynamics dyn;
  dyn.non_lipschitz = true;
  dyn.rhs = [sys, x1d, gains](const StateVector& x, double) {
    StateVector dx(x.size());
    dx.head(x.size() - 1) = x.tail(x.size() - 1);
    dx[x.size() - 1] = sys.a.dot(x) + canonical_control(sys, x, x1d, gains);
    return dx;
  };
  dyn.control = [sys, x1d, gains](const StateVector& x, double) {
    StateVector u(1);
    u[0] = canonical_control(sys, x, x1d, gains);
    return u;
  };
  return dyn;
}

}  // namespace fts::lti
