#include "fts/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fts/analysis.hpp"
#include "fts/barrier.hpp"
#include "fts/csv.hpp"
#include "fts/lti.hpp"
#include "fts/unicycle.hpp"

namespace fts::scenario {
namespace {

[[noreturn]] void fail(const std::string& invariant, const std::string& detail) {
  throw ValidationError(invariant, detail);
}

std::string join_vector(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += config::format_number(v(i));
  }
  return out;
}

std::string join_matrix(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out += "; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ", ";
      out += config::format_number(m(r, c));
    }
  }
  return out;
}

void check_known_keys(const config::Document& doc, SystemKind kind) {
  static const std::set<std::string> scenario_keys = {
      "name", "system", "x0",          "t0",         "tf",
      "dt",   "method", "snap_radius", "settle_eps", "settle_dwell"};
  std::set<std::string> controller_keys;
  switch (kind) {
    case SystemKind::ScalarField:
      controller_keys = {"k", "alpha"};
      break;
    case SystemKind::Unicycle:
      controller_keys = {"k",     "k_omega",   "alpha",
                         "delta", "reference", "reference_params"};
      break;
    case SystemKind::Barrier:
      controller_keys = {"tau",     "o",  "rho_o", "d_m",
                         "epsilon", "k1", "alpha", "delta"};
      break;
    case SystemKind::LtiFullRank:
      controller_keys = {"A", "B", "alpha"};
      break;
    case SystemKind::LtiCanonical:
      controller_keys = {"a",     "x1d",         "alpha",
                         "gains", "gain_margin", "delta"};
      break;
  }
  for (const auto& section : doc.sections) {
    const std::set<std::string>* allowed = nullptr;
    if (section.name == "scenario") {
      allowed = &scenario_keys;
    } else if (section.name == "controller") {
      allowed = &controller_keys;
    } else if (section.name.empty()) {
      if (!section.entries.empty()) {
        fail("unknown-field",
             "top-level key '" + section.entries.front().key +
                 "' outside any section (line " +
                 std::to_string(section.entries.front().line) + ")");
      }
      continue;
    } else {
      fail("unknown-field", "unexpected section [" + section.name +
                                "] (line " + std::to_string(section.line) + ")");
    }
    for (const auto& entry : section.entries) {
      if (!allowed->count(entry.key)) {
        fail("unknown-field", section.name + "." + entry.key +
                                  " is not recognized (line " +
                                  std::to_string(entry.line) + ")");
      }
    }
  }
}

void require_alpha_range(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    fail("alpha-range", "alpha must lie strictly inside (0, 1), got " +
                            config::format_number(alpha));
  }
}

unicycle::ReferenceTrajectory build_reference(const UnicycleParams& p) {
  const Eigen::VectorXd& rp = p.reference_params;
  if (p.reference == "sinusoid") {
    if (rp.size() != 0) {
      fail("reference-kind", "sinusoid reference takes no parameters");
    }
    return unicycle::sinusoid_reference();
  }
  if (p.reference == "line") {
    if (rp.size() != 4) {
      fail("reference-kind",
           "line reference needs reference_params = x0, y0, vx, vy");
    }
    return unicycle::line_reference(Eigen::Vector2d(rp(0), rp(1)),
                                    Eigen::Vector2d(rp(2), rp(3)));
  }
  if (p.reference == "circle") {
    if (rp.size() != 2) {
      fail("reference-kind",
           "circle reference needs reference_params = radius, omega");
    }
    return unicycle::circle_reference(rp(0), rp(1));
  }
  if (p.reference == "point") {
    if (rp.size() != 2) {
      fail("reference-kind", "point reference needs reference_params = x, y");
    }
    return unicycle::static_point_reference(Eigen::Vector2d(rp(0), rp(1)));
  }
  fail("reference-kind", "unknown reference '" + p.reference +
                             "'; expected sinusoid, line, circle, or point");
}

lti::CanonicalGains resolve_gains(const CanonicalParams& p,
                                  const Eigen::VectorXd& x0) {
  lti::CanonicalGains g;
  g.alpha = p.alpha;
  g.delta = p.delta;
  if (p.auto_gains) {
    const double floor_gain =
        std::max(p.gain_margin * lti::min_global_gain(x0, p.x1d, p.alpha), 0.1);
    g.k = Eigen::VectorXd::Constant(x0.size(), floor_gain);
  } else {
    g.k = p.k;
  }
  return g;
}

double point_margin(const Eigen::VectorXd& x, const barrier::BarrierParams& p) {
  return (x - p.obstacle).norm() - p.clearance();
}

// Smallest ||grad B||^2 / B over safe grid points outside the exclusion tube
// and away from the goal. Feeds the quotient bound behind the decrement rate.
double gradient_bound_constant(const barrier::BarrierParams& p,
                               const Eigen::VectorXd& x0, double tube) {
  const Eigen::Vector2d tau(p.goal(0), p.goal(1));
  const Eigen::Vector2d obs(p.obstacle(0), p.obstacle(1));
  const Eigen::Vector2d start(x0(0), x0(1));
  Eigen::Vector2d lo = tau.cwiseMin(obs).cwiseMin(start);
  Eigen::Vector2d hi = tau.cwiseMax(obs).cwiseMax(start);
  const double pad = 0.5 * (hi - lo).maxCoeff() + 1.0;
  lo.array() -= pad;
  hi.array() += pad;

  barrier::ExclusionRay ray = barrier::exclusion_ray(p);
  ray.thickness = tube;

  const int n = 160;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      Eigen::VectorXd x(2);
      x << lo(0) + (hi(0) - lo(0)) * i / n, lo(1) + (hi(1) - lo(1)) * j / n;
      if (point_margin(x, p) < 1e-6) continue;
      if ((x - p.goal).norm() < 1e-3) continue;
      if (barrier::in_exclusion_ray(x, ray)) continue;
      const double b = barrier::barrier_value(x, p);
      if (!(b > 0)) continue;
      const double g2 = barrier::barrier_gradient(x, p).squaredNorm();
      worst = std::min(worst, g2 / b);
    }
  }
  return worst;
}

void write_report(const Scenario& s, const RunResult& res) {
  config::Document doc;
  doc.set("run", "scenario", s.name);
  doc.set("run", "system", to_string(s.kind));
  doc.set("run", "seed", std::to_string(res.seed));
  doc.set("run", "trace", res.trace_path);

  doc.set("settling", "settled", res.settling.settled ? "true" : "false");
  if (res.settling.settled) {
    doc.set_number("settling", "time", res.settling.settling_time);
  }
  doc.set_number("settling", "eps", res.settling.eps);
  doc.set_number("settling", "dwell", res.settling.dwell);

  doc.set_number("lyapunov", "c", res.lyapunov.c);
  doc.set_number("lyapunov", "beta", res.lyapunov.beta);
  doc.set_number("lyapunov", "tolerance", res.lyapunov.tol);
  doc.set("lyapunov", "checked", std::to_string(res.lyapunov.checked));
  doc.set("lyapunov", "violations",
          std::to_string(res.lyapunov.violations.size()));
  doc.set_number("lyapunov", "max_residual", res.lyapunov.max_residual);

  if (std::isfinite(res.max_control)) {
    doc.set_number("extras", "max_control", res.max_control);
  }
  if (std::isfinite(res.safety_margin)) {
    doc.set_number("extras", "safety_margin", res.safety_margin);
  }

  for (const auto& [name, passed] : res.checks) {
    doc.set("checks", name, passed ? "pass" : "fail");
  }
  for (std::size_t i = 0; i < res.warnings.size(); ++i) {
    doc.set("warnings", "warning_" + std::to_string(i), res.warnings[i]);
  }

  std::ofstream out(res.report_path);
  if (!out) {
    throw std::runtime_error("cannot open report file " + res.report_path);
  }
  out << doc.serialize();
}

void verify_trace_round_trip(const RunResult& res, const Trajectory& traj,
                             std::size_t extra_columns) {
  const CsvTable table = read_csv(res.trace_path);
  const std::size_t control_cols =
      traj.controls.empty() ? 0
                            : static_cast<std::size_t>(traj.controls[0].size());
  const std::size_t expected_cols =
      1 + static_cast<std::size_t>(traj.states[0].size()) + control_cols +
      extra_columns;
  if (table.rows.size() != traj.times.size() ||
      table.header.size() != expected_cols) {
    throw std::runtime_error("trace round-trip mismatch for " + res.trace_path);
  }
}

}  // namespace

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::ScalarField:
      return "scalar-field";
    case SystemKind::Unicycle:
      return "unicycle";
    case SystemKind::Barrier:
      return "single-integrator-barrier";
    case SystemKind::LtiFullRank:
      return "lti-full-rank";
    case SystemKind::LtiCanonical:
      return "lti-canonical";
  }
  throw std::logic_error("unreachable system kind");
}

SystemKind system_kind_from(const std::string& text) {
  if (text == "scalar-field") return SystemKind::ScalarField;
  if (text == "unicycle") return SystemKind::Unicycle;
  if (text == "single-integrator-barrier") return SystemKind::Barrier;
  if (text == "lti-full-rank") return SystemKind::LtiFullRank;
  if (text == "lti-canonical") return SystemKind::LtiCanonical;
  fail("system-kind", "unknown system '" + text +
                          "'; expected scalar-field, unicycle, "
                          "single-integrator-barrier, lti-full-rank, or "
                          "lti-canonical");
}

Scenario parse_scenario(const config::Document& doc) {
  Scenario s;
  s.name = doc.string_or("scenario", "name", "unnamed");
  s.kind = system_kind_from(doc.require_string("scenario", "system"));
  check_known_keys(doc, s.kind);

  s.x0 = doc.require_vector("scenario", "x0");
  s.t0 = doc.number_or("scenario", "t0", 0.0);
  s.tf = doc.require_number("scenario", "tf");
  s.policy.dt = doc.number_or("scenario", "dt", 1e-3);
  s.policy.snap_radius = doc.number_or("scenario", "snap_radius", 1e-9);
  const std::string method = doc.string_or("scenario", "method", "rk4");
  if (method == "rk4") {
    s.policy.method = StepPolicy::Method::Rk4;
  } else if (method == "euler") {
    s.policy.method = StepPolicy::Method::Euler;
  } else {
    fail("step-method",
         "unknown method '" + method + "'; expected rk4 or euler");
  }
  s.settle_eps = doc.number_or("scenario", "settle_eps", 1e-2);
  s.settle_dwell = doc.number_or("scenario", "settle_dwell", 1.0);

  if (s.x0.size() == 0 || !s.x0.allFinite()) {
    fail("state-dimension", "x0 must be a non-empty finite vector");
  }
  if (!(s.tf > s.t0)) {
    fail("horizon", "tf must exceed t0 (" + config::format_number(s.t0) +
                        " .. " + config::format_number(s.tf) + ")");
  }
  const double span = s.tf - s.t0;
  if (!(s.policy.dt > 0) || s.policy.dt > span) {
    fail("step-size", "dt must be positive and no larger than the horizon");
  }
  if (!(s.policy.snap_radius >= 0)) {
    fail("snap-radius", "snap_radius must be non-negative");
  }
  if (!(s.settle_eps > 0)) {
    fail("settling-window", "settle_eps must be positive");
  }
  if (!(s.settle_dwell >= 0) || s.settle_dwell > span) {
    fail("settling-window", "settle_dwell must lie in [0, tf - t0]");
  }

  switch (s.kind) {
    case SystemKind::ScalarField: {
      s.scalar.k = doc.number_or("controller", "k", 1.0);
      s.scalar.alpha = doc.number_or("controller", "alpha", 0.5);
      if (!(s.scalar.k > 0)) {
        fail("gain-positive", "k must be positive");
      }
      require_alpha_range(s.scalar.alpha);
      break;
    }
    case SystemKind::Unicycle: {
      if (s.x0.size() != 3) {
        fail("state-dimension", "unicycle state is x, y, theta");
      }
      s.uni.gains.k = doc.number_or("controller", "k", 0.5);
      s.uni.gains.k_omega = doc.number_or("controller", "k_omega", 2.0);
      s.uni.gains.alpha = doc.number_or("controller", "alpha", 0.5);
      s.uni.gains.delta = doc.number_or("controller", "delta", 1e-6);
      try {
        unicycle::validate(s.uni.gains);
      } catch (const std::invalid_argument& e) {
        fail("unicycle-gains", e.what());
      }
      s.uni.reference = doc.string_or("controller", "reference", "sinusoid");
      s.uni.reference_params =
          doc.vector_or("controller", "reference_params", Eigen::VectorXd());
      try {
        build_reference(s.uni);
      } catch (const std::invalid_argument& e) {
        fail("reference-kind", e.what());
      }
      break;
    }
    case SystemKind::Barrier: {
      if (s.x0.size() != 2) {
        fail("state-dimension", "obstacle scenarios are planar");
      }
      s.bar.goal = doc.require_vector("controller", "tau");
      s.bar.obstacle = doc.require_vector("controller", "o");
      s.bar.obstacle_radius = doc.number_or("controller", "rho_o", 1.0);
      s.bar.standoff = doc.number_or("controller", "d_m", 1.0);
      s.bar.epsilon = doc.number_or("controller", "epsilon", 1000.0);
      s.bar.k1 = doc.number_or("controller", "k1", 1.0);
      s.bar.alpha = doc.number_or("controller", "alpha", 0.5);
      s.bar.delta = doc.number_or("controller", "delta", 1e-9);
      if (s.bar.goal.size() != 2 || s.bar.obstacle.size() != 2) {
        fail("state-dimension", "tau and o must be planar points");
      }
      if (!(s.bar.k1 > 0)) {
        fail("gain-positive", "k1 must be positive");
      }
      require_alpha_range(s.bar.alpha);
      try {
        barrier::validate(s.bar);
      } catch (const std::invalid_argument& e) {
        fail("obstacle-separation", e.what());
      }
      try {
        barrier::barrier_value(s.x0, s.bar);
      } catch (const barrier::SafetyViolatedError& e) {
        fail("initial-safety", e.what());
      }
      if (barrier::in_exclusion_ray(s.x0, barrier::exclusion_ray(s.bar))) {
        fail("exclusion-ray",
             "x0 sits on the obstacle shadow ray where the gradient can vanish");
      }
      break;
    }
    case SystemKind::LtiFullRank: {
      s.full_rank.A = doc.require_matrix("controller", "A");
      s.full_rank.B = doc.require_matrix("controller", "B");
      s.full_rank.alpha = doc.number_or("controller", "alpha", 0.5);
      require_alpha_range(s.full_rank.alpha);
      const Eigen::Index n = s.x0.size();
      if (s.full_rank.A.rows() != n || s.full_rank.A.cols() != n ||
          s.full_rank.B.rows() != n || s.full_rank.B.cols() != n) {
        fail("state-dimension",
             "A and B must be square with the same dimension as x0");
      }
      try {
        const lti::LinearSystem sys =
            lti::make_system(s.full_rank.A, s.full_rank.B);
        lti::make_hurwitz_gain(sys);
      } catch (const lti::RankError& e) {
        fail("input-rank", e.what());
      } catch (const lti::NotControllableError& e) {
        fail("controllability", e.what());
      }
      break;
    }
    case SystemKind::LtiCanonical: {
      s.canonical.a = doc.require_vector("controller", "a");
      if (s.x0.size() != s.canonical.a.size()) {
        fail("state-dimension", "x0 and a must share one dimension");
      }
      s.canonical.x1d = doc.require_number("controller", "x1d");
      s.canonical.alpha = doc.number_or("controller", "alpha", 0.8);
      s.canonical.delta = doc.number_or("controller", "delta", 1e-6);
      const std::string gains = doc.string_or("controller", "gains", "auto");
      if (gains == "auto") {
        s.canonical.auto_gains = true;
        s.canonical.gain_margin =
            doc.number_or("controller", "gain_margin", 1.1);
        if (!(s.canonical.gain_margin > 0)) {
          fail("gain-margin", "gain_margin must be positive");
        }
      } else {
        s.canonical.auto_gains = false;
        s.canonical.k = doc.require_vector("controller", "gains");
      }
      try {
        lti::validate(resolve_gains(s.canonical, s.x0), s.x0.size());
      } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        if (what.find("alpha") != std::string::npos) {
          fail("alpha-range", what);
        }
        fail("gain-positive", what);
      }
      break;
    }
  }
  return s;
}

config::Document to_document(const Scenario& s) {
  config::Document doc;
  doc.set("scenario", "name", s.name);
  doc.set("scenario", "system", to_string(s.kind));
  doc.set("scenario", "x0", join_vector(s.x0));
  doc.set_number("scenario", "t0", s.t0);
  doc.set_number("scenario", "tf", s.tf);
  doc.set_number("scenario", "dt", s.policy.dt);
  doc.set("scenario", "method",
          s.policy.method == StepPolicy::Method::Rk4 ? "rk4" : "euler");
  doc.set_number("scenario", "snap_radius", s.policy.snap_radius);
  doc.set_number("scenario", "settle_eps", s.settle_eps);
  doc.set_number("scenario", "settle_dwell", s.settle_dwell);

  switch (s.kind) {
    case SystemKind::ScalarField:
      doc.set_number("controller", "k", s.scalar.k);
      doc.set_number("controller", "alpha", s.scalar.alpha);
      break;
    case SystemKind::Unicycle:
      doc.set_number("controller", "k", s.uni.gains.k);
      doc.set_number("controller", "k_omega", s.uni.gains.k_omega);
      doc.set_number("controller", "alpha", s.uni.gains.alpha);
      doc.set_number("controller", "delta", s.uni.gains.delta);
      doc.set("controller", "reference", s.uni.reference);
      if (s.uni.reference_params.size() > 0) {
        doc.set("controller", "reference_params",
                join_vector(s.uni.reference_params));
      }
      break;
    case SystemKind::Barrier:
      doc.set("controller", "tau", join_vector(s.bar.goal));
      doc.set("controller", "o", join_vector(s.bar.obstacle));
      doc.set_number("controller", "rho_o", s.bar.obstacle_radius);
      doc.set_number("controller", "d_m", s.bar.standoff);
      doc.set_number("controller", "epsilon", s.bar.epsilon);
      doc.set_number("controller", "k1", s.bar.k1);
      doc.set_number("controller", "alpha", s.bar.alpha);
      doc.set_number("controller", "delta", s.bar.delta);
      break;
    case SystemKind::LtiFullRank:
      doc.set("controller", "A", join_matrix(s.full_rank.A));
      doc.set("controller", "B", join_matrix(s.full_rank.B));
      doc.set_number("controller", "alpha", s.full_rank.alpha);
      break;
    case SystemKind::LtiCanonical:
      doc.set("controller", "a", join_vector(s.canonical.a));
      doc.set_number("controller", "x1d", s.canonical.x1d);
      doc.set_number("controller", "alpha", s.canonical.alpha);
      if (s.canonical.auto_gains) {
        doc.set("controller", "gains", "auto");
        doc.set_number("controller", "gain_margin", s.canonical.gain_margin);
      } else {
        doc.set("controller", "gains", join_vector(s.canonical.k));
      }
      doc.set_number("controller", "delta", s.canonical.delta);
      break;
  }
  return doc;
}

std::string serialize(const Scenario& s) { return to_document(s).serialize(); }

bool RunResult::all_passed() const {
  for (const auto& [name, passed] : checks) {
    if (!passed) return false;
  }
  return true;
}

namespace {

// Built-in scenarios. scenarios/*.scn in the repository hold the same text so
// the files stay usable as copy-paste starting points.
const std::map<std::string, const char*>& builtin_registry() {
  static const std::map<std::string, const char*> reg = {
      {"scalar-flow",
       R"(# Canonical finite-time flow x' = -k sign(x) |x|^alpha.
[scenario]
name = scalar-flow
system = scalar-field
x0 = 1
t0 = 0
tf = 6
dt = 0.001
method = rk4
snap_radius = 1e-06
settle_eps = 0.01
settle_dwell = 1

[controller]
k = 1
alpha = 0.5
)"},
      {"unicycle-sinusoid",
       R"(# Unicycle tracking the reference (t, cos t) from a displaced start.
[scenario]
name = unicycle-sinusoid
system = unicycle
x0 = 0.5, 2, 0
t0 = 0
tf = 20
dt = 0.001
method = rk4
snap_radius = 1e-06
settle_eps = 0.01
settle_dwell = 1

[controller]
k = 0.5
k_omega = 2
alpha = 0.5
delta = 1e-06
reference = sinusoid
)"},
      {"barrier-default",
       R"(# Single integrator steering to (10, 20) around one circular obstacle.
[scenario]
name = barrier-default
system = single-integrator-barrier
x0 = 0, 0
t0 = 0
tf = 60
dt = 0.001
method = rk4
snap_radius = 1e-06
settle_eps = 0.01
settle_dwell = 1

[controller]
tau = 10, 20
o = 4, 6
rho_o = 1
d_m = 1
epsilon = 1000
k1 = 1
alpha = 0.5
delta = 1e-09
)"},
      {"lti-fullrank-2state",
       R"(# Double integrator with a square input matrix and placed poles.
[scenario]
name = lti-fullrank-2state
system = lti-full-rank
x0 = 3, 4
t0 = 0
tf = 10
dt = 0.001
method = rk4
snap_radius = 1e-06
settle_eps = 1e-06
settle_dwell = 1

[controller]
A = 0, 1; 0, 0
B = 1, 0; 0, 1
alpha = 0.5
)"},
      {"lti-canonical-4state",
       R"(# Four-state integrator chain driven to x1 = 5 with derived gains.
[scenario]
name = lti-canonical-4state
system = lti-canonical
x0 = 0, 0, 0, 0
t0 = 0
tf = 40
dt = 0.001
method = rk4
snap_radius = 1e-09
settle_eps = 0.001
settle_dwell = 1

[controller]
a = 0, 0, 0, 0
x1d = 5
alpha = 0.8
gains = auto
gain_margin = 1.1
delta = 1e-06
)"},
  };
  return reg;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, text] : builtin_registry()) out.push_back(name);
    return out;
  }();
  return names;
}

std::string builtin_text(const std::string& name) {
  const auto& reg = builtin_registry();
  auto it = reg.find(name);
  if (it == reg.end()) {
    throw std::invalid_argument("no built-in scenario named '" + name + "'");
  }
  return it->second;
}

Scenario load_scenario(const std::string& path_or_name) {
  const auto& reg = builtin_registry();
  auto it = reg.find(path_or_name);
  if (it != reg.end()) {
    return parse_scenario(config::parse(it->second));
  }
  return parse_scenario(config::parse_file(path_or_name));
}

namespace {

struct KindRun {
  Trajectory traj;
  SettlingReport settling;
  LyapunovCheckReport lyapunov;
  double max_control = std::numeric_limits<double>::quiet_NaN();
  double safety_margin = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<NamedColumn> extras;
};

double max_control_norm(const Trajectory& traj) {
  if (traj.controls.empty()) return std::numeric_limits<double>::quiet_NaN();
  double worst = 0.0;
  for (const auto& u : traj.controls) worst = std::max(worst, u.norm());
  return worst;
}

KindRun run_scalar(const Scenario& s) {
  KindRun out;
  Dynamics dyn;
  dyn.rhs = fts_flow(s.scalar.k, s.scalar.alpha, static_cast<int>(s.x0.size()));
  dyn.non_lipschitz = true;
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(s.x0.size());
  out.traj = integrate(dyn, s.x0, s.t0, s.tf, s.policy, origin);

  out.settling = detect_settling(out.traj, origin, s.settle_eps, s.settle_dwell);

  const double beta = 0.5 * (1.0 + s.scalar.alpha);
  const double c = s.scalar.k * std::pow(2.0, beta);
  std::vector<double> v(out.traj.times.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = 0.5 * out.traj.states[i].squaredNorm();
  }
  out.lyapunov = verify_decrement_series(out.traj.times, v, c, beta, 1e-2);
  out.extras.push_back({"V", v});
  out.checks.push_back({"settled", out.settling.settled});
  out.checks.push_back({"decrement", out.lyapunov.violations.empty()});
  return out;
}

KindRun run_unicycle(const Scenario& s) {
  KindRun out;
  const unicycle::ReferenceTrajectory ref = build_reference(s.uni);
  out.traj = integrate(unicycle::closed_loop(ref, s.uni.gains), s.x0, s.t0,
                       s.tf, s.policy);

  const std::size_t n = out.traj.times.size();
  std::vector<double> position(n);
  std::vector<double> heading(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = out.traj.times[i];
    const Eigen::VectorXd& q = out.traj.states[i];
    const Eigen::Vector2d r(q(0), q(1));
    position[i] = (r - ref.position(t)).norm();
    heading[i] = std::abs(
        unicycle::control(unicycle::UnicycleState(r, q(2)), t, ref, s.uni.gains)
            .heading_error);
  }
  out.extras.push_back({"posErr", position});
  out.extras.push_back({"headErr", heading});

  // Settle when both tracking errors are inside eps.
  auto tracking_error = [&](double t, const StateVector& q) {
    const Eigen::Vector2d r(q(0), q(1));
    const double pe = (r - ref.position(t)).norm();
    const double he = std::abs(
        unicycle::control(unicycle::UnicycleState(r, q(2)), t, ref, s.uni.gains)
            .heading_error);
    return std::max(pe, he);
  };
  out.settling = detect_settling_error(out.traj, tracking_error, s.settle_eps,
                                       s.settle_dwell);

  const double beta = 0.5 * (1.0 + s.uni.gains.alpha);
  const double c = s.uni.gains.k_omega * std::pow(2.0, beta);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 0.5 * heading[i] * heading[i];
  out.lyapunov = verify_decrement_series(out.traj.times, v, c, beta, 1e-2);

  // The heading certificate degrades where the guidance field direction is
  // dominated by the softened position term; skip samples whose neighborhood
  // has position error inside 10 * delta, then allow a 1% numerical residue.
  const double zone = 10.0 * s.uni.gains.delta;
  std::size_t outside = 0;
  std::size_t outside_violations = 0;
  std::size_t vi = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    bool in_zone = false;
    for (std::size_t w = i - 1; w <= i + 1; ++w) {
      if (position[w] <= zone) in_zone = true;
    }
    while (vi < out.lyapunov.violations.size() &&
           out.lyapunov.violations[vi].first < out.traj.times[i] - 1e-12) {
      ++vi;
    }
    const bool violated = vi < out.lyapunov.violations.size() &&
                          std::abs(out.lyapunov.violations[vi].first -
                                   out.traj.times[i]) <= 1e-12;
    if (!in_zone && v[i] > 0) {
      ++outside;
      if (violated) ++outside_violations;
    }
  }
  const bool decrement_ok =
      outside == 0 || static_cast<double>(outside_violations) <=
                          0.01 * static_cast<double>(outside);

  out.max_control = max_control_norm(out.traj);
  out.checks.push_back({"settled", out.settling.settled});
  out.checks.push_back({"heading-decrement", decrement_ok});
  return out;
}

KindRun run_barrier(const Scenario& s) {
  KindRun out;
  out.traj = integrate(barrier::closed_loop(s.bar), s.x0, s.t0, s.tf, s.policy,
                       s.bar.goal);
  out.settling =
      detect_settling(out.traj, s.bar.goal, s.settle_eps, s.settle_dwell);
  out.max_control = max_control_norm(out.traj);

  const std::size_t n = out.traj.times.size();
  std::vector<double> b(n);
  std::vector<double> grad_norm(n);
  std::vector<double> margin(n);
  double max_rise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd& x = out.traj.states[i];
    b[i] = barrier::barrier_value(x, s.bar);
    grad_norm[i] = barrier::barrier_gradient(x, s.bar).norm();
    margin[i] = point_margin(x, s.bar);
    if (i > 0) max_rise = std::max(max_rise, b[i] - b[i - 1]);
  }
  out.extras.push_back({"B", b});
  out.extras.push_back({"normGradB", grad_norm});
  out.extras.push_back({"margin", margin});
  out.safety_margin = *std::min_element(margin.begin(), margin.end());

  const double separation = (s.bar.obstacle - s.bar.goal).norm();
  barrier::ExclusionRay ray = barrier::exclusion_ray(s.bar);
  const double tube = std::max(0.05 * separation, ray.thickness);
  ray.thickness = tube;
  bool ray_clear = true;
  for (const auto& x : out.traj.states) {
    if (barrier::in_exclusion_ray(x, ray)) {
      ray_clear = false;
      break;
    }
  }

  const double grid_c = gradient_bound_constant(s.bar, s.x0, tube);
  const double beta = 0.5 * (1.0 + s.bar.alpha);
  const double rate = std::pow(1.0 / s.bar.epsilon, beta) * s.bar.k1 *
                      std::pow(0.8 * grid_c, 1.0 + s.bar.alpha);
  out.lyapunov = verify_decrement_series(out.traj.times, b, rate, beta, 1e-6);

  out.checks.push_back({"settled", out.settling.settled});
  out.checks.push_back({"safety-margin", out.safety_margin >= 0.0});
  out.checks.push_back({"barrier-monotone", max_rise <= 1e-6});
  out.checks.push_back({"ray-clearance", ray_clear});
  out.checks.push_back({"barrier-decrement", out.lyapunov.violations.empty()});
  return out;
}

KindRun run_full_rank(const Scenario& s) {
  KindRun out;
  const lti::LinearSystem sys = lti::make_system(s.full_rank.A, s.full_rank.B);
  const lti::LyapunovCertificate cert = lti::make_hurwitz_gain(sys);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(s.x0.size());
  out.traj = integrate(lti::full_rank_loop(sys, cert, s.full_rank.alpha), s.x0,
                       s.t0, s.tf, s.policy, origin);
  out.settling = detect_settling(out.traj, origin, s.settle_eps, s.settle_dwell);
  out.max_control = max_control_norm(out.traj);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cert.P);
  const double lam_min = es.eigenvalues().minCoeff();
  const double lam_max = es.eigenvalues().maxCoeff();
  const double beta = 0.5 * (1.0 + s.full_rank.alpha);
  const double c = 2.0 * lam_min / std::pow(lam_max, beta);

  const std::size_t n = out.traj.times.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd& x = out.traj.states[i];
    v[i] = x.dot(cert.P * x);
  }
  out.extras.push_back({"V", v});
  out.lyapunov = verify_decrement_series(out.traj.times, v, c, beta, 1e-3);
  out.checks.push_back({"settled", out.settling.settled});
  out.checks.push_back({"decrement", out.lyapunov.violations.empty()});
  return out;
}

KindRun run_canonical(const Scenario& s) {
  KindRun out;
  const lti::LinearSystem sys = lti::make_canonical(s.canonical.a);
  const lti::CanonicalGains gains = resolve_gains(s.canonical, s.x0);
  const Eigen::Index dim = s.x0.size();
  Eigen::VectorXd target = Eigen::VectorXd::Zero(dim);
  target(0) = s.canonical.x1d;
  out.traj = integrate(lti::canonical_loop(sys, s.canonical.x1d, gains), s.x0,
                       s.t0, s.tf, s.policy, target);
  out.max_control = max_control_norm(out.traj);

  // Error and energy live in desired-chain coordinates, not raw state deltas.
  const std::size_t n = out.traj.times.size();
  std::vector<double> v(n);
  std::vector<std::vector<double>> xd(dim, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const lti::DesiredChain chain =
        lti::desired_chain(out.traj.states[i], s.canonical.x1d, gains);
    v[i] = 0.5 * (out.traj.states[i] - chain.xd).squaredNorm();
    for (Eigen::Index j = 0; j < dim; ++j) xd[j][i] = chain.xd(j);
  }
  out.extras.push_back({"V", v});
  for (Eigen::Index j = 0; j < dim; ++j) {
    out.extras.push_back({"xd_" + std::to_string(j + 1), xd[j]});
  }
  auto chain_error = [&](double, const StateVector& x) {
    return (x - lti::desired_chain(x, s.canonical.x1d, gains).xd).norm();
  };
  out.settling = detect_settling_error(out.traj, chain_error, s.settle_eps,
                                       s.settle_dwell);

  // Regularization parks the chain error slightly above delta, so certify
  // plain descent (c ~ 0) rather than a finite-time rate.
  out.lyapunov = verify_decrement_series(out.traj.times, v, 1e-12, 0.5, 1e-5);

  out.checks.push_back({"settled", out.settling.settled});
  out.checks.push_back({"energy-descent", out.lyapunov.violations.empty()});
  out.checks.push_back({"bounded-control", std::isfinite(out.max_control)});
  return out;
}

}  // namespace

RunResult run_scenario(const Scenario& s, const std::string& out_dir,
                       std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);

  KindRun kr;
  switch (s.kind) {
    case SystemKind::ScalarField:
      kr = run_scalar(s);
      break;
    case SystemKind::Unicycle:
      kr = run_unicycle(s);
      break;
    case SystemKind::Barrier:
      kr = run_barrier(s);
      break;
    case SystemKind::LtiFullRank:
      kr = run_full_rank(s);
      break;
    case SystemKind::LtiCanonical:
      kr = run_canonical(s);
      break;
  }

  RunResult res;
  res.scenario_name = s.name;
  res.seed = seed;
  res.settling = kr.settling;
  res.lyapunov = kr.lyapunov;
  res.max_control = kr.max_control;
  res.safety_margin = kr.safety_margin;
  res.warnings = kr.traj.warnings;
  res.checks = kr.checks;

  const std::filesystem::path dir(out_dir);
  res.trace_path = (dir / (s.name + "-trace.csv")).string();
  res.report_path = (dir / (s.name + "-report.txt")).string();

  write_trace_csv(res.trace_path, kr.traj, kr.extras);
  verify_trace_round_trip(res, kr.traj, kr.extras.size());
  write_report(s, res);

  return res;
}

std::vector<RunResult> sweep(const Scenario& s, const std::string& parameter,
                             const std::vector<double>& values,
                             const std::string& out_dir, std::uint64_t seed) {
  const auto dot = parameter.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == parameter.size()) {
    throw std::invalid_argument("sweep parameter must be section.key, got '" +
                                parameter + "'");
  }
  const std::string section = parameter.substr(0, dot);
  const std::string key = parameter.substr(dot + 1);

  const config::Document base = to_document(s);
  if (!base.has(section, key)) {
    throw std::invalid_argument("scenario '" + s.name + "' has no parameter " +
                                parameter);
  }
  base.require_number(section, key);  // numeric parameters only

  std::vector<RunResult> results;
  for (std::size_t i = 0; i < values.size(); ++i) {
    config::Document doc = base;
    doc.set_number(section, key, values[i]);
    doc.set("scenario", "name", s.name + "-" + key + "-" + std::to_string(i));
    const Scenario variant = parse_scenario(doc);
    results.push_back(run_scenario(variant, out_dir, seed));
  }
  return results;
}

}  // namespace fts::scenario
