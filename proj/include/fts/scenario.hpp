#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fts/analysis.hpp"
#include "fts/barrier.hpp"
#include "fts/config.hpp"
#include "fts/trajectory.hpp"
#include "fts/unicycle.hpp"

namespace fts::scenario {

// Raised when a scenario violates a load-time invariant; `invariant()` names
// the violated rule (e.g. "obstacle-separation", "alpha-range").
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& invariant, const std::string& detail)
      : std::runtime_error("invariant " + invariant + ": " + detail), invariant_(invariant) {}
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

enum class SystemKind { ScalarField, Unicycle, Barrier, LtiFullRank, LtiCanonical };

std::string to_string(SystemKind kind);
SystemKind system_kind_from(const std::string& name);

struct ScalarFlowParams {
  double k = 1.0;
  double alpha = 0.5;
};

struct UnicycleParams {
  unicycle::UnicycleGains gains;
  // Named reference family: sinusoid | line | circle | point.
  std::string reference = "sinusoid";
  // line: x0, y0, vx, vy; circle: radius, angular rate; point: x, y.
  Eigen::VectorXd reference_params;
};

struct FullRankParams {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double alpha = 0.5;
};

struct CanonicalParams {
  Eigen::VectorXd a;
  double x1d = 0.0;
  double alpha = 0.8;
  bool auto_gains = true;
  double gain_margin = 1.1;  // gains = margin * minimal global gain when auto
  Eigen::VectorXd k;         // explicit gains otherwise
  double delta = 1e-6;
};

struct Scenario {
  std::string name;
  SystemKind kind = SystemKind::ScalarField;
  Eigen::VectorXd x0;
  double t0 = 0.0;
  double tf = 1.0;
  StepPolicy policy;
  double settle_eps = 1e-2;
  double settle_dwell = 1.0;

  ScalarFlowParams scalar;
  UnicycleParams uni;
  barrier::BarrierParams bar;
  FullRankParams full_rank;
  CanonicalParams canonical;
};

// Parses and validates; throws config::ParseError with a line number or
// ValidationError naming the violated invariant.
Scenario parse_scenario(const config::Document& doc);

// Accepts a built-in name (see builtin_names) or a path to a scenario file.
Scenario load_scenario(const std::string& path_or_name);

config::Document to_document(const Scenario& s);
std::string serialize(const Scenario& s);

struct RunResult {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::string trace_path;
  std::string report_path;
  SettlingReport settling;
  LyapunovCheckReport lyapunov;
  double max_control = std::numeric_limits<double>::quiet_NaN();
  double safety_margin = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
  // Named pass/fail verdicts; the CLI exit status folds these together.
  std::vector<std::pair<std::string, bool>> checks;

  bool all_passed() const;
};

// Integrates the closed loop, writes <name>-trace.csv and <name>-report.txt
// under out_dir, verifies the trace parses back, and evaluates the module's
// invariant checks.  The seed is echoed into the report; all dynamics are
// deterministic.
RunResult run_scenario(const Scenario& s, const std::string& out_dir, std::uint64_t seed = 0);

// Independent runs with `parameter` (a "section.key" address into the
// serialized scenario, e.g. "controller.alpha") set to each value in turn.
std::vector<RunResult> sweep(const Scenario& s, const std::string& parameter,
                             const std::vector<double>& values, const std::string& out_dir,
                             std::uint64_t seed = 0);

const std::vector<std::string>& builtin_names();
std::string builtin_text(const std::string& name);

}  // namespace fts::scenario
