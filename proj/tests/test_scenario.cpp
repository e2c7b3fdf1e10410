#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fts/analysis.hpp"
#include "fts/config.hpp"
#include "fts/csv.hpp"
#include "fts/scenario.hpp"

using namespace fts;
using namespace fts::scenario;

namespace {

std::string fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("fts-scn-" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string invariant_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.invariant();
  }
  return "<no throw>";
}

config::Document builtin_doc(const std::string& name) {
  return config::parse(builtin_text(name));
}

}  // namespace

TEST_SUITE_BEGIN("scenario");

TEST_CASE("all built-ins load and expose their stated parameters") {
  const auto& names = builtin_names();
  CHECK(names.size() == 5);
  for (const auto& name : names) {
    const Scenario s = load_scenario(name);
    CHECK(s.name == name);
  }

  const Scenario uni = load_scenario("unicycle-sinusoid");
  CHECK(uni.kind == SystemKind::Unicycle);
  CHECK(uni.uni.reference == "sinusoid");
  CHECK(uni.uni.gains.k == 0.5);
  CHECK(uni.uni.gains.k_omega == 2.0);
  CHECK(uni.x0.size() == 3);

  const Scenario bar = load_scenario("barrier-default");
  CHECK(bar.kind == SystemKind::Barrier);
  CHECK(bar.bar.goal(0) == 10.0);
  CHECK(bar.bar.goal(1) == 20.0);
  CHECK(bar.bar.epsilon == 1000.0);
  CHECK(bar.tf == 60.0);

  const Scenario can = load_scenario("lti-canonical-4state");
  CHECK(can.canonical.auto_gains);
  CHECK(can.canonical.x1d == 5.0);
  CHECK(can.canonical.a.size() == 4);
}

TEST_CASE("files in the scenario directory match the embedded built-ins") {
  const std::string dir = FTS_SCENARIO_DIR;
  for (const auto& name : builtin_names()) {
    const std::string path = dir + "/" + name + ".scn";
    REQUIRE(std::filesystem::exists(path));
    CHECK(serialize(load_scenario(path)) == serialize(load_scenario(name)));
    CHECK(slurp(path) == builtin_text(name));
  }
}

TEST_CASE("malformed files report the offending line") {
  try {
    config::parse("[scenario]\nname scalar\n");
    FAIL("expected ParseError");
  } catch (const config::ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    config::parse("[scenario]\nk = 1\n\n[controller]\nk = 2\nk = 3\n");
    FAIL("expected ParseError");
  } catch (const config::ParseError& e) {
    CHECK(e.line() == 6);
  }
  CHECK_THROWS_AS(config::parse("[oops\n"), config::ParseError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/path.scn"), std::invalid_argument);
}

TEST_CASE("validation failures carry invariant names") {
  CHECK(invariant_of([] {
          auto doc = builtin_doc("scalar-flow");
          doc.set("scenario", "system", "rocket");
          parse_scenario(doc);
        }) == "system-kind");
  CHECK(invariant_of([] {
          auto doc = builtin_doc("scalar-flow");
          doc.set_number("scenario", "tf", 0.0);
          parse_scenario(doc);
        }) == "horizon");
  CHECK(invariant_of([] {
          auto doc = builtin_doc("scalar-flow");
          doc.set_number("scenario", "dt", -1.0);
          parse_scenario(doc);
        }) == "step-size");
  CHECK(invariant_of([] {
          auto doc = builtin_doc("scalar-flow");
          doc.set_number("controller", "alpha", 1.0);
          parse_scenario(doc);
        }) == "alpha-range");
  CHECK(invariant_of([] {
          auto doc = builtin_doc("scalar-flow");
          doc.set_number("controller", "zeta", 3.0);
          parse_scenario(doc);
        }) == "unknown-field");
  CHECK(invariant_of([] {
          auto doc = builtin_doc("unicycle-sinusoid");
          doc.set("scenario", "x0", "1, 2");
          parse_scenario(doc);
        }) == "state-dimension");
  CHECK(invariant_of([] {
          auto doc = builtin_doc("unicycle-sinusoid");
          doc.set("controller", "reference", "spiral");
          parse_scenario(doc);
        }) == "reference-kind");
  CHECK(invariant_of([] {
          auto doc = builtin_doc("scalar-flow");
          doc.set("scenario", "method", "rk45");
          parse_scenario(doc);
        }) == "step-method");

  // Start inside the obstacle's keep-out disc.
  CHECK(invariant_of([] {
          auto doc = builtin_doc("barrier-default");
          doc.set("scenario", "x0", "4.5, 6");
          parse_scenario(doc);
        }) == "initial-safety");
  // Start on the shadow ray behind the obstacle.
  CHECK(invariant_of([] {
          auto doc = builtin_doc("barrier-default");
          doc.set("scenario", "x0", "-2, -8");
          parse_scenario(doc);
        }) == "exclusion-ray");
  // Obstacle too close to the goal for the chosen clearance.
  CHECK(invariant_of([] {
          auto doc = builtin_doc("barrier-default");
          doc.set("controller", "o", "9, 19");
          parse_scenario(doc);
        }) == "obstacle-separation");
  // Rank-deficient input matrix.
  CHECK(invariant_of([] {
          auto doc = builtin_doc("lti-fullrank-2state");
          doc.set("controller", "B", "1, 0; 1, 0");
          parse_scenario(doc);
        }) == "input-rank");
  // Exponent below the chain's admissible range ((n-1)/n, 1) for n = 4.
  CHECK(invariant_of([] {
          auto doc = builtin_doc("lti-canonical-4state");
          doc.set_number("controller", "alpha", 0.5);
          parse_scenario(doc);
        }) == "alpha-range");
}

TEST_CASE("serialize and parse round-trip every built-in") {
  for (const auto& name : builtin_names()) {
    const Scenario s = load_scenario(name);
    const std::string text = serialize(s);
    const Scenario back = parse_scenario(config::parse(text));
    CHECK(serialize(back) == text);
    CHECK(back.name == s.name);
    CHECK(back.kind == s.kind);
    CHECK(back.x0 == s.x0);
    CHECK(back.tf == s.tf);
  }
}

TEST_CASE("runs write a trace and a report that parse back") {
  const std::string dir = fresh_dir("run");
  const RunResult res = run_scenario(load_scenario("scalar-flow"), dir, 7);

  CHECK(res.all_passed());
  CHECK(res.settling.settled);
  CHECK(res.settling.settling_time == doctest::Approx(1.801).epsilon(1e-9));

  const CsvTable trace = read_csv(res.trace_path);
  CHECK(trace.rows.size() == 6001);
  CHECK(trace.column("t") == 0);
  CHECK(trace.column("x1") == 1);
  CHECK(trace.column("V") == 2);

  const config::Document report = config::parse_file(res.report_path);
  CHECK(report.require_string("run", "scenario") == "scalar-flow");
  CHECK(report.require_string("run", "seed") == "7");
  CHECK(report.require_string("run", "trace") == res.trace_path);
  CHECK(report.require_string("checks", "settled") == "pass");
  CHECK(report.require_string("checks", "decrement") == "pass");
  CHECK(report.require_number("settling", "time") ==
        doctest::Approx(1.801).epsilon(1e-12));
}

TEST_CASE("every built-in runs green with its stock settings") {
  const std::string dir = fresh_dir("all");
  const struct {
    const char* name;
    double settle;
  } expected[] = {
      {"scalar-flow", 1.801},          {"unicycle-sinusoid", 4.091},
      {"barrier-default", 49.228},     {"lti-fullrank-2state", 2.347},
      {"lti-canonical-4state", 8.384},
  };
  for (const auto& e : expected) {
    const RunResult res = run_scenario(load_scenario(e.name), dir, 0);
    INFO(e.name);
    CHECK(res.all_passed());
    CHECK(res.settling.settled);
    CHECK(res.settling.settling_time == doctest::Approx(e.settle).epsilon(1e-9));
    CHECK(std::filesystem::exists(res.trace_path));
    CHECK(std::filesystem::exists(res.report_path));
  }
}

TEST_CASE("trace columns carry the per-system diagnostics") {
  const std::string dir = fresh_dir("cols");

  const RunResult bar = run_scenario(load_scenario("barrier-default"), dir, 0);
  const CsvTable bt = read_csv(bar.trace_path);
  CHECK(bt.column("B") >= 0);
  CHECK(bt.column("normGradB") >= 0);
  CHECK(bt.column("margin") >= 0);
  CHECK(bt.column("u1") >= 0);
  CHECK(bt.column("u2") >= 0);
  // margin column minimum equals the reported safety margin
  const int mc = bt.column("margin");
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& row : bt.rows) min_margin = std::min(min_margin, row[mc]);
  CHECK(min_margin == doctest::Approx(bar.safety_margin).epsilon(1e-15));

  const RunResult can =
      run_scenario(load_scenario("lti-canonical-4state"), dir, 0);
  const CsvTable ct = read_csv(can.trace_path);
  CHECK(ct.column("V") >= 0);
  for (int j = 1; j <= 4; ++j) {
    CHECK(ct.column("xd_" + std::to_string(j)) >= 0);
  }
  // desired chain starts at the target and the trailing coordinate of xd is 0
  CHECK(ct.rows.front()[ct.column("xd_1")] != 0.0);
}

TEST_CASE("alpha sweep settling times follow the closed form") {
  const std::string dir = fresh_dir("sweep-alpha");
  const Scenario s = load_scenario("scalar-flow");
  const std::vector<double> alphas = {0.3, 0.5, 0.7, 0.9};
  const auto results = sweep(s, "controller.alpha", alphas, dir, 0);
  REQUIRE(results.size() == alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    REQUIRE(results[i].settling.settled);
    // time to reach the settle ball: extinction time difference
    const double expected = analytic_settling_time(1.0, alphas[i], 1.0) -
                            analytic_settling_time(1.0, alphas[i], 0.01);
    CHECK(std::abs(results[i].settling.settling_time - expected) <= 2.1e-3);
    CHECK(results[i].scenario_name ==
          "scalar-flow-alpha-" + std::to_string(i));
  }
}

TEST_CASE("gain sweep halves the settling time when the gain doubles") {
  const std::string dir = fresh_dir("sweep-k");
  const Scenario s = load_scenario("scalar-flow");
  const auto results = sweep(s, "controller.k", {0.5, 1.0, 2.0}, dir, 0);
  REQUIRE(results.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double k = (i == 0) ? 0.5 : (i == 1 ? 1.0 : 2.0);
    REQUIRE(results[i].settling.settled);
    CHECK(std::abs(results[i].settling.settling_time - (2.0 - 0.2) / k) <=
          2.1e-3);
  }
  CHECK(results[0].settling.settling_time /
            results[1].settling.settling_time ==
        doctest::Approx(2.0).epsilon(0.01));
  CHECK(results[1].settling.settling_time /
            results[2].settling.settling_time ==
        doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("sweep rejects unknown parameters and accepts empty value lists") {
  const std::string dir = fresh_dir("sweep-edge");
  const Scenario s = load_scenario("scalar-flow");
  CHECK(sweep(s, "controller.alpha", {}, dir, 0).empty());
  CHECK_THROWS_AS(sweep(s, "controller.zeta", {1.0}, dir, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sweep(s, "alpha", {1.0}, dir, 0), std::invalid_argument);
  CHECK_THROWS_AS(sweep(s, "scenario.name", {1.0}, dir, 0),
                  std::invalid_argument);
}

TEST_CASE("sweep entries match standalone runs of the modified scenario") {
  const std::string sweep_dir = fresh_dir("sweep-batch");
  const std::string solo_dir = fresh_dir("sweep-solo");
  const Scenario s = load_scenario("scalar-flow");

  const auto swept = sweep(s, "controller.k", {2.0}, sweep_dir, 0);
  REQUIRE(swept.size() == 1);

  config::Document doc = to_document(s);
  doc.set_number("controller", "k", 2.0);
  doc.set("scenario", "name", "scalar-flow-k-0");
  const RunResult solo = run_scenario(parse_scenario(doc), solo_dir, 0);

  CHECK(swept[0].settling.settling_time == solo.settling.settling_time);
  CHECK(swept[0].lyapunov.max_residual == solo.lyapunov.max_residual);
  CHECK(slurp(swept[0].trace_path) == slurp(solo.trace_path));
}

TEST_CASE("identical runs produce byte-identical traces") {
  const std::string a = fresh_dir("det-a");
  const std::string b = fresh_dir("det-b");
  for (const auto& name : builtin_names()) {
    const Scenario s = load_scenario(name);
    const RunResult ra = run_scenario(s, a, 3);
    const RunResult rb = run_scenario(s, b, 3);
    INFO(name);
    CHECK(slurp(ra.trace_path) == slurp(rb.trace_path));
  }
}

TEST_SUITE_END();
