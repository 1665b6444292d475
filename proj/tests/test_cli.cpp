#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qtraj/scenario.hpp"

using namespace qtraj;
namespace fs = std::filesystem;

namespace {

const std::string kTunnel =
    R"({"mode":"tunnel","potential":{"kind":"barrier","U":2,"q":1},"E":1,"hbar":1,"mass":1,)"
    R"("grid":{"x_min":-5,"x_max":5,"n_points":1001}})";

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qtraj_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + QTRAJ_BIN + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string scenario_file(const std::string& name) { return std::string(QTRAJ_SCENARIOS) + "/" + name; }

}  // namespace

TEST(Cli, ParsesSchemaExample) {
  const Scenario s = parse_scenario(kTunnel);
  EXPECT_EQ(s.mode, "tunnel");
  EXPECT_TRUE(s.potential.is<RectangularBarrier>());
  EXPECT_EQ(*s.E, 1.0);
  EXPECT_EQ(s.grid->n_points, 1001);
  EXPECT_EQ(s.output, "tunnel");
}

TEST(Cli, RejectsInvalidMicrostate) {
  const std::string msg = parse_error(
      R"({"mode":"verify","potential":{"kind":"free"},"E":0.5,"microstate":{"a":1,"b":1,"c":3},)"
      R"("grid":{"x_min":-1,"x_max":1,"n_points":3}})");
  EXPECT_NE(msg.find("microstate"), std::string::npos) << msg;
  EXPECT_NE(msg.find("ab - c^2/4 must be positive"), std::string::npos) << msg;
}

TEST(Cli, RejectsAboveBarrierEnergy) {
  std::string text = kTunnel;
  text.replace(text.find("\"E\":1"), 5, "\"E\":2");
  const std::string msg = parse_error(text);
  EXPECT_NE(msg.find("sub-barrier energy required"), std::string::npos) << msg;
}

TEST(Cli, RejectsUnknownKeysWithPath) {
  std::string text = kTunnel;
  text.replace(text.find("\"n_points\""), 0, "\"step\":0.1,");
  const std::string msg = parse_error(text);
  EXPECT_NE(msg.find("grid.step"), std::string::npos) << msg;
  EXPECT_NE(parse_error(R"({"mode":"tunnel","colour":1})").find("colour"), std::string::npos);
}

TEST(Cli, ReportsMissingAndMalformedFields) {
  EXPECT_NE(parse_error(R"({"mode":"tunnel","potential":{"kind":"barrier","U":2,"q":1},"E":1})").find("grid"),
            std::string::npos);
  EXPECT_NE(parse_error("{not json").find("malformed"), std::string::npos);
  EXPECT_NE(parse_error(R"({"mode":"bend"})").find("unknown mode"), std::string::npos);
  EXPECT_NE(parse_error(R"({"mode":"bound","potential":{"kind":"well","L":1},"n_nodes":0,"E":1,)"
                        R"("grid":{"x_min":-0.5,"x_max":0.5,"n_points":3}})")
                .find("E"),
            std::string::npos);
  // Grid must stay inside the well.
  EXPECT_NE(parse_error(R"({"mode":"bound","potential":{"kind":"well","L":1},"n_nodes":0,)"
                        R"("grid":{"x_min":-1,"x_max":0.5,"n_points":3}})")
                .find("grid.x_min"),
            std::string::npos);
  EXPECT_NE(parse_error(R"({"mode":"tunnel","potential":{"kind":"barrier","U":2,"q":1},"E":1,)"
                        R"("grid":{"x_min":1,"x_max":-1,"n_points":3}})")
                .find("grid"),
            std::string::npos);
}

TEST(Cli, SubcommandMustMatchDocumentMode) {
  EXPECT_THROW(parse_scenario(kTunnel, std::string("bound")), ScenarioError);
  EXPECT_NO_THROW(parse_scenario(kTunnel, std::string("tunnel")));
}

TEST(Cli, TunnelRunPassesWithExpectedColumns) {
  const RunResult r = compute_scenario(parse_scenario(kTunnel));
  const std::string csv = format_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,re_psi,im_psi,abs_psi,W,W1,current");
  EXPECT_TRUE(r.report.contains("max_qshje_residual"));
  EXPECT_TRUE(r.report.contains("current_variation"));
  for (const auto& [name, vt] : r.checks) EXPECT_LE(vt.first, vt.second) << name;
  EXPECT_EQ(r.rows.size(), 1001u);
}

TEST(Cli, CsvFormattingIsFixed) {
  RunResult r;
  r.header = {"a", "b"};
  r.rows = {{0.1, -2.0}};
  EXPECT_EQ(format_csv(r), "a,b\n1.0000000000000001e-01,-2.0000000000000000e+00\n");
}

TEST(Cli, BoundOscillatorReportsQuantizedAction) {
  const fs::path out = scratch("bound");
  EXPECT_EQ(run_cli("bound \"" + scenario_file("bound_oscillator.json") + "\" --out \"" + out.string() + "\""), 0);
  const auto report = nlohmann::json::parse(slurp(out / "bound_report.json"));
  EXPECT_NEAR(report["J_over_h"].get<double>(), 2.0, 1e-4);
  EXPECT_TRUE(report["passed"].get<bool>());
  const std::string csv = slurp(out / "bound.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,phi,theta,W1,microstate_wave");
}

TEST(Cli, EveryShippedScenarioRuns) {
  for (const std::string mode : {"tunnel", "trajectory", "classical-limit", "verify"}) {
    const std::string file = mode == "tunnel"       ? "tunnel.json"
                             : mode == "trajectory" ? "trajectory_free.json"
                             : mode == "verify"     ? "verify_oscillator.json"
                                                    : "classical_limit.json";
    const fs::path out = scratch(mode);
    EXPECT_EQ(run_cli(mode + " \"" + scenario_file(file) + "\" --out \"" + out.string() + "\""), 0) << mode;
  }
  EXPECT_EQ(run_cli("bound \"" + scenario_file("bound_well.json") + "\" --out \"" + scratch("well").string() + "\""),
            0);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ASSERT_EQ(run_cli("tunnel \"" + scenario_file("tunnel.json") + "\" --out \"" + a.string() + "\""), 0);
  ASSERT_EQ(run_cli("tunnel \"" + scenario_file("tunnel.json") + "\" --out \"" + b.string() + "\""), 0);
  const std::string ca = slurp(a / "tunnel.csv");
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, slurp(b / "tunnel.csv"));
  EXPECT_EQ(ca.find('\r'), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("codes");
  EXPECT_EQ(run_cli("verify \"" + scenario_file("malformed.json") + "\" --out \"" + out.string() + "\""), 1);
  EXPECT_EQ(run_cli("verify /nonexistent/scenario.json --out \"" + out.string() + "\""), 1);
  EXPECT_EQ(run_cli("tunnel \"" + scenario_file("tunnel.json") + "\" --out \"" + out.string() +
                    "\" --tolerance-scale 1e-40"),
            2);
  EXPECT_EQ(run_cli("tunnel \"" + scenario_file("tunnel.json") + "\" --tolerance-scale -1"), 1);
  EXPECT_EQ(run_cli("teleport x.json"), 1);
  const auto report = nlohmann::json::parse(slurp(out / "tunnel_report.json"));
  EXPECT_FALSE(report["passed"].get<bool>());
  EXPECT_FALSE(report["failed_checks"].empty());
}
