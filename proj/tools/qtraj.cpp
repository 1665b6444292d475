// qtraj <mode> <scenario.json> [--out DIR] [--tolerance-scale F]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qtraj/scenario.hpp"

namespace {

int run(const std::string& mode, const std::string& path, const std::string& out, double scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "qtraj: cannot read scenario file " << path << "\n";
    return 1;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const qtraj::Scenario s = qtraj::parse_scenario(buf.str(), mode);
    const int code = qtraj::run_scenario(s, out, scale);
    if (code == 2) std::cerr << "qtraj: verification exceeded tolerance; see " << out << "/" << s.output << "_report.json\n";
    return code;
  } catch (const qtraj::NumericalError& e) {
    std::cerr << "qtraj: numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const qtraj::Error& e) {
    std::cerr << "qtraj: invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "qtraj: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum trajectories from the stationary Hamilton-Jacobi equation"};
  app.require_subcommand(1);
  std::string path;
  std::string out = "out";
  double scale = 1.0;
  for (const auto& mode : qtraj::scenario_modes()) {
    auto* sub = app.add_subcommand(mode, "run a " + mode + " scenario");
    sub->add_option("scenario", path, "scenario JSON file")->required();
    sub->add_option("--out", out, "output directory (default ./out)");
    sub->add_option("--tolerance-scale", scale, "multiplier applied to every verification tolerance")
        ->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return run(app.get_subcommands().front()->get_name(), path, out, scale);
}
