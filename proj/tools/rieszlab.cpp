// Command-line experiment runner.
//
//   rieszlab gen <builtin> [key=value ...] --out DIR
//   rieszlab run --config FILE --out DIR [--seed N] [--threads K]
//   rieszlab report FILE
//
// Exit status: 0 success, 1 input error, 2 invariant violation.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>

#include "rieszlab/experiment.hpp"
#include "rieszlab/grid.hpp"

namespace ex = rieszlab::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Riesz capacity and area formula laboratory"};
  app.set_version_flag("--version", std::string(ex::kToolName) + " " + ex::kToolVersion);
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 1;

  auto* gen = app.add_subcommand("gen", "write a builtin field to the shared file format");
  std::string builtin;
  std::vector<std::string> assignments;
  gen->add_option("name", builtin, "builtin name")->required();
  gen->add_option("params", assignments, "key=value parameters");
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--config", config_path, "JSON object of parameters");

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "seed for sampling choices");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "pretty-print a report file");
  std::string report_path;
  report->add_option("file", report_path, "report.jsonl")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      std::map<std::string, std::string> params;
      if (!config_path.empty()) {
        const auto j = ex::json::parse(std::ifstream(config_path));
        for (const auto& [k, v] : j.items()) params[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
      for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw rieszlab::InputError("expected key=value, got '" + a + "'");
        params[a.substr(0, eq)] = a.substr(eq + 1);
      }
      for (const auto& p : ex::generate(builtin, params, out_dir)) std::cout << p.string() << "\n";
      return 0;
    }
    if (*run) {
      const auto config = ex::load_config(config_path);
      ex::RunContext ctx{std::filesystem::path(config_path).parent_path(), out_dir, seed, threads};
      const auto result = ex::run(config, ctx);
      ex::write_report(result, out_dir);
      std::cout << ex::format_report(std::filesystem::path(out_dir) / "report.jsonl");
      if (!result.violations.empty()) {
        for (const auto& v : result.violations) std::cerr << "invariant violated: " << v << "\n";
        return 2;
      }
      return 0;
    }
    if (*report) {
      std::cout << ex::format_report(report_path);
      return 0;
    }
  } catch (const rieszlab::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const rieszlab::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ex::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
