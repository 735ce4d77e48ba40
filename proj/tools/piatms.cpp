// Command-line front end: run the aggregation pipeline over a scenario,
// take the greedy fast path, or explain a unit from a saved report.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "piatms/fusion/doctrine.hpp"
#include "piatms/fusion/pipeline.hpp"
#include "piatms/fusion/report.hpp"
#include "piatms/fusion/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;

struct Config {
  std::string scenario_path;
  std::string doctrine_path;
  std::string report_path;
  std::string explain_id;
  int k = 3;
  int m = 3;
  std::string format = "text";
  bool trace = false;
};

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

void print_trace(const piatms::fusion::RunResult& result, std::ostream& os) {
  for (const auto& phase : result.phases)
    os << "# phase from=" << piatms::fusion::to_string(phase.from)
       << " wms=" << phase.working_memories << " complete=" << phase.complete_hypotheses
       << " incomplete=" << phase.incomplete_hypotheses << " nogoods=" << phase.nogoods
       << " combos=" << phase.combinations << " greedy_iters=" << phase.greedy_iterations
       << " greedy_inspections=" << phase.greedy_nogood_inspections
       << " inspection_budget=" << phase.greedy_inspection_budget << "\n";
}

int run_command(const Config& cfg, bool greedy) {
  using namespace piatms::fusion;
  Scenario scenario;
  Doctrine doctrine;
  try {
    auto sin = open_or_fail(cfg.scenario_path);
    scenario = parse_scenario(sin, cfg.scenario_path);
    auto din = open_or_fail(cfg.doctrine_path);
    doctrine = parse_doctrine(din, cfg.doctrine_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  PipelineOptions options;
  options.k = greedy ? 1 : cfg.k;
  options.m = greedy ? 1 : cfg.m;
  options.greedy = greedy;
  RunResult result;
  try {
    result = run_pipeline(scenario, doctrine, options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  if (cfg.trace) print_trace(result, std::cout);
  Report report = make_report(result);
  if (cfg.format == "structured")
    print_report(report, std::cout);
  else
    render_text(report, std::cout);
  return kExitOk;
}

int explain_command(const Config& cfg) {
  using namespace piatms::fusion;
  Report report;
  try {
    auto rin = open_or_fail(cfg.report_path);
    report = parse_report(rin, cfg.report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  if (!explain_unit(report, cfg.explain_id, std::cout)) {
    std::cerr << "error: no unit '" << cfg.explain_id << "' in " << cfg.report_path << "\n";
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"possibilistic multi-hypothesis data fusion"};
  app.require_subcommand(1);

  Config cfg;
  auto add_run_flags = [&](CLI::App* cmd, bool with_k) {
    cmd->add_option("--scenario", cfg.scenario_path, "scenario file")->required();
    cmd->add_option("--doctrine", cfg.doctrine_path, "doctrine file")->required();
    if (with_k) {
      cmd->add_option("--k", cfg.k, "combinations kept per phase")->check(CLI::PositiveNumber);
      cmd->add_option("--m", cfg.m, "final solutions reported")->check(CLI::PositiveNumber);
    }
    cmd->add_option("--format", cfg.format, "text|structured")
        ->check(CLI::IsMember({"text", "structured"}));
    cmd->add_flag("--trace", cfg.trace, "print per-phase statistics");
  };

  CLI::App* run = app.add_subcommand("run", "full k-best pipeline");
  add_run_flags(run, true);
  CLI::App* best = app.add_subcommand("best", "single best solution via the greedy path");
  add_run_flags(best, false);
  CLI::App* explain = app.add_subcommand("explain", "explain a unit from a structured report");
  explain->add_option("--report", cfg.report_path, "structured report file")->required();
  explain->add_option("--explain-id", cfg.explain_id, "unit id to explain")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (run->parsed()) return run_command(cfg, false);
  if (best->parsed()) return run_command(cfg, true);
  return explain_command(cfg);
}
