#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "keyboard/errors.hpp"
#include "keyboard/http_server.hpp"
#include "keyboard/keyboard.hpp"
#include "keyboard/scenario.hpp"
#include "keyboard/serialization.hpp"
#include "keyboard/simulation.hpp"
#include "keyboard/trial_service.hpp"

namespace kb = keyboard;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitExhausted = 3;

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct ScenarioArgs {
  int rows = 0, cols = 0, count = 1, mtds = 0, max_attempts = 100000;
  double phi = 0.3, eps1 = 0.05, eps2 = 0.05;
  std::uint64_t seed = 0;
  bool fix_p_max = false;
  std::string out, format;
};

int run_scenario(const ScenarioArgs& a) {
  kb::GeneratorConfig cfg;
  cfg.rows = a.rows;
  cfg.cols = a.cols;
  cfg.phi = a.phi;
  cfg.eps1 = a.eps1;
  cfg.eps2 = a.eps2;
  if (a.mtds > 0) cfg.target_mtd_count = a.mtds;
  cfg.max_attempts = a.max_attempts;
  cfg.seed = a.seed;
  cfg.fix_p_max = a.fix_p_max;
  cfg.validate();

  kb::Rng rng(a.seed);
  std::vector<kb::ToxScenario> scenarios;
  scenarios.reserve(static_cast<std::size_t>(a.count));
  for (int i = 0; i < a.count; ++i) scenarios.push_back(kb::generate_with_mtd_count(cfg, rng));

  std::string format = a.format;
  if (format.empty()) format = ends_with(a.out, ".csv") ? "csv" : "json";
  if (format == "csv") write_output(a.out, kb::scenarios_csv(scenarios));
  else write_output(a.out, kb::scenarios_to_json(scenarios, a.eps1, a.eps2).dump(2) + "\n");
  return 0;
}

struct SimulateArgs {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;
};

int run_simulate(const SimulateArgs& a) {
  std::ifstream in(a.spec);
  if (!in) throw std::runtime_error("cannot read " + a.spec);
  const kb::json doc = kb::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw kb::ValidationError(std::vector<kb::FieldError>{{"spec", "not valid JSON"}});
  kb::SimSpec spec = kb::sim_spec_from_json(doc);
  if (a.seed) spec.seed = *a.seed;
  if (a.threads) spec.threads = *a.threads;
  spec.validate();

  const auto progress = [&](int done, int total) {
    if (!a.quiet && (done == total || done % std::max(1, total / 20) == 0)) {
      std::cerr << "\r" << done << "/" << total << " scenarios" << std::flush;
      if (done == total) std::cerr << "\n";
    }
  };
  const kb::StudyResult result = kb::run_study(spec, progress);
  kb::export_results(a.out, spec, result);
  const auto& m = result.metrics;
  std::cout << "PCS " << m.pcs << "  PCA " << m.pca << "  overdose " << m.overdose_pct << "  underdose "
            << m.underdose_pct << "  incoherent " << m.incoherent_escalation_pct << "  safety stop "
            << m.safety_stop_pct << "\n";
  return 0;
}

struct TableArgs {
  double phi = 0.3, eps1 = 0.05, eps2 = 0.05;
  int nmax = 30;
  std::string format = "csv", out;
};

int run_table(const TableArgs& a) {
  const kb::DecisionTable t = kb::build_decision_table(a.phi, a.eps1, a.eps2, a.nmax);
  if (a.format == "csv") write_output(a.out, kb::decision_table_csv(t));
  else if (a.format == "md") write_output(a.out, kb::decision_table_markdown(t));
  else write_output(a.out, kb::json(t).dump(2) + "\n");
  return 0;
}

struct ServeArgs {
  std::string data, addr;
  int workers = 1;
};

int run_serve(const ServeArgs& a) {
  const auto colon = a.addr.rfind(':');
  if (colon == std::string::npos) throw kb::ValidationError(std::vector<kb::FieldError>{{"addr", "expected HOST:PORT"}});
  const std::string host = a.addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw kb::ValidationError(std::vector<kb::FieldError>{{"addr", "port is not a number"}});
  }

  // Handle SIGINT/SIGTERM on a dedicated thread instead of in a signal handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  kb::ServiceOptions opts;
  opts.simulation_workers = a.workers;
  kb::TrialService service(a.data, opts);
  kb::HttpServer server(service);
  const int bound = server.bind(host, port);
  std::cerr << "serving on " << host << ":" << bound << " (data in " << a.data << ")\n";

  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.run();
  pthread_kill(waiter.native_handle(), SIGTERM);
  return 0;
}

const char* env_or(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyboard dose-finding design for single-agent and drug-combination trials"};
  app.require_subcommand(1);

  ScenarioArgs sc;
  auto* scenario = app.add_subcommand("scenario", "Generate random monotone toxicity scenarios");
  scenario->add_option("--rows", sc.rows, "Levels of agent A")->required()->check(CLI::PositiveNumber);
  scenario->add_option("--cols", sc.cols, "Levels of agent B")->required()->check(CLI::PositiveNumber);
  scenario->add_option("--phi", sc.phi, "Target toxicity rate")->required();
  scenario->add_option("--eps1", sc.eps1, "Lower half-width of the target key")->capture_default_str();
  scenario->add_option("--eps2", sc.eps2, "Upper half-width of the target key")->capture_default_str();
  scenario->add_option("--mtds", sc.mtds, "Required number of doses in the target band");
  scenario->add_option("--count", sc.count, "Number of scenarios")->capture_default_str()->check(CLI::PositiveNumber);
  scenario->add_option("--seed", sc.seed, "RNG seed")->capture_default_str();
  scenario->add_option("--max-attempts", sc.max_attempts, "Rejection budget per scenario")->capture_default_str();
  scenario->add_flag("--fix-p-max", sc.fix_p_max, "Use the mean of the p_max law instead of drawing it");
  scenario->add_option("--out", sc.out, "Output file (.json or .csv); stdout when omitted");
  scenario->add_option("--format", sc.format, "json or csv (default from --out)")->check(CLI::IsMember({"json", "csv"}));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study from a spec file");
  simulate->add_option("--spec", sim.spec, "Simulation spec (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Override the spec seed");
  simulate->add_option("--threads", sim.threads, "Override the spec thread count")->check(CLI::PositiveNumber);
  simulate->add_flag("-q,--quiet", sim.quiet, "No progress output");

  TableArgs tab;
  auto* table = app.add_subcommand("table", "Print the escalation/de-escalation boundary table");
  table->add_option("--phi", tab.phi, "Target toxicity rate")->required();
  table->add_option("--eps1", tab.eps1)->capture_default_str();
  table->add_option("--eps2", tab.eps2)->capture_default_str();
  table->add_option("--nmax", tab.nmax, "Largest sample size")->capture_default_str()->check(CLI::PositiveNumber);
  table->add_option("--format", tab.format)->capture_default_str()->check(CLI::IsMember({"csv", "json", "md"}));
  table->add_option("--out", tab.out, "Output file; stdout when omitted");

  ServeArgs srv{env_or("KEYBOARD_DATA", "./keyboard-data"), env_or("KEYBOARD_ADDR", "127.0.0.1:8080")};
  auto* serve = app.add_subcommand("serve", "Run the trial-conduct HTTP service");
  serve->add_option("--data", srv.data, "Data directory (env KEYBOARD_DATA)")->capture_default_str();
  serve->add_option("--addr", srv.addr, "Bind address HOST:PORT (env KEYBOARD_ADDR)")->capture_default_str();
  serve->add_option("--sim-workers", srv.workers, "Concurrent simulation jobs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*scenario) return run_scenario(sc);
    if (*simulate) return run_simulate(sim);
    if (*table) return run_table(tab);
    if (*serve) return run_serve(srv);
  } catch (const kb::ValidationError& e) {
    std::cerr << "invalid input:\n";
    for (const auto& f : e.errors()) std::cerr << "  " << f.field << ": " << f.message << "\n";
    return kExitValidation;
  } catch (const kb::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const kb::ExhaustionError& e) {
    std::cerr << "generator exhausted: " << e.what() << "\n";
    return kExitExhausted;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
