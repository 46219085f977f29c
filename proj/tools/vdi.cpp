// Command-line harness: run, replay, sweep, serve, list-scenarios, dump-scenario.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vdi/run_log.hpp"
#include "vdi/scenario_io.hpp"
#include "vdi/serve.hpp"
#include "vdi/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitViolation = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tick;
  std::optional<double> duration;
  std::vector<std::string> settings;  // path=value
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--tick", o.tick, "Control tick [s]");
  cmd->add_option("--duration", o.duration, "Run duration [s]");
  cmd->add_option("--set", o.settings, "Override a field, e.g. --set optimizer.d=0.25")->allow_extra_args(false);
}

vdi::Scenario load(const std::string& source, const Overrides& o) {
  vdi::Scenario s = vdi::load_scenario(source);
  for (const std::string& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw vdi::ScenarioError("--set", 0, 0, kv, "expected path=value");
    s = vdi::with_setting(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) s.seed = *o.seed;
  if (o.tick) s.tick = *o.tick;
  if (o.duration) s.duration = *o.duration;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw vdi::ScenarioError(source, 0, 0, "", e.what());
  }
  return s;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_brief(const vdi::MetricsSummary& m) {
  std::cout << m.scenario << " seed=" << m.seed << " ticks=" << m.ticks << " uptime=" << m.tracking_uptime
            << " violations=" << m.constraint_violations << " beeps=" << m.beep_count
            << " completed=" << (m.completed ? "yes" : "no") << "\n";
}

int cmd_run(const std::string& source, const Overrides& o, std::string out_path) {
  const vdi::Scenario s = load(source, o);
  if (out_path.empty()) out_path = s.name + ".jsonl";
  std::ofstream log(out_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + out_path);
  const vdi::RunOutcome r = vdi::run_to_log(s, log);
  log.close();
  const std::string summary_path = vdi::summary_path_for(out_path);
  write_file(summary_path, vdi::dump_summary(r.summary));
  print_brief(r.summary);
  std::cout << "log: " << out_path << "\nsummary: " << summary_path << "\n";
  if (r.violated) {
    std::cerr << "invariant violation at tick " << *r.summary.first_violation_tick << "\n";
    return kExitViolation;
  }
  return kExitOk;
}

int cmd_replay(const std::string& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) {
    std::cerr << log_path << ": cannot open\n";
    return kExitInvalid;
  }
  vdi::MetricsSummary m;
  try {
    m = vdi::replay_log(in);
  } catch (const vdi::ReplayError& e) {
    std::cerr << log_path << ": " << e.what() << "\n";
    return kExitInvalid;
  }
  const std::string text = vdi::dump_summary(m);
  const std::string summary_path = vdi::summary_path_for(log_path);
  print_brief(m);
  if (std::filesystem::exists(summary_path)) {
    if (read_file(summary_path) != text) {
      std::cerr << summary_path << ": replayed summary differs from the recorded one\n";
      return kExitViolation;
    }
    std::cout << "summary matches " << summary_path << "\n";
  } else {
    write_file(summary_path, text);
    std::cout << "summary written to " << summary_path << "\n";
  }
  return m.status == "ok" ? kExitOk : kExitViolation;
}

int cmd_sweep(const std::string& source, const Overrides& o, const std::map<std::string, std::string>& axes,
              const std::string& out_path, bool serial) {
  const vdi::Scenario s = load(source, o);
  vdi::WeightGrid grid;
  std::map<std::string, std::vector<double>*> slots{
      {"w1", &grid.w1}, {"w2", &grid.w2}, {"w3", &grid.w3}, {"w4", &grid.w4}, {"d", &grid.d}};
  for (const auto& [name, text] : axes) {
    if (text.empty()) continue;
    try {
      *slots.at(name) = vdi::parse_axis(text);
    } catch (const std::invalid_argument& e) {
      throw vdi::ScenarioError("--" + name, 0, 0, "", e.what());
    }
  }
  const auto points = grid.expand(s.optimizer);
  const auto summaries = serial ? vdi::sweep_serial(s, points) : vdi::sweep(s, points);
  const std::string table = vdi::sweep_table(points, summaries);
  if (out_path.empty()) {
    std::cout << table;
  } else {
    write_file(out_path, table);
    std::cout << points.size() << " grid points written to " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_serve(const std::string& source, const Overrides& o, unsigned short port, double frame_rate) {
  const vdi::Scenario s = load(source, o);
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // worker threads inherit the mask

  vdi::serve::ServerOptions opts;
  opts.port = port;
  opts.frame_rate = frame_rate;
  vdi::serve::Server server(s, opts);
  const unsigned short bound = server.start();
  std::cout << "serving " << s.name << " on ws://0.0.0.0:" << bound << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viewpoint-tracking demonstration stack: simulation harness"};
  app.require_subcommand(1);

  Overrides ov;
  std::string source, out_path, log_path;

  auto* run = app.add_subcommand("run", "Run a scenario headless and write a JSONL log and summary");
  run->add_option("scenario", source, "Scenario file or built-in name")->required();
  run->add_option("--out", out_path, "Log path (default <name>.jsonl)");
  add_overrides(run, ov);

  auto* replay = app.add_subcommand("replay", "Recompute the summary from a log");
  replay->add_option("log", log_path, "JSONL log")->required();

  std::map<std::string, std::string> axes{{"w1", ""}, {"w2", ""}, {"w3", ""}, {"w4", ""}, {"d", ""}};
  bool serial = false;
  auto* sweep = app.add_subcommand("sweep", "Run a grid over objective weights and viewing distance");
  sweep->add_option("scenario", source, "Scenario file or built-in name")->required();
  for (auto& [name, text] : axes) sweep->add_option("--" + name, text, "Comma-separated values for " + name);
  sweep->add_option("--out", out_path, "CSV path (default stdout)");
  sweep->add_flag("--serial", serial, "Use the single-threaded reference");
  add_overrides(sweep, ov);

  unsigned short port = 8765;
  double frame_rate = 30.0;
  auto* serve = app.add_subcommand("serve", "Serve an interactive session over a websocket");
  serve->add_option("scenario", source, "Scenario file or built-in name")->required();
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--frame-rate", frame_rate, "Maximum state frames per second")->check(CLI::Range(1.0, 30.0));
  add_overrides(serve, ov);

  auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios");

  std::string dump_name;
  auto* dump = app.add_subcommand("dump-scenario", "Print a scenario as YAML");
  dump->add_option("scenario", dump_name, "Scenario file or built-in name")->required();
  dump->add_option("--out", out_path, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(source, ov, out_path);
    if (*replay) return cmd_replay(log_path);
    if (*sweep) return cmd_sweep(source, ov, axes, out_path, serial);
    if (*serve) return cmd_serve(source, ov, port, frame_rate);
    if (*list) {
      for (const auto& s : vdi::builtin_scenarios()) std::cout << s.name << "  " << s.description << "\n";
      return kExitOk;
    }
    if (*dump) {
      const std::string text = vdi::dump_scenario(vdi::load_scenario(dump_name));
      if (out_path.empty()) {
        std::cout << text;
      } else {
        write_file(out_path, text);
      }
      return kExitOk;
    }
  } catch (const vdi::ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
