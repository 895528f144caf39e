// sher: run trials, batches, statistics and the live bridge.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sher/bridge.hpp"
#include "sher/config.hpp"
#include "sher/errors.hpp"
#include "sher/protocol.hpp"
#include "sher/sim.hpp"
#include "sher/stats.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Raised for flag combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string mode = "adaptive-teleop";
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double duration = 40.0;
  double log_rate = 200.0;
  std::string exponent = "decaying";
  std::string config;
  std::string color_order;

  CLI::Option* mode_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* duration_opt = nullptr;
  CLI::Option* log_rate_opt = nullptr;
  CLI::Option* exponent_opt = nullptr;
  CLI::Option* order_opt = nullptr;
};

const CLI::Validator kModeValidator(
    [](std::string& s) -> std::string {
      try {
        s = std::string(sher::mode_name(sher::parse_mode(s)));
        return {};
      } catch (const sher::Error&) {
        return "unknown mode '" + s + "' (coop, adaptive-coop, teleop, adaptive-teleop)";
      }
    },
    "MODE");

void add_common(CLI::App* app, CommonFlags& f, bool with_mode) {
  if (with_mode) {
    f.mode_opt = app->add_option("--mode", f.mode, "Control mode: coop, adaptive-coop, teleop, adaptive-teleop")
                     ->check(kModeValidator)
                     ->capture_default_str();
  }
  f.seed_opt = app->add_option("--seed", f.seed, "Trial seed (first seed for batches)")
                   ->capture_default_str();
  f.dt_opt = app->add_option("--dt", f.dt, "Control period in seconds")
                 ->check(CLI::PositiveNumber)
                 ->capture_default_str();
  f.duration_opt = app->add_option("--duration", f.duration, "Maximum trial duration in seconds")
                       ->check(CLI::NonNegativeNumber)
                       ->capture_default_str();
  f.log_rate_opt = app->add_option("--log-rate", f.log_rate,
                                   "CSV rows per second; 1/dt logs every tick")
                       ->check(CLI::PositiveNumber)
                       ->capture_default_str();
  f.exponent_opt = app->add_option("--adaptive-exponent", f.exponent,
                                   "Desired-force trajectory exponent: decaying or printed")
                       ->check(CLI::IsMember({"decaying", "printed"}))
                       ->capture_default_str();
  f.order_opt = app->add_option("--color-order", f.color_order,
                                "Vessel color order such as RGBY (default: derived from the seed)");
  app->add_option("--config", f.config, "JSON configuration file (flags override it)")
      ->check(CLI::ExistingFile);
}

// Built-in defaults, then the config file, then explicitly given flags.
sher::SimConfig resolve_config(const CommonFlags& f) {
  sher::SimConfig cfg = f.config.empty() ? sher::default_config() : sher::load_config(f.config);
  if (f.mode_opt && f.mode_opt->count()) {
    cfg.trial.mode = sher::parse_mode(f.mode);
  }
  if (f.seed_opt->count()) {
    cfg.trial.seed = f.seed;
  }
  if (f.dt_opt->count()) {
    cfg.trial.dt = f.dt;
  }
  if (f.duration_opt->count()) {
    cfg.trial.max_duration = f.duration;
  }
  if (f.exponent_opt->count()) {
    cfg.adaptive.exponent = sher::parse_exponent(f.exponent);
  }
  if (f.order_opt->count()) {
    try {
      cfg.trial.color_order = sher::parse_color_order(f.color_order);
    } catch (const sher::ConfigError& e) {
      throw UsageError(std::string("--color-order: ") + e.what());
    }
  }
  if (f.log_rate_opt->count() || f.dt_opt->count()) {
    const double ticks = 1.0 / (f.log_rate * cfg.trial.dt);
    const long n = std::lround(ticks);
    if (n < 1 || std::abs(ticks - static_cast<double>(n)) > 1e-6 * ticks) {
      throw UsageError("--log-rate must divide the control rate 1/dt into a whole number of ticks");
    }
    cfg.trial.log_decimation = static_cast<int>(n);
  }
  cfg.validate();
  return cfg;
}

std::string summary_line(const sher::TrialRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s seed=%llu order=%s %s time=%.3f s mean_fs=%.2f mN max_fs=%.2f mN "
                "over_%g=%.2f%% handle_f=%.2f mN handle_t=%.2f mN*mm rows=%zu",
                std::string(sher::mode_name(r.mode)).c_str(),
                static_cast<unsigned long long>(r.seed), sher::order_string(r.order).c_str(),
                r.aborted ? "aborted" : (r.summary.completed ? "completed" : "incomplete"),
                r.summary.completed ? r.summary.completion_time
                                    : (r.rows.empty() ? 0.0 : r.rows.back().t),
                r.summary.mean_fs, r.summary.max_fs, 120.0, r.summary.pct_over_threshold,
                r.summary.mean_handle_force, r.summary.mean_handle_torque, r.summary.rows);
  std::string s = buf;
  if (r.aborted) {
    s += " diagnostic=\"" + r.diagnostic + "\"";
  }
  return s;
}

std::vector<sher::ControlMode> parse_modes(const std::string& text) {
  if (text == "all") {
    return {sher::ControlMode::Coop, sher::ControlMode::AdaptiveCoop, sher::ControlMode::Teleop,
            sher::ControlMode::AdaptiveTeleop};
  }
  std::vector<sher::ControlMode> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      out.push_back(sher::parse_mode(item));
    } catch (const sher::Error& e) {
      throw UsageError(std::string("--modes: ") + e.what());
    }
  }
  if (out.empty()) {
    throw UsageError("--modes: no modes given");
  }
  return out;
}

void print_tables(const std::vector<sher::ModeTrials>& groups, bool welch,
                  const std::string& json_path) {
  std::vector<sher::ModeSummary> summaries;
  for (const sher::ModeTrials& g : groups) {
    summaries.push_back(sher::summarize(g.mode, g.trials));
  }
  std::cout << "Per-mode summary: mean (std)\n" << sher::format_summary_table(summaries);

  std::vector<sher::Comparison> comparisons;
  const bool enough = std::all_of(groups.begin(), groups.end(),
                                  [](const sher::ModeTrials& g) { return g.trials.size() >= 2; });
  if (groups.size() < 2) {
    std::cout << "\nSignificance tests skipped: need at least two modes.\n";
  } else if (!enough) {
    std::cout << "\nSignificance tests skipped: every mode needs at least two trials.\n";
  } else {
    comparisons = sher::compare_modes(
        groups, welch ? sher::TTestVariant::Welch : sher::TTestVariant::Pooled);
    std::cout << "\nPairwise two-sample t-tests (" << (welch ? "Welch" : "pooled variance")
              << ", two-tailed, alpha 0.05)\n"
              << sher::format_comparison_table(comparisons);
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) {
      throw sher::Error("cannot write '" + json_path + "'");
    }
    out << sher::stats_json(summaries, comparisons) << '\n';
  }
}

int cmd_run(const CommonFlags& f, const std::string& out) {
  const sher::SimConfig cfg = resolve_config(f);
  const sher::TrialRecord rec = sher::run_trial(cfg);
  if (out.empty()) {
    sher::write_csv(std::cout, rec);
    std::cerr << summary_line(rec) << '\n';
  } else {
    sher::write_csv_file(out, rec);
    std::cout << summary_line(rec) << '\n';
  }
  return rec.aborted ? kExitRuntime : kExitOk;
}

int cmd_batch(const CommonFlags& f, int trials, const std::string& modes_text,
              const std::string& out, int jobs, bool welch, const std::string& json_path) {
  const std::vector<sher::ControlMode> modes = parse_modes(modes_text);
  const sher::SimConfig base = resolve_config(f);
  std::optional<fs::path> out_dir;
  if (!out.empty()) {
    fs::create_directories(out);
    out_dir = out;
  }
  std::vector<sher::ModeTrials> groups;
  std::vector<std::string> errors;
  for (sher::ControlMode m : modes) {
    sher::SimConfig cfg = base;
    cfg.trial.mode = m;
    const auto t0 = std::chrono::steady_clock::now();
    sher::BatchResult batch = sher::run_batch(cfg, trials, out_dir, jobs);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << mode_name(m) << ": " << trials << " trials in " << secs << " s\n";
    sher::ModeTrials g;
    g.mode = m;
    for (const sher::TrialRecord& r : batch.records) {
      g.trials.push_back(r.summary);
    }
    groups.push_back(std::move(g));
    errors.insert(errors.end(), batch.errors.begin(), batch.errors.end());
  }
  std::cout << '\n';
  print_tables(groups, welch, json_path);
  for (const std::string& e : errors) {
    std::cerr << "error: " << e << '\n';
  }
  return errors.empty() ? kExitOk : kExitRuntime;
}

int cmd_stats(const std::vector<std::string>& files, bool welch, const std::string& json_path) {
  std::map<sher::ControlMode, sher::ModeTrials> groups;
  for (const std::string& file : files) {
    const sher::ParsedCsv parsed = sher::read_csv_file(file);
    sher::SimConfig cfg = sher::default_config();
    if (!parsed.config_json.empty()) {
      sher::apply_config_json(cfg, parsed.config_json);
    }
    sher::ModeTrials& g = groups[cfg.trial.mode];
    g.mode = cfg.trial.mode;
    g.trials.push_back(sher::summarize_rows(parsed.rows, cfg.adaptive.T_s));
  }
  std::vector<sher::ModeTrials> ordered;
  for (auto& [mode, g] : groups) {
    ordered.push_back(std::move(g));
  }
  print_tables(ordered, welch, json_path);
  return kExitOk;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

int cmd_serve(const CommonFlags& f, const std::string& host, int port, const std::string& out,
              const std::string& command_log, const std::string& replay, bool no_realtime,
              double snapshot_hz) {
  const sher::SimConfig cfg = resolve_config(f);
  sher::BridgeOptions opts;
  opts.host = host;
  opts.port = static_cast<std::uint16_t>(port);
  opts.snapshot_hz = snapshot_hz;
  opts.realtime = !no_realtime;
  if (!out.empty()) {
    fs::create_directories(out);
    opts.out_dir = fs::path(out);
  }
  if (!command_log.empty()) {
    opts.command_log = fs::path(command_log);
  }
  if (!replay.empty()) {
    std::ifstream in(replay);
    if (!in) {
      throw sher::Error("cannot open '" + replay + "'");
    }
    opts.replay = sher::read_command_log(in);
  }
  sher::BridgeServer server(cfg, opts);
  server.start();
  std::cout << "listening on " << host << ':' << server.port() << " (protocol "
            << sher::kProtocolVersion << ")" << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (server.running() && !g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  server.request_stop();
  server.wait();
  const sher::BridgeStats st = server.stats();
  std::cout << "stopped after " << st.ticks << " ticks, " << st.commands << " commands, "
            << st.trial_files.size() << " trial file(s); max loop jitter "
            << st.max_jitter * 1e3 << " ms" << std::endl;
  for (const fs::path& p : st.trial_files) {
    std::cout << "  " << p.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for cooperative, teleoperated and adaptive sclera-force control of a "
               "5-DOF eye surgery robot"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  CommonFlags run_f, batch_f, serve_f;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run one scripted trial and write its CSV");
  add_common(run, run_f, true);
  run->add_option("--out", run_out, "CSV path (default: CSV on stdout, summary on stderr)");

  int trials = 25;
  int jobs = 1;
  std::string modes = "all";
  std::string batch_out;
  std::string batch_json;
  bool batch_welch = false;
  auto* batch = app.add_subcommand("batch", "Run paired-seed batches per mode with statistics");
  add_common(batch, batch_f, false);
  batch->add_option("--trials", trials, "Trials per mode")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  batch->add_option("--modes", modes, "Comma-separated modes or 'all'")->capture_default_str();
  batch->add_option("--out", batch_out, "Directory for per-trial CSVs");
  batch->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  batch->add_flag("--welch", batch_welch, "Use Welch's unequal-variance t-test");
  batch->add_option("--json", batch_json, "Also write the tables as JSON to this path");

  std::vector<std::string> files;
  bool stats_welch = false;
  std::string stats_json_path;
  auto* stats = app.add_subcommand("stats", "Summarize trial CSVs per mode with t-tests");
  stats->add_option("files", files, "Trial CSV files")->check(CLI::ExistingFile);
  stats->add_flag("--welch", stats_welch, "Use Welch's unequal-variance t-test");
  stats->add_option("--json", stats_json_path, "Also write the tables as JSON to this path");

  std::string host = "127.0.0.1";
  int port = 7878;
  std::string serve_out;
  std::string command_log;
  std::string replay;
  bool no_realtime = false;
  double snapshot_hz = 60.0;
  auto* serve = app.add_subcommand("serve", "Start the live teleoperation bridge");
  add_common(serve, serve_f, true);
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "TCP port (0 picks a free one)")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  serve->add_option("--out", serve_out, "Directory for live trial CSVs");
  serve->add_option("--command-log", command_log, "Write applied commands (JSONL) here on exit");
  serve->add_option("--replay", replay, "Drive the session from a recorded command log")
      ->check(CLI::ExistingFile);
  serve->add_flag("--no-realtime", no_realtime, "Run as fast as possible (replay)");
  serve->add_option("--snapshot-hz", snapshot_hz, "Snapshot publish rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      return cmd_run(run_f, run_out);
    }
    if (*batch) {
      return cmd_batch(batch_f, trials, modes, batch_out, jobs, batch_welch, batch_json);
    }
    if (*stats) {
      if (files.empty()) {
        std::cerr << "stats: no CSV files given\n" << stats->help();
        return kExitUsage;
      }
      return cmd_stats(files, stats_welch, stats_json_path);
    }
    if (*serve) {
      return cmd_serve(serve_f, host, port, serve_out, command_log, replay, no_realtime,
                       snapshot_hz);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sher::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
