// teleop: command-line front end for the simulation engine.
//
//   teleop run --scenario fig2 --controller iac --out trace.csv
//   teleop metrics trace.csv --bins 0,500,1000,1500
//   teleop serve --scenario balloon --port 8765
//   teleop plot trace.csv --out plots/
//   teleop sweep --scenario free_tracking --seeds 20

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "teleop/batch.hpp"
#include "teleop/config_io.hpp"
#include "teleop/metrics.hpp"
#include "teleop/session.hpp"
#include "teleop/trace.hpp"
#include "teleop/udp_channel.hpp"

namespace fs = std::filesystem;
using namespace teleop;
using namespace teleop::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

// Options shared by the commands that build a scenario.
struct ScenarioOptions {
  std::string scenario;
  std::string controller;
  std::string config_path;
  std::string estimator;
  std::optional<double> delay_ms;
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scenario", scenario, "fig2 | free_tracking | balloon | bilateral_polish | custom");
    cmd->add_option("--controller", controller, "tic | iac | high-gain");
    cmd->add_option("--config", config_path, "JSON config file; flags override its values");
    cmd->add_option("--estimator", estimator, "direct | observer");
    cmd->add_option("--delay-ms", delay_ms, "one-way delay in milliseconds");
    cmd->add_option("--dt", dt, "tick length in seconds");
    cmd->add_option("--duration", duration, "run length in seconds");
    cmd->add_option("--seed", seed, "operator path seed");
  }

  // Preset, then config file, then flags.
  ScenarioConfig build() const {
    std::optional<ScenarioId> id;
    std::optional<ControllerKind> ctrl;
    if (!scenario.empty()) id = parse_scenario(scenario);
    if (!controller.empty()) ctrl = parse_controller(controller);
    ScenarioConfig cfg = config_path.empty()
                             ? make_scenario(id.value_or(ScenarioId::Fig2),
                                             ctrl.value_or(ControllerKind::IAC))
                             : load_config(config_path, id, ctrl);
    if (!estimator.empty()) cfg.estimator = parse_estimator(estimator);
    if (delay_ms) cfg.delta = *delay_ms / 1000.0;
    if (dt) cfg.dt = *dt;
    if (duration) cfg.duration = *duration;
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

std::string format_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> parse_edges(const std::string& text) {
  std::vector<double> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      edges.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--bins: '" + item + "' is not a number");
    }
  }
  if (edges.size() < 2) throw ConfigError("--bins needs at least two edges");
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ConfigError("--bins edges must be strictly increasing");
  }
  return edges;
}

// --- run --------------------------------------------------------------------

int cmd_run(const ScenarioOptions& opts, const std::string& out, const std::string& transport,
            const std::string& metrics_out) {
  const ScenarioConfig cfg = opts.build();
  std::unique_ptr<LeaderChannel> channel;
  if (transport == "udp") {
    channel = std::make_unique<net::UdpLoopbackChannel>();
  } else if (transport != "inproc") {
    throw ConfigError("--transport must be inproc or udp");
  }
  const auto t0 = std::chrono::steady_clock::now();
  Engine engine(cfg, std::move(channel));
  const ScenarioTrace trace = engine.run();
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!out.empty()) export_trace(trace, out);
  const MetricsReport report = compute_metrics(trace);
  if (!metrics_out.empty()) {
    std::ofstream f(metrics_out);
    if (!f) throw Error("cannot write " + metrics_out);
    f << metrics_to_json(report) << '\n';
  }
  std::printf("%s/%s: %zu rows, mean error %.6g m, max %.6g m, peak force %.4g N%s, %.2f s\n",
              to_string(cfg.id), to_string(cfg.controller), report.rows, report.mean_error,
              report.max_error, report.peak_force, report.ruptured ? " (ruptured)" : "", wall);
  std::printf("trace hash %s\n", format_hash(trace_hash(trace)).c_str());
  return kExitOk;
}

// --- metrics ----------------------------------------------------------------

int cmd_metrics(const std::string& path, const std::string& bins) {
  const ScenarioTrace trace = read_trace(path);
  if (trace.rows.empty()) throw ConfigError(path + ": trace has no rows");
  const MetricsReport report =
      bins.empty() ? compute_metrics(trace) : compute_metrics(trace, parse_edges(bins));
  std::cout << metrics_to_json(report) << '\n';
  return kExitOk;
}

// --- serve ------------------------------------------------------------------

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const ScenarioOptions& opts, int port, long every) {
  if (port < 0 || port > 65535) throw ConfigError("--port must be within [0, 65535]");
  if (every < 1) throw ConfigError("--every must be >= 1");
  ScenarioConfig cfg = opts.build();
  net::SessionServer server(std::move(cfg), static_cast<std::uint16_t>(port), every);
  const std::uint16_t bound = server.start();
  std::printf("serving ws://127.0.0.1:%u (Ctrl-C to stop)\n", static_cast<unsigned>(bound));
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  return kExitOk;
}

// --- plot -------------------------------------------------------------------

// One SVG per quantity, axes drawn as separate lines. Long traces are thinned
// to a fixed number of points.
void write_svg(const fs::path& path, const std::string& title, const std::vector<double>& t,
               const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  constexpr double W = 800, H = 300, L = 60, R = 20, T = 30, B = 40;
  constexpr std::size_t kMaxPoints = 2000;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [name, ys] : series) {
    for (double y : ys) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double t0 = t.front(), t1 = t.back() > t0 ? t.back() : t0 + 1.0;
  const auto px = [&](double v) { return L + (v - t0) / (t1 - t0) * (W - L - R); };
  const auto py = [&](double v) { return H - B - (v - lo) / (hi - lo) * (H - T - B); };
  const std::size_t stride = std::max<std::size_t>(1, t.size() / kMaxPoints);
  static const char* kColours[] = {"#d62728", "#2ca02c", "#1f77b4"};

  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
    << "<rect width='100%' height='100%' fill='white'/>\n"
    << "<text x='" << L << "' y='20' font-family='sans-serif' font-size='14'>" << title
    << "</text>\n"
    << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R << "' y2='" << H - B
    << "' stroke='black'/>\n"
    << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='" << H - B
    << "' stroke='black'/>\n";
  f << "<text x='5' y='" << T + 4 << "' font-size='10'>" << hi << "</text>\n"
    << "<text x='5' y='" << H - B << "' font-size='10'>" << lo << "</text>\n"
    << "<text x='" << L << "' y='" << H - 10 << "' font-size='10'>" << t0 << " s</text>\n"
    << "<text x='" << W - R - 40 << "' y='" << H - 10 << "' font-size='10'>" << t1
    << " s</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& [name, ys] = series[s];
    const char* colour = kColours[s % 3];
    f << "<polyline fill='none' stroke-width='1' stroke='" << colour << "' points='";
    for (std::size_t i = 0; i < ys.size(); i += stride) f << px(t[i]) << ',' << py(ys[i]) << ' ';
    f << px(t.back()) << ',' << py(ys.back()) << "'/>\n";
    f << "<text x='" << W - R - 60 << "' y='" << T + 14 * static_cast<double>(s) << "' fill='"
      << colour << "' font-size='11'>" << name << "</text>\n";
  }
  f << "</svg>\n";
}

int cmd_plot(const std::string& path, const std::string& out_dir) {
  const ScenarioTrace trace = read_trace(path);
  if (trace.rows.empty()) throw ConfigError(path + ": trace has no rows");
  fs::create_directories(out_dir);
  std::vector<double> t;
  for (const auto& r : trace.rows) t.push_back(r.t);

  using Getter = Vec3 TraceRow::*;
  const std::vector<std::pair<std::string, Getter>> groups = {
      {"x_l", &TraceRow::x_l}, {"xdot_l", &TraceRow::xdot_l}, {"x", &TraceRow::x},
      {"tau", &TraceRow::tau}, {"L1", &TraceRow::L1},         {"L2", &TraceRow::L2},
      {"u_l", &TraceRow::u_l}, {"u", &TraceRow::u},           {"F_env", &TraceRow::F_env}};
  for (const auto& [name, member] : groups) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (std::size_t a = 0; a < kAxes; ++a) {
      std::vector<double> ys;
      for (const auto& r : trace.rows) ys.push_back((r.*member)[static_cast<int>(a)]);
      series.emplace_back(name + "_" + kAxisNames[a], std::move(ys));
    }
    write_svg(fs::path(out_dir) / (name + ".svg"), name, t, series);
  }
  std::vector<double> err;
  for (const auto& r : trace.rows) err.push_back(r.error);
  write_svg(fs::path(out_dir) / "error.svg", "error (m)", t, {{"error", err}});
  std::printf("wrote %zu plots to %s\n", groups.size() + 1, out_dir.c_str());
  return kExitOk;
}

// --- sweep ------------------------------------------------------------------

int cmd_sweep(const ScenarioOptions& opts, std::uint64_t first, std::size_t count, int threads,
              bool serial) {
  if (count == 0) throw ConfigError("--seeds must be positive");
  const ScenarioConfig base = opts.build();
  const auto configs = seed_sweep(base, first, count);
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = serial ? run_batch_serial(configs) : run_batch_parallel(configs, threads);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  int status = kExitOk;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    nlohmann::ordered_json j;
    j["seed"] = configs[i].seed;
    if (!r.error.empty()) {
      j["error"] = r.error;
      status = kExitDivergence;
    } else {
      j["hash"] = format_hash(r.trace_hash);
      j["mean_error"] = r.metrics.mean_error;
      j["max_error"] = r.metrics.max_error;
      j["peak_force"] = r.metrics.peak_force;
    }
    std::cout << j.dump() << '\n';
  }
  std::fprintf(stderr, "%zu runs in %.2f s\n", results.size(), wall);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teleoperation simulation engine"};
  app.require_subcommand(1);

  ScenarioOptions run_opts;
  std::string run_out, run_transport = "inproc", run_metrics;
  auto* run = app.add_subcommand("run", "run a scenario and export its trace");
  run_opts.add_to(run);
  run->add_option("--out", run_out, "trace CSV path");
  run->add_option("--transport", run_transport, "inproc | udp");
  run->add_option("--metrics", run_metrics, "also write the metrics JSON here");

  std::string metrics_path, metrics_bins;
  auto* metrics = app.add_subcommand("metrics", "summarise a trace CSV");
  metrics->add_option("trace", metrics_path, "trace CSV")->required();
  metrics->add_option("--bins", metrics_bins, "comma-separated stiffness bin edges (N/m)");

  ScenarioOptions serve_opts;
  int serve_port = 8765;
  long serve_every = 16;
  auto* serve = app.add_subcommand("serve", "interactive websocket session");
  serve_opts.add_to(serve);
  serve->add_option("--port", serve_port, "TCP port on 127.0.0.1 (0 picks one)");
  serve->add_option("--every", serve_every, "ticks between snapshots");

  std::string plot_path, plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "static SVG line charts of a trace");
  plot->add_option("trace", plot_path, "trace CSV")->required();
  plot->add_option("--out", plot_out, "output directory");

  ScenarioOptions sweep_opts;
  std::uint64_t sweep_first = 1;
  std::size_t sweep_count = 8;
  int sweep_threads = 0;
  bool sweep_serial = false;
  auto* sweep = app.add_subcommand("sweep", "run a scenario over consecutive seeds");
  sweep_opts.add_to(sweep);
  sweep->add_option("--first-seed", sweep_first, "first seed");
  sweep->add_option("--seeds", sweep_count, "number of seeds");
  sweep->add_option("--threads", sweep_threads, "OpenMP threads (0: runtime default)");
  sweep->add_flag("--serial", sweep_serial, "use the serial reference runner");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts, run_out, run_transport, run_metrics);
    if (*metrics) return cmd_metrics(metrics_path, metrics_bins);
    if (*serve) return cmd_serve(serve_opts, serve_port, serve_every);
    if (*plot) return cmd_plot(plot_path, plot_out);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_first, sweep_count, sweep_threads, sweep_serial);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
