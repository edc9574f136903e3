#pragma once

#include <optional>
#include <string>
#include <vector>

#include "teleop/engine.hpp"

namespace teleop::harness {

struct BinStats {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct PhaseStats {
  std::string name;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t count = 0;
  double mean_error = 0.0;
  double max_error = 0.0;
  double rms_error = 0.0;
  double mean_error_xy = 0.0;
  double max_error_xy = 0.0;
  double peak_force = 0.0;
};

struct MetricsReport {
  std::size_t rows = 0;
  double duration = 0.0;
  double mean_error = 0.0;
  double max_error = 0.0;
  double rms_error = 0.0;
  double mean_error_xy = 0.0;
  double max_error_xy = 0.0;
  // Only bins that received samples; empty bins are absent.
  std::vector<BinStats> bins;
  double peak_acceleration = 0.0;
  double peak_force = 0.0;
  bool ruptured = false;
  double rupture_time = -1.0;
  std::vector<PhaseStats> phases;
};

std::vector<double> default_bin_edges();

// Pure function of the trace. Rows are binned by the mean applied L1 over the
// axes; the last bin is closed on the right.
MetricsReport compute_metrics(const ScenarioTrace& trace,
                              const std::vector<double>& bin_edges = default_bin_edges());

// Mean error over rows whose mean applied L1 exceeds `threshold`, or nullopt
// if there are none.
std::optional<double> mean_error_above(const ScenarioTrace& trace, double threshold);

// Stats over rows with t in [t_begin, t_end).
PhaseStats phase_stats(const ScenarioTrace& trace, const Phase& phase);

double error_xy(const TraceRow& r);

std::string metrics_to_json(const MetricsReport& report);

}  // namespace teleop::harness
