#include "teleop/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace teleop::harness {

std::vector<double> default_bin_edges() {
  return {0.0, 200.0, 400.0, 600.0, 800.0, 1000.0, 1200.0, 1400.0};
}

double error_xy(const TraceRow& r) {
  const Vec3 d = r.x - r.x_l;
  return std::hypot(d[0], d[1]);
}

PhaseStats phase_stats(const ScenarioTrace& trace, const Phase& phase) {
  PhaseStats s;
  s.name = phase.name;
  s.t_begin = phase.t_begin;
  s.t_end = phase.t_end;
  double sum = 0.0, sq = 0.0, sum_xy = 0.0;
  for (const TraceRow& r : trace.rows) {
    if (r.t < phase.t_begin || r.t >= phase.t_end) continue;
    ++s.count;
    sum += r.error;
    sq += r.error * r.error;
    s.max_error = std::max(s.max_error, r.error);
    const double exy = error_xy(r);
    sum_xy += exy;
    s.max_error_xy = std::max(s.max_error_xy, exy);
    s.peak_force = std::max(s.peak_force, r.F_env.norm());
  }
  if (s.count > 0) {
    const auto n = static_cast<double>(s.count);
    s.mean_error = sum / n;
    s.rms_error = std::sqrt(sq / n);
    s.mean_error_xy = sum_xy / n;
  }
  return s;
}

std::optional<double> mean_error_above(const ScenarioTrace& trace, double threshold) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TraceRow& r : trace.rows) {
    if (r.L1.mean() > threshold) {
      sum += r.error;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

MetricsReport compute_metrics(const ScenarioTrace& trace, const std::vector<double>& bin_edges) {
  if (trace.rows.empty()) throw ConfigError("metrics: empty trace");
  if (bin_edges.size() < 2 || !std::is_sorted(bin_edges.begin(), bin_edges.end())) {
    throw ConfigError("metrics: need at least two increasing bin edges");
  }
  MetricsReport rep;
  rep.rows = trace.rows.size();
  rep.duration = trace.rows.back().t - trace.rows.front().t;

  const std::size_t nbins = bin_edges.size() - 1;
  std::vector<double> bsum(nbins, 0.0), bsq(nbins, 0.0);
  std::vector<std::size_t> bcount(nbins, 0);

  double sum = 0.0, sq = 0.0, sum_xy = 0.0;
  for (const TraceRow& r : trace.rows) {
    sum += r.error;
    sq += r.error * r.error;
    rep.max_error = std::max(rep.max_error, r.error);
    const double exy = error_xy(r);
    sum_xy += exy;
    rep.max_error_xy = std::max(rep.max_error_xy, exy);
    rep.peak_force = std::max(rep.peak_force, r.F_env.norm());

    const double k = r.L1.mean();
    const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), k);
    std::size_t b = static_cast<std::size_t>(it - bin_edges.begin());
    if (k == bin_edges.back()) b = nbins;  // right edge belongs to the last bin
    if (b >= 1 && b <= nbins) {
      bsum[b - 1] += r.error;
      bsq[b - 1] += r.error * r.error;
      ++bcount[b - 1];
    }
  }
  const auto n = static_cast<double>(rep.rows);
  rep.mean_error = sum / n;
  rep.rms_error = std::sqrt(sq / n);
  rep.mean_error_xy = sum_xy / n;

  for (std::size_t b = 0; b < nbins; ++b) {
    if (bcount[b] == 0) continue;
    const auto c = static_cast<double>(bcount[b]);
    const double mean = bsum[b] / c;
    const double var = std::max(0.0, bsq[b] / c - mean * mean);
    rep.bins.push_back({bin_edges[b], bin_edges[b + 1], bcount[b], mean, std::sqrt(var)});
  }

  const double dt = trace.dt;
  for (std::size_t i = 1; i + 1 < trace.rows.size(); ++i) {
    const Vec3 a = (trace.rows[i + 1].x - 2.0 * trace.rows[i].x + trace.rows[i - 1].x) / (dt * dt);
    rep.peak_acceleration = std::max(rep.peak_acceleration, a.norm());
  }

  rep.ruptured = trace.ruptured;
  rep.rupture_time = trace.rupture_time;
  for (const Phase& p : trace.phases) rep.phases.push_back(phase_stats(trace, p));
  return rep;
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["rows"] = r.rows;
  j["duration"] = r.duration;
  j["mean_error"] = r.mean_error;
  j["max_error"] = r.max_error;
  j["rms_error"] = r.rms_error;
  j["mean_error_xy"] = r.mean_error_xy;
  j["max_error_xy"] = r.max_error_xy;
  j["peak_acceleration"] = r.peak_acceleration;
  j["peak_force"] = r.peak_force;
  j["ruptured"] = r.ruptured;
  if (r.ruptured) j["rupture_time"] = r.rupture_time;
  j["bins"] = nlohmann::ordered_json::array();
  for (const auto& b : r.bins) {
    j["bins"].push_back(
        {{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"mean", b.mean}, {"stddev", b.stddev}});
  }
  if (!r.phases.empty()) {
    j["phases"] = nlohmann::ordered_json::array();
    for (const auto& p : r.phases) {
      j["phases"].push_back({{"name", p.name},
                             {"t_begin", p.t_begin},
                             {"t_end", p.t_end},
                             {"duration", p.t_end - p.t_begin},
                             {"count", p.count},
                             {"mean_error", p.mean_error},
                             {"max_error", p.max_error},
                             {"rms_error", p.rms_error},
                             {"mean_error_xy", p.mean_error_xy},
                             {"max_error_xy", p.max_error_xy},
                             {"peak_force", p.peak_force}});
    }
  }
  return j.dump(2);
}

}  // namespace teleop::harness
