#include "teleop/batch.hpp"

#include <omp.h>

#include "teleop/trace.hpp"

namespace teleop::harness {

std::uint64_t trace_hash(const ScenarioTrace& trace) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : trace_to_csv(trace)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

BatchResult run_one(const ScenarioConfig& config) {
  BatchResult r;
  try {
    const ScenarioTrace trace = run_scenario(config);
    r.metrics = compute_metrics(trace);
    r.trace_hash = trace_hash(trace);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

std::vector<BatchResult> run_batch_serial(const std::vector<ScenarioConfig>& configs) {
  std::vector<BatchResult> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(run_one(c));
  return out;
}

std::vector<BatchResult> run_batch_parallel(const std::vector<ScenarioConfig>& configs,
                                            int threads) {
  std::vector<BatchResult> out(configs.size());
  const auto n = static_cast<long>(configs.size());
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  // Scenarios differ in length, so hand them out one at a time.
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = run_one(configs[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<ScenarioConfig> seed_sweep(const ScenarioConfig& base, std::uint64_t first_seed,
                                       std::size_t count) {
  std::vector<ScenarioConfig> out(count, base);
  for (std::size_t i = 0; i < count; ++i) out[i].seed = first_seed + i;
  return out;
}

}  // namespace teleop::harness
