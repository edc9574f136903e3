#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "teleop/metrics.hpp"

namespace teleop::harness {

struct BatchResult {
  MetricsReport metrics;
  std::uint64_t trace_hash = 0;
  std::string error;  // empty on success
};

// 64-bit FNV-1a over the trace's CSV text; stable across platforms.
std::uint64_t trace_hash(const ScenarioTrace& trace);

// Serial reference: runs each config in order.
std::vector<BatchResult> run_batch_serial(const std::vector<ScenarioConfig>& configs);

// Same results, one scenario per OpenMP task. `threads` <= 0 uses the
// runtime default.
std::vector<BatchResult> run_batch_parallel(const std::vector<ScenarioConfig>& configs,
                                            int threads = 0);

// `count` copies of `base` with consecutive seeds.
std::vector<ScenarioConfig> seed_sweep(const ScenarioConfig& base, std::uint64_t first_seed,
                                       std::size_t count);

}  // namespace teleop::harness
