#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "teleop/engine.hpp"

namespace teleop::harness {

// Column names in CSV order, axis-suffixed with _x/_y/_z.
const std::vector<std::string>& trace_columns();

// Shortest round-trip decimal text for every value, so identical traces give
// identical bytes.
std::string trace_to_csv(const ScenarioTrace& trace);

// Throws Error naming the path on I/O failure.
void export_trace(const ScenarioTrace& trace, const std::filesystem::path& path);

// Parses a CSV written by export_trace. Annotations are not stored in the
// file and come back empty.
ScenarioTrace read_trace(const std::filesystem::path& path);
ScenarioTrace parse_trace_csv(const std::string& text);

}  // namespace teleop::harness
