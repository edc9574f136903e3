#include "teleop/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace teleop::harness {

namespace {

constexpr const char* kVectorColumns[] = {"x_l", "xdot_l", "x",  "tau", "L1",
                                          "L2",  "u_l",    "u",  "F_env"};

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

const Vec3& column_vec(const TraceRow& r, std::size_t k) {
  switch (k) {
    case 0: return r.x_l;
    case 1: return r.xdot_l;
    case 2: return r.x;
    case 3: return r.tau;
    case 4: return r.L1;
    case 5: return r.L2;
    case 6: return r.u_l;
    case 7: return r.u;
    default: return r.F_env;
  }
}

Vec3& column_vec(TraceRow& r, std::size_t k) {
  return const_cast<Vec3&>(column_vec(static_cast<const TraceRow&>(r), k));
}

}  // namespace

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"t"};
    for (const char* name : kVectorColumns) {
      for (const char* axis : kAxisNames) c.push_back(std::string(name) + "_" + axis);
    }
    c.emplace_back("error");
    return c;
  }();
  return cols;
}

std::string trace_to_csv(const ScenarioTrace& trace) {
  std::string out;
  out.reserve(trace.rows.size() * 400 + 256);
  const auto& cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out.push_back(',');
    out += cols[i];
  }
  out.push_back('\n');
  for (const TraceRow& r : trace.rows) {
    append_number(out, r.t);
    for (std::size_t k = 0; k < std::size(kVectorColumns); ++k) {
      const Vec3& v = column_vec(r, k);
      for (int a = 0; a < 3; ++a) {
        out.push_back(',');
        append_number(out, v[a]);
      }
    }
    out.push_back(',');
    append_number(out, r.error);
    out.push_back('\n');
  }
  return out;
}

void export_trace(const ScenarioTrace& trace, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  const std::string csv = trace_to_csv(trace);
  f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!f) throw Error("write failed for " + path.string());
}

ScenarioTrace parse_trace_csv(const std::string& text) {
  ScenarioTrace trace;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trace: empty file");
  const auto& cols = trace_columns();
  {
    std::string expected;
    for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
    if (line != expected) throw ConfigError("trace: unexpected header");
  }
  std::size_t lineno = 1;
  std::vector<double> vals(cols.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto res = std::from_chars(p, end, vals[i]);
      if (res.ec != std::errc()) {
        throw ConfigError("trace: bad number in column " + cols[i] + " on line " +
                          std::to_string(lineno));
      }
      p = res.ptr;
      if (i + 1 < cols.size()) {
        if (p == end || *p != ',') {
          throw ConfigError("trace: missing column on line " + std::to_string(lineno));
        }
        ++p;
      }
    }
    TraceRow r;
    r.t = vals[0];
    for (std::size_t k = 0; k < std::size(kVectorColumns); ++k) {
      Vec3& v = column_vec(r, k);
      for (int a = 0; a < 3; ++a) v[a] = vals[1 + 3 * k + a];
    }
    r.error = vals.back();
    trace.rows.push_back(r);
  }
  if (trace.rows.size() >= 2) trace.dt = trace.rows[1].t - trace.rows[0].t;
  return trace;
}

ScenarioTrace read_trace(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trace_csv(ss.str());
}

}  // namespace teleop::harness
