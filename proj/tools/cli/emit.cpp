#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cli.hpp"

namespace apkit::cli {

namespace {

void indent(std::ostream& out, int depth) {
  for (int i = 0; i < depth; ++i) out << "  ";
}

void write_number(std::ostream& out, double v) {
  if (!std::isfinite(v)) {
    out << "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

void write_value(std::ostream& out, const nlohmann::json& v, int depth, bool compact) {
  using value_t = nlohmann::json::value_t;
  switch (v.type()) {
    case value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << (compact ? "{" : "{\n");
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // std::map order: sorted keys
        if (!first) out << (compact ? "," : ",\n");
        first = false;
        if (!compact) indent(out, depth + 1);
        out << nlohmann::json(it.key()).dump() << (compact ? ":" : ": ");
        write_value(out, it.value(), depth + 1, compact);
      }
      if (!compact) {
        out << "\n";
        indent(out, depth);
      }
      out << "}";
      return;
    }
    case value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      // Arrays of scalars stay on one line to keep tables compact.
      const bool flat = compact || std::none_of(v.begin(), v.end(), [](const auto& e) { return e.is_structured(); });
      out << "[";
      bool first = true;
      for (const auto& e : v) {
        if (!first) out << (flat && !compact ? ", " : ",");
        first = false;
        if (!flat) {
          out << "\n";
          indent(out, depth + 1);
        }
        write_value(out, e, depth + 1, compact);
      }
      if (!flat) {
        out << "\n";
        indent(out, depth);
      }
      out << "]";
      return;
    }
    case value_t::number_float:
      write_number(out, v.get<double>());
      return;
    default:
      out << v.dump();
      return;
  }
}

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
  }
  if (v.is_null()) return "";
  if (v.is_structured()) {
    std::ostringstream s;
    write_value(s, v, 0, true);
    return s.str();
  }
  return v.dump();
}

nlohmann::json header_of(const RunSpec& spec) {
  nlohmann::json h;
  h["tool"] = kToolName;
  h["version"] = kToolVersion;
  h["command"] = spec.command;
  h["parameters"] = spec.parameters;
  h["seed"] = spec.seed;
  h["wall_time_ms"] = spec.timing ? nlohmann::json(spec.wall_time_ms) : nlohmann::json(nullptr);
  return h;
}

}  // namespace

void write_json(std::ostream& out, const nlohmann::json& value) {
  write_value(out, value, 0, false);
  out << "\n";
}

std::string csv_field(const nlohmann::json& value) {
  const std::string text = scalar_text(value);
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (const char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void emit_report(std::ostream& out, const RunSpec& spec, const Report& report, Format format) {
  if (format == Format::json) {
    nlohmann::json doc;
    doc["header"] = header_of(spec);
    doc["result"] = report.result;
    if (!report.columns.empty()) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : report.rows) rows.push_back(r);
      doc["table"] = {{"columns", report.columns}, {"rows", rows}};
    }
    write_json(out, doc);
    return;
  }
  const nlohmann::json h = header_of(spec);
  for (auto it = h.begin(); it != h.end(); ++it) out << "# " << it.key() << "=" << scalar_text(it.value()) << "\r\n";
  for (auto it = report.result.begin(); it != report.result.end(); ++it) {
    out << "# result." << it.key() << "=" << scalar_text(it.value()) << "\r\n";
  }
  for (std::size_t i = 0; i < report.columns.size(); ++i) out << (i ? "," : "") << csv_field(report.columns[i]);
  out << "\r\n";
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << "\r\n";
  }
}

std::uint64_t stream_id(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace apkit::cli
