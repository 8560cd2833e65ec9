#include "conformal_kit/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace conformal {

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char ch : s) {
    switch (ch) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

void append_json_number(std::string& out, double v) {
  if (std::isfinite(v)) {
    out += format_double(v);
  } else if (std::isnan(v)) {
    out += "\"nan\"";
  } else {
    out += v > 0 ? "\"inf\"" : "\"-inf\"";
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string report_to_json(const ExperimentReport& report) {
  std::string out = "{\n";
  out += "  \"experiment\": \"" + json_escape(report.experiment) + "\",\n";
  out += "  \"config\": {";
  for (std::size_t i = 0; i < report.config.size(); ++i) {
    if (i > 0) out += ",";
    out += "\n    \"" + json_escape(report.config[i].first) + "\": \"" +
           json_escape(report.config[i].second) + "\"";
  }
  out += report.config.empty() ? "},\n" : "\n  },\n";
  out += "  \"rows\": [";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const ReportRow& row = report.rows[i];
    if (i > 0) out += ",";
    out += "\n    {\n      \"label\": \"" + json_escape(row.label) + "\",\n      \"stats\": {";
    for (std::size_t j = 0; j < row.stats.size(); ++j) {
      if (j > 0) out += ",";
      out += "\n        \"" + json_escape(row.stats[j].first) + "\": ";
      append_json_number(out, row.stats[j].second);
    }
    out += row.stats.empty() ? "}\n    }" : "\n      }\n    }";
  }
  out += report.rows.empty() ? "],\n" : "\n  ],\n";
  out += std::string("  \"has_pass_criterion\": ") +
         (report.has_pass_criterion ? "true" : "false") + ",\n";
  out += std::string("  \"pass\": ") + (report.pass ? "true" : "false") + "\n";
  out += "}\n";
  return out;
}

std::string report_to_csv(const ExperimentReport& report) {
  if (report.rows.empty()) return "cell\n";
  std::string out = "cell";
  const auto& header = report.rows.front().stats;
  for (const auto& [key, value] : header) {
    (void)value;
    out += "," + key;
  }
  out += "\n";
  for (const ReportRow& row : report.rows) {
    out += row.label;
    for (const auto& [key, value] : header) {
      (void)value;
      out += "," + format_double(row.at(key));
    }
    out += "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw argument_error("cannot open file for writing: " + path);
  file << content;
  if (!file.good()) throw argument_error("failed while writing file: " + path);
}

}  // namespace conformal
