/*
 * Copyright 2026 The qnet Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>

#include "qnet/error.hpp"
#include "qnet/eval.hpp"

namespace qnet {

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "text" || name == "text_table") return ReportFormat::text;
  throw UsageError("unknown report format '" + name + "' (json, csv, text)");
}

nlohmann::ordered_json BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model_id;
  j["dtype"] = dtype;
  j["runs"] = runs;
  j["warmup"] = warmup;
  j["mean_ms"] = mean_ms;
  j["std_ms"] = std_ms;
  j["min_ms"] = min_ms;
  j["max_ms"] = max_ms;
  j["fps"] = fps;
  j["host"] = host;
  return j;
}

BenchReport BenchReport::from_json(const nlohmann::json& j) {
  BenchReport r;
  try {
    r.model_id = j.at("model").get<std::string>();
    r.dtype = j.at("dtype").get<std::string>();
    r.runs = j.at("runs").get<std::int64_t>();
    r.warmup = j.at("warmup").get<std::int64_t>();
    r.mean_ms = j.at("mean_ms").get<double>();
    r.std_ms = j.at("std_ms").get<double>();
    r.min_ms = j.at("min_ms").get<double>();
    r.max_ms = j.at("max_ms").get<double>();
    r.fps = j.at("fps").get<double>();
    r.host = j.at("host").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed benchmark report: ") + e.what());
  }
  r.verify();
  return r;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string bench_row_csv(const BenchReport& r) {
  return csv_field(r.model_id) + "," + r.dtype + "," + std::to_string(r.runs) + "," + std::to_string(r.warmup) +
         "," + fmt("%.17g", r.mean_ms) + "," + fmt("%.17g", r.std_ms) + "," + fmt("%.17g", r.min_ms) + "," +
         fmt("%.17g", r.max_ms) + "," + fmt("%.17g", r.fps) + "," + csv_field(r.host) + "\n";
}

constexpr const char* kBenchCsvHeader = "model,dtype,runs,warmup,mean_ms,std_ms,min_ms,max_ms,fps,host\n";

}  // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      return report.to_json().dump(2) + "\n";
    case ReportFormat::csv: {
      std::string out = "class,count,correct,accuracy\n";
      for (std::size_t i = 0; i < report.class_names().size(); ++i) {
        out += csv_field(report.class_names()[i]) + "," + std::to_string(report.class_counts()[i]) + "," +
               std::to_string(report.confusion()[i][i]) + "," + fmt("%.17g", report.per_class_accuracy()[i]) + "\n";
      }
      return out;
    }
    case ReportFormat::text: {
      std::size_t w = 5;
      for (const auto& n : report.class_names()) w = std::max(w, n.size());
      std::string out = report.model_id() + " (" + report.dtype() + ")\n";
      out += pad("class", w) + "  count  accuracy\n";
      for (std::size_t i = 0; i < report.class_names().size(); ++i) {
        out += pad(report.class_names()[i], w) + "  " + pad(std::to_string(report.class_counts()[i]), 5) + "  " +
               fmt("%.5f", report.per_class_accuracy()[i]) + "\n";
      }
      out += pad("top-1", w) + "  " + pad(std::to_string(report.total()), 5) + "  " + fmt("%.5f", report.top1()) + "\n";
      return out;
    }
  }
  throw UsageError("unknown report format");
}

std::string emit_report(const BenchReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return report.to_json().dump(2) + "\n";
  return emit_report(std::vector<BenchReport>{report}, format);
}

std::string emit_report(const std::vector<BenchReport>& reports, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: {
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const auto& r : reports) j.push_back(r.to_json());
      return j.dump(2) + "\n";
    }
    case ReportFormat::csv: {
      std::string out = kBenchCsvHeader;
      for (const auto& r : reports) out += bench_row_csv(r);
      return out;
    }
    case ReportFormat::text: {
      std::size_t w = 5;
      for (const auto& r : reports) w = std::max(w, r.model_id.size());
      std::string out = pad("model", w) + "  dtype   runs   mean ms    std ms    min ms    max ms       fps\n";
      for (const auto& r : reports) {
        char line[160];
        std::snprintf(line, sizeof line, "  %-5s %6lld %9.3f %9.3f %9.3f %9.3f %9.2f\n", r.dtype.c_str(),
                      static_cast<long long>(r.runs), r.mean_ms, r.std_ms, r.min_ms, r.max_ms, r.fps);
        out += pad(r.model_id, w) + line;
      }
      return out;
    }
  }
  throw UsageError("unknown report format");
}

}  // namespace qnet
