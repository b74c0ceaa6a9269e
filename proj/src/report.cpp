// Copyright 2026 The psyeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "psyeval/error.hpp"
#include "psyeval/eval.hpp"
#include "psyeval/io.hpp"

namespace psyeval::eval {

namespace {

using nlohmann::json;

constexpr corpus::Measure kMeasures[] = {corpus::Measure::FFD, corpus::Measure::GD, corpus::Measure::TD};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_json(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range range_of(const std::vector<double>& v) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double x : v) {
    r.lo = std::min(r.lo, x);
    r.hi = std::max(r.hi, x);
  }
  if (v.empty()) return {0.0, 1.0};
  if (r.hi - r.lo < 1e-12) {
    r.lo -= 1.0;
    r.hi += 1.0;
  }
  const double pad = 0.08 * (r.hi - r.lo);
  return {r.lo - pad, r.hi + pad};
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "svg" || name == "svg-scatter") return ReportFormat::Svg;
  throw ArgumentError("unknown report format '" + std::string(name) + "' (expected csv, json or svg)");
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "model_id,vocab_size,ppl,ppl_normalized,pnc,pnc_pairs,dll_ffd,dll_gd,dll_td,n_ffd,n_gd,n_td,error\n";
  for (const auto& r : rows) {
    out += csv_field(r.model_id) + ',' + std::to_string(r.vocab_size) + ',' + io::format_double(r.ppl) + ',' +
           io::format_double(r.ppl_normalized) + ',' + io::format_double(r.pnc) + ',' +
           std::to_string(r.pnc_pairs) + ',' + io::format_double(r.dll_ffd) + ',' + io::format_double(r.dll_gd) +
           ',' + io::format_double(r.dll_td) + ',' + std::to_string(r.n_ffd) + ',' + std::to_string(r.n_gd) +
           ',' + std::to_string(r.n_td) + ',' + csv_field(r.error) + '\n';
  }
  return out;
}

std::string report_json(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json o;
    o["model_id"] = r.model_id;
    o["vocab_size"] = r.vocab_size;
    o["ppl"] = number(r.ppl);
    o["ppl_normalized"] = number(r.ppl_normalized);
    o["pnc"] = number(r.pnc);
    o["pnc_pairs"] = r.pnc_pairs;
    o["dll_ffd"] = number(r.dll_ffd);
    o["dll_gd"] = number(r.dll_gd);
    o["dll_td"] = number(r.dll_td);
    o["n_ffd"] = r.n_ffd;
    o["n_gd"] = r.n_gd;
    o["n_td"] = r.n_td;
    if (!r.error.empty()) o["error"] = r.error;
    arr.push_back(std::move(o));
  }
  return json{{"rows", arr}}.dump(2) + "\n";
}

std::vector<ReportRow> parse_report_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
  std::vector<ReportRow> rows;
  try {
    for (const auto& o : doc.at("rows")) {
      ReportRow r;
      r.model_id = o.at("model_id").get<std::string>();
      r.vocab_size = o.at("vocab_size").get<std::int64_t>();
      r.ppl = from_json(o.at("ppl"));
      r.ppl_normalized = from_json(o.at("ppl_normalized"));
      r.pnc = from_json(o.at("pnc"));
      r.pnc_pairs = o.at("pnc_pairs").get<std::int64_t>();
      r.dll_ffd = from_json(o.at("dll_ffd"));
      r.dll_gd = from_json(o.at("dll_gd"));
      r.dll_td = from_json(o.at("dll_td"));
      r.n_ffd = o.at("n_ffd").get<std::int64_t>();
      r.n_gd = o.at("n_gd").get<std::int64_t>();
      r.n_td = o.at("n_td").get<std::int64_t>();
      r.error = o.value("error", std::string());
      rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
  return rows;
}

std::string report_svg(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw ArgumentError("scatter plot needs at least one report row");
  std::vector<corpus::Measure> measures;
  for (auto m : kMeasures)
    if (std::any_of(rows.begin(), rows.end(), [&](const ReportRow& r) { return std::isfinite(r.dll(m)); }))
      measures.push_back(m);

  constexpr double kPanelW = 320, kPanelH = 240, kMargin = 56, kGap = 24;
  const double width = 2 * (kPanelW + kMargin) + kGap;
  const double height = std::max<double>(1, measures.size()) * (kPanelH + kMargin + kGap) + kGap;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t mi = 0; mi < measures.size(); ++mi) {
    const corpus::Measure m = measures[mi];
    std::string mname(corpus::measure_name(m));
    for (char& c : mname) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (int metric = 0; metric < 2; ++metric) {
      struct Mark {
        double x, y;
        const std::string* id;
      };
      std::vector<Mark> marks;
      for (const auto& r : rows) {
        const double x = metric == 0 ? r.ppl : r.pnc;
        const double y = r.dll(m);
        if (std::isfinite(x) && std::isfinite(y)) marks.push_back({x, y, &r.model_id});
      }
      std::vector<double> xs, ys;
      for (const auto& mk : marks) {
        xs.push_back(mk.x);
        ys.push_back(mk.y);
      }
      const Range xr = range_of(xs), yr = range_of(ys);
      const double ox = kMargin + metric * (kPanelW + kMargin + kGap);
      const double oy = kGap + static_cast<double>(mi) * (kPanelH + kMargin + kGap);
      auto px = [&](double x) { return ox + (x - xr.lo) / (xr.hi - xr.lo) * kPanelW; };
      auto py = [&](double y) { return oy + kPanelH - (y - yr.lo) / (yr.hi - yr.lo) * kPanelH; };
      const char* metric_name = metric == 0 ? "ppl" : "pnc";
      svg << "<g class=\"panel\" data-measure=\"" << corpus::measure_name(m) << "\" data-metric=\"" << metric_name
          << "\">\n";
      svg << "<rect x=\"" << fixed(ox) << "\" y=\"" << fixed(oy) << "\" width=\"" << fixed(kPanelW)
          << "\" height=\"" << fixed(kPanelH) << "\" fill=\"none\" stroke=\"#444\"/>\n";
      svg << "<text class=\"xlabel\" x=\"" << fixed(ox + kPanelW / 2) << "\" y=\"" << fixed(oy + kPanelH + 34)
          << "\" text-anchor=\"middle\">" << (metric == 0 ? "Perplexity" : "PNC") << "</text>\n";
      svg << "<text class=\"ylabel\" x=\"" << fixed(ox - 40) << "\" y=\"" << fixed(oy + kPanelH / 2)
          << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << fixed(ox - 40) << " " << fixed(oy + kPanelH / 2)
          << ")\">&#916;LogLik (" << mname << ")</text>\n";
      for (double t : {xr.lo, xr.hi})
        svg << "<text class=\"tick\" x=\"" << fixed(px(t)) << "\" y=\"" << fixed(oy + kPanelH + 14)
            << "\" text-anchor=\"middle\">" << fixed(t, metric == 0 ? 1 : 3) << "</text>\n";
      for (double t : {yr.lo, yr.hi})
        svg << "<text class=\"tick\" x=\"" << fixed(ox - 4) << "\" y=\"" << fixed(py(t) + 4)
            << "\" text-anchor=\"end\">" << fixed(t, 1) << "</text>\n";
      for (const auto& mk : marks)
        svg << "<circle class=\"mark\" cx=\"" << fixed(px(mk.x)) << "\" cy=\"" << fixed(py(mk.y))
            << "\" r=\"4\" fill=\"#1f77b4\"><title>" << xml_escape(*mk.id) << "</title></circle>\n";
      svg << "</g>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path) {
  switch (format) {
    case ReportFormat::Csv: io::atomic_write(path, report_csv(rows)); break;
    case ReportFormat::Json: io::atomic_write(path, report_json(rows)); break;
    case ReportFormat::Svg: io::atomic_write(path, report_svg(rows)); break;
  }
}

}  // namespace psyeval::eval
