#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "smt/metrics.hpp"

namespace smt {

// Threshold-sweep evaluation summary: per-class AP tables for frame-level and
// video-level mAP, mean rows, static/dynamic sub-population rows, and the
// temporal-coherence diagnostic.
struct EvalReport {
  struct Row {
    std::string threshold;  // "0.2".."0.6" or "0.5:0.95"
    std::map<int, double> per_class;
    double mean = 0.0;
    double static_mean = 0.0;
    double dynamic_mean = 0.0;
    bool has_static = false, has_dynamic = false;
  };

  std::vector<Row> f_rows, v_rows;
  double coherence = 0.0;
  std::map<int, std::string> class_background;  // class -> "static" | "dynamic"

  nlohmann::json to_json() const {
    auto rows_json = [&](const std::vector<Row>& rows) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& r : rows) {
        nlohmann::json pc = nlohmann::json::object();
        for (const auto& [cls, ap] : r.per_class) pc[std::to_string(cls)] = ap;
        nlohmann::json jr{{"threshold", r.threshold}, {"per_class", pc}, {"mean", r.mean}};
        if (r.has_static) jr["static_mean"] = r.static_mean;
        if (r.has_dynamic) jr["dynamic_mean"] = r.dynamic_mean;
        out.push_back(std::move(jr));
      }
      return out;
    };
    nlohmann::json bg = nlohmann::json::object();
    for (const auto& [cls, b] : class_background) bg[std::to_string(cls)] = b;
    return nlohmann::json{{"format", 1},
                          {"f_map", rows_json(f_rows)},
                          {"v_map", rows_json(v_rows)},
                          {"coherence", coherence},
                          {"class_background", bg}};
  }

  static EvalReport from_json(const nlohmann::json& j) {
    if (j.at("format") != 1) throw config_error("unsupported report format");
    auto rows_from = [](const nlohmann::json& arr) {
      std::vector<Row> rows;
      for (const auto& jr : arr) {
        Row r;
        r.threshold = jr.at("threshold");
        for (const auto& [k, v] : jr.at("per_class").items())
          r.per_class[std::stoi(k)] = v.get<double>();
        r.mean = jr.at("mean");
        if (jr.contains("static_mean")) {
          r.has_static = true;
          r.static_mean = jr.at("static_mean");
        }
        if (jr.contains("dynamic_mean")) {
          r.has_dynamic = true;
          r.dynamic_mean = jr.at("dynamic_mean");
        }
        rows.push_back(std::move(r));
      }
      return rows;
    };
    EvalReport rep;
    rep.f_rows = rows_from(j.at("f_map"));
    rep.v_rows = rows_from(j.at("v_map"));
    rep.coherence = j.at("coherence");
    for (const auto& [k, v] : j.at("class_background").items())
      rep.class_background[std::stoi(k)] = v.get<std::string>();
    return rep;
  }

  // One row per metric/threshold; per-class columns cover every class seen in
  // any row so the table is rectangular.
  std::string to_csv() const {
    std::map<int, bool> classes;
    for (const auto* rows : {&f_rows, &v_rows})
      for (const auto& r : *rows)
        for (const auto& [cls, ap] : r.per_class) classes[cls] = true;
    auto fmt = [](double x) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", x);
      return std::string(buf);
    };
    std::string out = "metric,threshold,mean,static_mean,dynamic_mean";
    for (const auto& [cls, unused] : classes) out += ",class_" + std::to_string(cls);
    out += "\n";
    auto emit = [&](const char* name, const std::vector<Row>& rows) {
      for (const auto& r : rows) {
        out += std::string(name) + "," + r.threshold + "," + fmt(r.mean) + "," +
               (r.has_static ? fmt(r.static_mean) : "") + "," +
               (r.has_dynamic ? fmt(r.dynamic_mean) : "");
        for (const auto& [cls, unused] : classes) {
          auto it = r.per_class.find(cls);
          out += ",";
          if (it != r.per_class.end()) out += fmt(it->second);
        }
        out += "\n";
      }
    };
    emit("f_map", f_rows);
    emit("v_map", v_rows);
    out += "coherence,," + fmt(coherence) + ",,";
    for (const auto& [cls, unused] : classes) out += ",";
    out += "\n";
    return out;
  }

  // Convenience accessors for acceptance checks.
  double f_map_at(const std::string& thresh) const {
    for (const auto& r : f_rows)
      if (r.threshold == thresh) return r.mean;
    throw std::invalid_argument("report has no f-mAP row at " + thresh);
  }
  double v_map_at(const std::string& thresh) const {
    for (const auto& r : v_rows)
      if (r.threshold == thresh) return r.mean;
    throw std::invalid_argument("report has no v-mAP row at " + thresh);
  }
};

namespace detail {

inline EvalReport::Row make_row(const std::string& label, const PerClassAp& ap,
                                const std::map<int, std::string>& background) {
  EvalReport::Row r;
  r.threshold = label;
  r.per_class = ap.ap;
  r.mean = ap.mean;
  double ss = 0, sd = 0;
  int ns = 0, nd = 0;
  for (const auto& [cls, v] : ap.ap) {
    auto it = background.find(cls);
    if (it == background.end()) continue;
    if (it->second == "static") {
      ss += v;
      ++ns;
    } else if (it->second == "dynamic") {
      sd += v;
      ++nd;
    }
  }
  if (ns > 0) {
    r.has_static = true;
    r.static_mean = ss / ns;
  }
  if (nd > 0) {
    r.has_dynamic = true;
    r.dynamic_mean = sd / nd;
  }
  return r;
}

}  // namespace detail

inline const std::vector<double>& report_thresholds() {
  static const std::vector<double> t = {0.2, 0.3, 0.4, 0.5, 0.6};
  return t;
}

inline EvalReport make_eval_report(const std::vector<DetectionTube>& predictions,
                                   const std::vector<GroundTruthVideo>& ground_truths,
                                   const std::map<int, std::string>& class_background,
                                   double coherence, IouMode mode = IouMode::mask) {
  EvalReport rep;
  rep.class_background = class_background;
  rep.coherence = coherence;

  char buf[16];
  for (double t : report_thresholds()) {
    std::snprintf(buf, sizeof(buf), "%.1f", t);
    rep.f_rows.push_back(
        detail::make_row(buf, f_map(predictions, ground_truths, t, mode), class_background));
    rep.v_rows.push_back(
        detail::make_row(buf, v_map(predictions, ground_truths, t, mode), class_background));
  }
  // 0.5:0.05:0.95 average, per class then pooled into one row
  auto sweep = [&](bool video) {
    PerClassAp acc;
    int n = 0;
    for (double t = 0.5; t < 0.951; t += 0.05) {
      PerClassAp ap = video ? v_map(predictions, ground_truths, t, mode)
                            : f_map(predictions, ground_truths, t, mode);
      for (const auto& [cls, v] : ap.ap) acc.ap[cls] += v;
      ++n;
    }
    for (auto& [cls, v] : acc.ap) v /= n;
    acc.finish();
    return acc;
  };
  rep.f_rows.push_back(detail::make_row("0.5:0.95", sweep(false), class_background));
  rep.v_rows.push_back(detail::make_row("0.5:0.95", sweep(true), class_background));
  return rep;
}

}  // namespace smt
