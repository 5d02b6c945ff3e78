#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smt/dataio.hpp"
#include "smt/evalreport.hpp"

namespace smt {

// Static SVG charts and cross-run summaries. No plotting dependency: the
// charts are hand-assembled polylines/rects with fixed margins.

namespace svg {

inline const char* kPalette[8] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series,
                              int W = 720, int H = 440) {
  const double ml = 60, mr = 150, mt = 40, mb = 45;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
     << "' font-family='sans-serif' font-size='12'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
     << "</text>\n";
  // axes and gridlines
  for (int i = 0; i <= 4; ++i) {
    double y = ymin + (ymax - ymin) * i / 4.0;
    os << "<line x1='" << ml << "' y1='" << py(y) << "' x2='" << W - mr << "' y2='" << py(y)
       << "' stroke='#ddd'/>\n";
    os << "<text x='" << ml - 6 << "' y='" << py(y) + 4 << "' text-anchor='end'>" << fmt(y)
       << "</text>\n";
    double x = xmin + (xmax - xmin) * i / 4.0;
    os << "<text x='" << px(x) << "' y='" << H - mb + 18 << "' text-anchor='middle'>"
       << fmt(x) << "</text>\n";
  }
  os << "<line x1='" << ml << "' y1='" << py(ymin) << "' x2='" << W - mr << "' y2='"
     << py(ymin) << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << py(ymin) << "' x2='" << ml << "' y2='" << mt
     << "' stroke='black'/>\n";
  os << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 8 << "' text-anchor='middle'>"
     << x_label << "</text>\n";
  os << "<text x='14' y='" << H / 2 << "' text-anchor='middle' transform='rotate(-90 14 "
     << H / 2 << ")'>" << y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 8];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      os << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
    os << "'/>\n";
    double ly = mt + 16.0 * static_cast<double>(s);
    os << "<line x1='" << W - mr + 10 << "' y1='" << ly << "' x2='" << W - mr + 30
       << "' y2='" << ly << "' stroke='" << color << "' stroke-width='2'/>\n";
    os << "<text x='" << W - mr + 35 << "' y='" << ly + 4 << "'>" << series[s].name
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values, int W = 720, int H = 440) {
  const double ml = 60, mr = 30, mt = 40, mb = 70;
  double ymax = 0;
  for (double v : values) ymax = std::max(ymax, v);
  if (ymax <= 0) ymax = 1;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
     << "' font-family='sans-serif' font-size='12'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
     << "</text>\n";
  const double plot_w = W - ml - mr, plot_h = H - mt - mb;
  const double bw = plot_w / std::max<std::size_t>(1, values.size());
  for (int i = 0; i <= 4; ++i) {
    double y = ymax * i / 4.0;
    double yy = H - mb - y / ymax * plot_h;
    os << "<line x1='" << ml << "' y1='" << yy << "' x2='" << W - mr << "' y2='" << yy
       << "' stroke='#ddd'/>\n";
    os << "<text x='" << ml - 6 << "' y='" << yy + 4 << "' text-anchor='end'>" << fmt(y)
       << "</text>\n";
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    double h = values[i] / ymax * plot_h;
    double x = ml + bw * static_cast<double>(i) + bw * 0.15;
    os << "<rect x='" << x << "' y='" << H - mb - h << "' width='" << bw * 0.7
       << "' height='" << h << "' fill='" << kPalette[i % 8] << "'/>\n";
    double cx = ml + bw * (static_cast<double>(i) + 0.5);
    os << "<text x='" << cx << "' y='" << H - mb + 14
       << "' text-anchor='end' transform='rotate(-35 " << cx << " " << H - mb + 14 << ")'>"
       << labels[i] << "</text>\n";
  }
  os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
     << "' stroke='black'/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace svg

// ---- run aggregation ----

struct RunData {
  fs::path dir;
  nlohmann::json run_config;
  std::vector<nlohmann::json> metrics;  // one record per epoch
  std::vector<double> loss_steps, loss_total;
  std::optional<EvalReport> report;

  std::string mode() const { return run_config.value("mode", "?"); }
  uint64_t seed() const { return run_config.value("seed", 0ull); }
  std::string name() const { return dir.filename().string(); }
};

inline RunData load_run(const fs::path& dir) {
  if (!fs::exists(dir / "run_config.json"))
    throw config_error("not a run directory (missing run_config.json): " + dir.string());
  RunData run;
  run.dir = dir;
  run.run_config = io::read_json(dir / "run_config.json");
  if (fs::exists(dir / "metrics.jsonl")) {
    std::ifstream is(dir / "metrics.jsonl");
    std::string line;
    while (std::getline(is, line))
      if (!line.empty()) run.metrics.push_back(nlohmann::json::parse(line));
  }
  if (fs::exists(dir / "loss_log.csv")) {
    std::ifstream is(dir / "loss_log.csv");
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      auto c1 = line.find(',');
      auto c2 = line.find(',', c1 + 1);
      auto last = line.rfind(',');
      if (c2 == std::string::npos || last == std::string::npos) continue;
      run.loss_steps.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
      run.loss_total.push_back(std::stod(line.substr(last + 1)));
    }
  }
  if (fs::exists(dir / "report.json"))
    run.report = EvalReport::from_json(io::read_json(dir / "report.json"));
  return run;
}

// Emits loss curves, validation curves, per-class bars (when a test report is
// present), a combined per-epoch CSV, and a grouped per-mode ablation table.
inline void write_report(const std::vector<RunData>& runs, const fs::path& out_dir) {
  fs::create_directories(out_dir);

  std::vector<svg::Series> loss_series, fmap_series;
  for (const auto& run : runs) {
    svg::Series ls{run.name(), run.loss_steps, run.loss_total};
    if (!ls.x.empty()) loss_series.push_back(std::move(ls));
    svg::Series ms;
    ms.name = run.name();
    for (const auto& m : run.metrics) {
      ms.x.push_back(m.value("epoch", 0));
      ms.y.push_back(m.value("f_map_0.5", 0.0));
    }
    if (!ms.x.empty()) fmap_series.push_back(std::move(ms));
  }
  {
    std::ofstream os(out_dir / "loss_curves.svg");
    os << svg::line_chart("Training loss", "step", "total loss", loss_series);
  }
  {
    std::ofstream os(out_dir / "val_fmap.svg");
    os << svg::line_chart("Validation f-mAP@0.5", "epoch", "f-mAP@0.5", fmap_series);
  }

  {
    std::ofstream os(out_dir / "combined.csv");
    os << "run,mode,seed,epoch,f_map_0.5,v_map_0.5,coherence\n";
    for (const auto& run : runs)
      for (const auto& m : run.metrics)
        os << run.name() << "," << run.mode() << "," << run.seed() << ","
           << m.value("epoch", 0) << "," << m.value("f_map_0.5", 0.0) << ","
           << m.value("v_map_0.5", 0.0) << "," << m.value("coherence", 0.0) << "\n";
  }

  // grouped per-mode table from each run's final epoch (test report if present)
  struct Agg {
    double f = 0, v = 0, coh = 0;
    int n = 0;
  };
  std::map<std::string, Agg> by_mode;
  for (const auto& run : runs) {
    double f = 0, v = 0, coh = 0;
    if (run.report) {
      f = run.report->f_map_at("0.5");
      v = run.report->v_map_at("0.5");
      coh = run.report->coherence;
    } else if (!run.metrics.empty()) {
      const auto& m = run.metrics.back();
      f = m.value("f_map_0.5", 0.0);
      v = m.value("v_map_0.5", 0.0);
      coh = m.value("coherence", 0.0);
    } else {
      continue;
    }
    Agg& a = by_mode[run.mode()];
    a.f += f;
    a.v += v;
    a.coh += coh;
    ++a.n;
  }
  const char* order[] = {"supervised", "mean-teacher", "+eor", "+dop", "full"};
  {
    std::ofstream os(out_dir / "ablation.csv");
    os << "mode,runs,f_map_0.5,v_map_0.5,coherence\n";
    auto emit = [&](const std::string& mode, const Agg& a) {
      os << mode << "," << a.n << "," << a.f / a.n << "," << a.v / a.n << "," << a.coh / a.n
         << "\n";
    };
    for (const char* m : order)
      if (by_mode.count(m)) emit(m, by_mode[m]);
    for (const auto& [m, a] : by_mode)
      if (std::find_if(std::begin(order), std::end(order),
                       [&](const char* o) { return m == o; }) == std::end(order))
        emit(m, a);
  }

  for (const auto& run : runs)
    if (run.report) {
      std::vector<std::string> labels;
      std::vector<double> values;
      for (const auto& row : run.report->f_rows)
        if (row.threshold == "0.5")
          for (const auto& [cls, ap] : row.per_class) {
            labels.push_back("class " + std::to_string(cls));
            values.push_back(ap);
          }
      std::ofstream os(out_dir / ("per_class_fmap_" + run.name() + ".svg"));
      os << svg::bar_chart("Per-class f-AP@0.5 (" + run.name() + ")", labels, values);
    }
}

}  // namespace smt
