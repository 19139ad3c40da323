#include "invlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace invlab {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Axes {
  double x0, x1, y0, y1;          // data range
  double px0, px1, py0, py1;      // pixel range (py0 is bottom)
  double x(double v) const { return px0 + (v - x0) / (x1 - x0) * (px1 - px0); }
  double y(double v) const { return py0 + (v - y0) / (y1 - y0) * (py1 - py0); }
};

void svg_open(std::ostream& os, int w, int h) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
     << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
}

void svg_line(std::ostream& os, double x1, double y1, double x2, double y2,
              const std::string& stroke, double width = 1.0, bool dashed = false) {
  os << "<line x1=\"" << fmt("%.2f", x1) << "\" y1=\"" << fmt("%.2f", y1) << "\" x2=\""
     << fmt("%.2f", x2) << "\" y2=\"" << fmt("%.2f", y2) << "\" stroke=\"" << stroke
     << "\" stroke-width=\"" << width << "\"";
  if (dashed) os << " stroke-dasharray=\"6,4\"";
  os << "/>\n";
}

void svg_text(std::ostream& os, double x, double y, const std::string& t, int size = 12,
              const std::string& anchor = "middle", const std::string& fill = "black") {
  os << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", y) << "\" font-size=\"" << size
     << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">"
     << t << "</text>\n";
}

void draw_axes(std::ostream& os, const Axes& ax, const std::string& xlabel,
               const std::string& ylabel, double tick_step) {
  svg_line(os, ax.px0, ax.py0, ax.px1, ax.py0, "black");
  svg_line(os, ax.px0, ax.py0, ax.px0, ax.py1, "black");
  for (double v = ax.x0; v <= ax.x1 + 1e-9; v += tick_step) {
    svg_line(os, ax.x(v), ax.py0, ax.x(v), ax.py0 + 5, "black");
    svg_text(os, ax.x(v), ax.py0 + 20, fmt("%.1f", v), 11);
  }
  for (double v = ax.y0; v <= ax.y1 + 1e-9; v += tick_step) {
    svg_line(os, ax.px0 - 5, ax.y(v), ax.px0, ax.y(v), "black");
    svg_text(os, ax.px0 - 10, ax.y(v) + 4, fmt("%.1f", v), 11, "end");
  }
  svg_text(os, (ax.px0 + ax.px1) / 2, ax.py0 + 42, xlabel, 13);
  os << "<text x=\"" << fmt("%.2f", ax.px0 - 45) << "\" y=\""
     << fmt("%.2f", (ax.py0 + ax.py1) / 2)
     << "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 "
     << fmt("%.2f", ax.px0 - 45) << " " << fmt("%.2f", (ax.py0 + ax.py1) / 2) << ")\">" << ylabel
     << "</text>\n";
}

std::string lambda_label(double l) {
  std::ostringstream os;
  os << "&#955;=" << l;
  return os.str();
}

void write_scatter_svg(const SweepResult& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("emit_report: cannot write " + path);
  const int W = 640, H = 520;
  Axes ax{0.0, 1.0, 0.0, 1.0, 70, W - 30, H - 60, 30};
  svg_open(os, W, H);
  draw_axes(os, ax, "adversary accuracy (movement, binary)",
            "classifier accuracy (texture, 3-class)", 0.1);
  // chance levels: 1/2 for the adversary, 1/3 for the classifier
  svg_line(os, ax.x(0.5), ax.py0, ax.x(0.5), ax.py1, "black", 1.0, true);
  svg_line(os, ax.px0, ax.y(1.0 / 3.0), ax.px1, ax.y(1.0 / 3.0), "black", 1.0, true);

  for (std::size_t i = 0; i < r.summary.size(); ++i) {
    const auto& s = r.summary[i];
    if (s.n_cells == 0) continue;
    const char* color = kPalette[i % 10];
    const double cx = ax.x(s.adversary_mean), cy = ax.y(s.classifier_mean);
    const double hw = std::abs(ax.x(s.adversary_mean + s.adversary_std) - cx);
    const double hh = std::abs(cy - ax.y(s.classifier_mean + s.classifier_std));
    os << "<rect x=\"" << fmt("%.2f", cx - hw) << "\" y=\"" << fmt("%.2f", cy - hh) << "\" width=\""
       << fmt("%.2f", 2 * hw) << "\" height=\"" << fmt("%.2f", 2 * hh) << "\" fill=\"" << color
       << "\" fill-opacity=\"0.18\" stroke=\"" << color << "\"/>\n";
    os << "<circle cx=\"" << fmt("%.2f", cx) << "\" cy=\"" << fmt("%.2f", cy)
       << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    svg_text(os, cx + 6, cy - 6, lambda_label(s.lambda), 11, "start", color);
  }
  os << "</svg>\n";
}

void write_diff_svg(const SweepResult& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("emit_report: cannot write " + path);
  const LambdaSummary* base = nullptr;
  for (const auto& s : r.summary)
    if (s.lambda == 0.0 && s.n_cells > 0) base = &s;

  double lim = 0.05;
  std::vector<double> d_cls, d_adv;
  for (const auto& s : r.summary) {
    const double dc = base && s.n_cells ? s.classifier_mean - base->classifier_mean : 0.0;
    const double da = base && s.n_cells ? s.adversary_mean - base->adversary_mean : 0.0;
    d_cls.push_back(dc);
    d_adv.push_back(da);
    lim = std::max({lim, std::abs(dc) * 1.2, std::abs(da) * 1.2});
  }

  const int W = 640, H = 420;
  Axes ax{-0.5, static_cast<double>(r.summary.size()) - 0.5, -lim, lim, 70, W - 30, H - 60, 30};
  svg_open(os, W, H);
  svg_line(os, ax.px0, ax.py0, ax.px1, ax.py0, "black");
  svg_line(os, ax.px0, ax.py0, ax.px0, ax.py1, "black");
  svg_line(os, ax.px0, ax.y(0.0), ax.px1, ax.y(0.0), "black", 1.0, true);
  for (int k = -4; k <= 4; ++k) {
    const double v = lim * k / 4.0;
    svg_line(os, ax.px0 - 5, ax.y(v), ax.px0, ax.y(v), "black");
    svg_text(os, ax.px0 - 10, ax.y(v) + 4, fmt("%+.3f", v), 10, "end");
  }
  const double slot = (ax.px1 - ax.px0) / static_cast<double>(r.summary.size());
  const double bar = slot * 0.28;
  for (std::size_t i = 0; i < r.summary.size(); ++i) {
    const double xc = ax.x(static_cast<double>(i));
    auto draw_bar = [&](double dx, double v, const char* color) {
      const double ytop = ax.y(std::max(v, 0.0)), ybot = ax.y(std::min(v, 0.0));
      os << "<rect x=\"" << fmt("%.2f", xc + dx - bar / 2) << "\" y=\"" << fmt("%.2f", ytop)
         << "\" width=\"" << fmt("%.2f", bar) << "\" height=\""
         << fmt("%.2f", std::max(0.5, ybot - ytop)) << "\" fill=\"" << color << "\"/>\n";
    };
    draw_bar(-bar * 0.6, d_adv[i], "#d62728");  // adversary differences in red
    draw_bar(+bar * 0.6, d_cls[i], "#1f77b4");  // classifier differences in blue
    svg_text(os, xc, ax.py0 + 20, lambda_label(r.summary[i].lambda), 11);
  }
  svg_text(os, (ax.px0 + ax.px1) / 2, ax.py0 + 42, "accuracy difference vs &#955;=0", 13);
  svg_text(os, ax.px0 + 10, ax.py1 + 10, "red: adversary, blue: classifier", 11, "start");
  os << "</svg>\n";
}

}  // namespace

void emit_report(const SweepResult& result, const std::string& out_dir) {
  if (result.cells.empty()) throw std::invalid_argument("emit_report: empty sweep result");
  fs::create_directories(out_dir);

  {
    std::ofstream csv(fs::path(out_dir) / "results.csv");
    if (!csv) throw std::runtime_error("emit_report: cannot write results.csv under " + out_dir);
    csv << "lambda,lambda_index,rep,fold,seed,classifier_accuracy,adversary_accuracy,best_epoch,status\n";
    for (const auto& c : result.cells) {
      csv << fmt("%.6g", c.lambda) << "," << c.lambda_index << "," << c.rep << "," << c.fold << ","
          << c.seed << ",";
      if (c.ok) {
        csv << fmt("%.9f", c.classifier_accuracy) << "," << fmt("%.9f", c.adversary_accuracy)
            << "," << c.best_epoch << ",ok\n";
      } else {
        csv << ",,-1,failed\n";
      }
    }
  }
  {
    std::ofstream csv(fs::path(out_dir) / "summary.csv");
    if (!csv) throw std::runtime_error("emit_report: cannot write summary.csv under " + out_dir);
    csv << "lambda,n_cells,classifier_mean,classifier_std,adversary_mean,adversary_std\n";
    for (const auto& s : result.summary) {
      csv << fmt("%.6g", s.lambda) << "," << s.n_cells << "," << fmt("%.9f", s.classifier_mean)
          << "," << fmt("%.9f", s.classifier_std) << "," << fmt("%.9f", s.adversary_mean) << ","
          << fmt("%.9f", s.adversary_std) << "\n";
    }
  }
  write_scatter_svg(result, (fs::path(out_dir) / "scatter.svg").string());
  write_diff_svg(result, (fs::path(out_dir) / "diff.svg").string());
}

SweepResult read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_results_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("lambda,", 0) != 0)
    throw std::runtime_error("read_results_csv: missing header in " + path);

  SweepResult r;
  std::map<int, double> lambda_by_index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    while (fields.size() < 9) fields.emplace_back();
    SweepCellResult c;
    c.lambda = std::stod(fields[0]);
    c.lambda_index = std::stoi(fields[1]);
    c.rep = std::stoi(fields[2]);
    c.fold = std::stoi(fields[3]);
    c.seed = std::stoull(fields[4]);
    c.ok = fields[8] == "ok";
    if (c.ok) {
      c.classifier_accuracy = std::stod(fields[5]);
      c.adversary_accuracy = std::stod(fields[6]);
      c.best_epoch = std::stoi(fields[7]);
    }
    lambda_by_index[c.lambda_index] = c.lambda;
    r.reps = std::max(r.reps, c.rep + 1);
    r.folds = std::max(r.folds, c.fold + 1);
    r.cells.push_back(std::move(c));
  }
  if (r.cells.empty()) throw std::runtime_error("read_results_csv: no rows in " + path);
  r.lambdas.resize(lambda_by_index.size());
  for (const auto& [idx, lam] : lambda_by_index) {
    if (idx < 0 || idx >= static_cast<int>(r.lambdas.size()))
      throw std::runtime_error("read_results_csv: non-contiguous lambda indices in " + path);
    r.lambdas[static_cast<std::size_t>(idx)] = lam;
  }
  compute_summary(r);
  return r;
}

}  // namespace invlab
