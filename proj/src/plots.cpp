// SVG line charts for sweep reports. Output is plain SVG 1.1 with no
// external resources.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stealth_grid/errors.hpp"
#include "stealth_grid/experiment.hpp"

namespace sgl {

namespace {

constexpr double kPanelWidth = 420.0;
constexpr double kPanelHeight = 300.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::string note;
};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

std::string tick_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void render_panel(std::ostringstream& svg, const Panel& panel, double ox, double oy) {
  const double plot_w = kPanelWidth - kMarginLeft - kMarginRight;
  const double plot_h = kPanelHeight - kMarginTop - kMarginBottom;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : panel.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double y = panel.log_y ? std::log10(s.y[i]) : s.y[i];
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmin > xmax) xmin = 0, xmax = 1;
  if (ymin > ymax) ymin = 0, ymax = 1;
  if (panel.log_y) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
  }
  if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
  if (ymax - ymin < 1e-12) {
    const double pad = panel.log_y ? 1.0 : std::max(1e-12, std::abs(ymax) * 0.1 + 1e-3);
    ymin -= pad;
    ymax += pad;
  }

  auto px = [&](double x) { return ox + kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) {
    const double v = panel.log_y ? std::log10(y) : y;
    return oy + kMarginTop + (1.0 - (v - ymin) / (ymax - ymin)) * plot_h;
  };
  auto py_raw = [&](double v) { return oy + kMarginTop + (1.0 - (v - ymin) / (ymax - ymin)) * plot_h; };

  svg << "<g>\n";
  svg << "<text x=\"" << num(ox + kPanelWidth / 2) << "\" y=\"" << num(oy + 22)
      << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(panel.title) << "</text>\n";
  svg << "<rect x=\"" << num(ox + kMarginLeft) << "\" y=\"" << num(oy + kMarginTop) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"#000\"/>\n";

  // y ticks
  if (panel.log_y) {
    for (double e = ymin; e <= ymax + 1e-9; e += 1.0) {
      const double y = py_raw(e);
      svg << "<line x1=\"" << num(ox + kMarginLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\""
          << num(ox + kMarginLeft + plot_w) << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
      svg << "<text x=\"" << num(ox + kMarginLeft - 6) << "\" y=\"" << num(y + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">1e" << static_cast<int>(e) << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double v = ymin + (ymax - ymin) * i / 5.0;
      const double y = py_raw(v);
      svg << "<line x1=\"" << num(ox + kMarginLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\""
          << num(ox + kMarginLeft + plot_w) << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
      svg << "<text x=\"" << num(ox + kMarginLeft - 6) << "\" y=\"" << num(y + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">" << escape(tick_label(std::round(v * 1e4) / 1e4))
          << "</text>\n";
    }
  }
  // x ticks
  for (int i = 0; i <= 5; ++i) {
    const double v = xmin + (xmax - xmin) * i / 5.0;
    const double x = px(v);
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(oy + kMarginTop + plot_h + 16)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(tick_label(std::round(v * 10) / 10))
        << "</text>\n";
  }
  svg << "<text x=\"" << num(ox + kMarginLeft + plot_w / 2) << "\" y=\"" << num(oy + kPanelHeight - 12)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(panel.x_label) << "</text>\n";
  svg << "<text x=\"" << num(ox + 16) << "\" y=\"" << num(oy + kMarginTop + plot_h / 2)
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " << num(ox + 16) << ' '
      << num(oy + kMarginTop + plot_h / 2) << ")\">" << escape(panel.y_label) << "</text>\n";

  for (std::size_t s = 0; s < panel.series.size(); ++s) {
    const auto& series = panel.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    if (series.x.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (series.dashed) svg << " stroke-dasharray=\"5,3\"";
      svg << " points=\"";
      for (std::size_t i = 0; i < series.x.size(); ++i) {
        svg << (i ? " " : "") << num(px(series.x[i])) << ',' << num(py(series.y[i]));
      }
      svg << "\"/>\n";
    }
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      svg << "<circle cx=\"" << num(px(series.x[i])) << "\" cy=\"" << num(py(series.y[i]))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = oy + kMarginTop + 14 + 14 * static_cast<double>(s);
    const double lx = ox + kMarginLeft + plot_w - 130;
    svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 18) << "\" y2=\""
        << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(lx + 22) << "\" y=\"" << num(ly) << "\" font-size=\"11\">" << escape(series.name)
        << "</text>\n";
  }
  if (!panel.note.empty()) {
    svg << "<text x=\"" << num(ox + kMarginLeft) << "\" y=\"" << num(oy + kMarginTop - 6)
        << "\" font-size=\"10\" fill=\"#555\">" << escape(panel.note) << "</text>\n";
  }
  svg << "</g>\n";
}

std::string render(const std::string& title, const std::vector<Panel>& panels) {
  const double width = kPanelWidth * static_cast<double>(panels.size());
  const double height = kPanelHeight + 30;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  svg << "<title>" << escape(title) << "</title>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    render_panel(svg, panels[i], kPanelWidth * static_cast<double>(i), 20.0);
  }
  svg << "</svg>\n";
  return svg.str();
}

struct Floor {
  double value;
  bool used = false;

  double apply(double p) {
    if (p > 0) return p;
    used = true;
    return value;
  }
  std::string note() const {
    return used ? "zero estimates drawn at floor 1/(2 trials) = " + format_number(value) : std::string();
  }
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw OutputError("cannot write '" + path.string() + "'");
}

std::string caption(const EvalReport& report) {
  return "SNR " + format_number(report.snr_db) + " dB, rho " + format_number(report.rho) + ", tau " +
         format_number(report.tau);
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const EvalReport& report, const std::filesystem::path& dir) {
  const bool empty = std::all_of(report.sweeps.begin(), report.sweeps.end(),
                                 [](const LambdaSweep& s) { return s.rows.empty(); });
  if (empty) throw DomainError("cannot plot an empty report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory '" + dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  Floor floor{1.0 / (2.0 * static_cast<double>(report.trials))};

  Panel mi{"Mutual information", "attacked sensors k", "I(X;Y_A) [nats]", false, {}, {}};
  Panel pd{"Probability of detection", "attacked sensors k", "P_D", true, {}, {}};
  for (const auto& sweep : report.sweeps) {
    Series s_mi{"lambda = " + lambda_tag(sweep.lambda), {}, {}};
    Series s_pd = s_mi;
    for (const auto& r : sweep.rows) {
      s_mi.x.push_back(static_cast<double>(r.k));
      s_mi.y.push_back(r.mi_nats);
      s_pd.x.push_back(static_cast<double>(r.k));
      s_pd.y.push_back(floor.apply(r.p_detection));
    }
    mi.series.push_back(std::move(s_mi));
    pd.series.push_back(std::move(s_pd));
  }
  pd.note = floor.note();
  const auto summary = dir / "mi_detection.svg";
  write_file(summary, render("Sparse stealth attack: " + caption(report), {mi, pd}));
  written.push_back(summary);

  for (const auto& sweep : report.sweeps) {
    Floor f{floor.value};
    Panel var{"Attack variance, lambda = " + lambda_tag(sweep.lambda), "attacked sensors k",
              "variance of added sensor", true, {}, {}};
    Panel prob{"Detection / false alarm, lambda = " + lambda_tag(sweep.lambda), "attacked sensors k",
               "probability", true, {}, {}};
    Series s_var{"variance", {}, {}};
    Series s_pd{"P_D", {}, {}};
    Series s_pfa{"P_FA", {}, {}, true};
    for (const auto& r : sweep.rows) {
      const auto k = static_cast<double>(r.k);
      s_var.x.push_back(k);
      s_var.y.push_back(r.variance);
      s_pd.x.push_back(k);
      s_pd.y.push_back(f.apply(r.p_detection));
      s_pfa.x.push_back(k);
      s_pfa.y.push_back(f.apply(r.p_false_alarm));
    }
    var.series.push_back(std::move(s_var));
    prob.series.push_back(std::move(s_pd));
    prob.series.push_back(std::move(s_pfa));
    prob.note = f.note();
    const auto path = dir / ("variance_probabilities_lambda" + lambda_tag(sweep.lambda) + ".svg");
    write_file(path, render("Attack variance and detection, lambda = " + lambda_tag(sweep.lambda) + ", " +
                                caption(report),
                            {var, prob}));
    written.push_back(path);
  }
  return written;
}

}  // namespace sgl
