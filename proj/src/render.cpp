#include "pssp/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pssp/error.hpp"

namespace pssp::render {
namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::fabs(v) >= 1000 || v == std::floor(v)) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  }
  return buf;
}

void open_svg(std::ostringstream& s, const std::string& title) {
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
}

void y_axis(std::ostringstream& s, double lo, double hi, const std::string& label) {
  const double plot_h = kHeight - kTop - kBottom;
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    const double y = kHeight - kBottom - plot_h * i / 4.0;
    s << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(y) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << num(y)
      << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << tick_label(v)
      << "</text>\n";
  }
  s << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << kTop + plot_h / 2 << ")\">" << escape(label) << "</text>\n";
}

}  // namespace

std::string bar_chart_svg(const BarSeries& series) {
  std::ostringstream s;
  open_svg(s, series.title);
  double hi = 0.0;
  for (const auto& [key, value] : series.bars) hi = std::max(hi, value);
  if (hi <= 0.0) hi = 1.0;
  y_axis(s, 0.0, hi, "count");
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = series.bars.empty() ? plot_w : plot_w / static_cast<double>(series.bars.size());
  // Label at most ~30 ticks so dense histograms stay readable.
  const std::size_t label_every = std::max<std::size_t>(1, series.bars.size() / 30);
  for (std::size_t i = 0; i < series.bars.size(); ++i) {
    const auto& [key, value] = series.bars[i];
    const double h = plot_h * value / hi;
    const double x = kLeft + slot * static_cast<double>(i);
    s << "<rect x=\"" << num(x + slot * 0.1) << "\" y=\"" << num(kHeight - kBottom - h) << "\" width=\""
      << num(slot * 0.8) << "\" height=\"" << num(h) << "\" fill=\"#4878a8\"><title>" << escape(key) << ": "
      << tick_label(value) << "</title></rect>\n";
    if (i % label_every == 0) {
      s << "<text x=\"" << num(x + slot / 2) << "\" y=\"" << kHeight - kBottom + 14 << "\" text-anchor=\"middle\">"
        << escape(key) << "</text>\n";
    }
  }
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\">"
    << escape(series.x_label) << "</text>\n</svg>\n";
  return s.str();
}

std::string line_chart_svg(const LineChart& chart) {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};
  std::ostringstream s;
  open_svg(s, chart.title);
  double lo = 0.0, hi = 0.0;
  bool any = false;
  std::size_t n = 0;
  for (const auto& ser : chart.series) {
    n = std::max(n, ser.values.size());
    for (double v : ser.values) {
      if (!any) lo = hi = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      any = true;
    }
  }
  if (!any || hi == lo) {
    hi = lo + 1.0;
  }
  y_axis(s, lo, hi, chart.y_label);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) { return kLeft + (n > 1 ? plot_w * static_cast<double>(i) / (n - 1) : plot_w / 2); };
  auto py = [&](double v) { return kHeight - kBottom - plot_h * (v - lo) / (hi - lo); };
  for (std::size_t i = 0; i < n; ++i) {
    s << "<text x=\"" << num(px(i)) << "\" y=\"" << kHeight - kBottom + 14 << "\" text-anchor=\"middle\">" << i + 1
      << "</text>\n";
  }
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& ser = chart.series[k];
    const char* color = kColors[k % 4];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < ser.values.size(); ++i) s << (i ? " " : "") << num(px(i)) << ',' << num(py(ser.values[i]));
    s << "\"/>\n";
    s << "<text x=\"" << kWidth - kRight - 140 << "\" y=\"" << kTop + 14 * (k + 1) << "\" fill=\"" << color << "\">"
      << escape(ser.name) << "</text>\n";
  }
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\">"
    << escape(chart.x_label) << "</text>\n</svg>\n";
  return s.str();
}

std::string confusion_heatmap_svg(const eval::ConfusionMatrix& cm, const std::string& title) {
  std::ostringstream s;
  open_svg(s, title);
  std::uint64_t hi = 1;
  for (const auto& row : cm.counts) {
    for (auto v : row) hi = std::max(hi, v);
  }
  const double cell = 100.0;
  const double x0 = (kWidth - 3 * cell) / 2, y0 = 70.0;
  static constexpr const char* kLabels[] = {"H", "C", "E"};
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      const double f = static_cast<double>(cm.counts[t][p]) / static_cast<double>(hi);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - 0.85 * f)));
      char color[16];
      std::snprintf(color, sizeof color, "#%02x%02xff", shade, shade);
      const double x = x0 + cell * static_cast<double>(p), y = y0 + cell * static_cast<double>(t);
      s << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << cell << "\" height=\"" << cell
        << "\" fill=\"" << color << "\" stroke=\"white\"/>\n"
        << "<text x=\"" << num(x + cell / 2) << "\" y=\"" << num(y + cell / 2 + 4) << "\" text-anchor=\"middle\" fill=\""
        << (f > 0.6 ? "white" : "black") << "\">" << cm.counts[t][p] << "</text>\n";
    }
    s << "<text x=\"" << num(x0 - 10) << "\" y=\"" << num(y0 + cell * t + cell / 2 + 4) << "\" text-anchor=\"end\">"
      << kLabels[t] << "</text>\n"
      << "<text x=\"" << num(x0 + cell * t + cell / 2) << "\" y=\"" << num(y0 - 8) << "\" text-anchor=\"middle\">"
      << kLabels[t] << "</text>\n";
  }
  s << "<text x=\"" << num(x0 - 40) << "\" y=\"" << num(y0 + 1.5 * cell) << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
    << num(x0 - 40) << ' ' << num(y0 + 1.5 * cell) << ")\">true class</text>\n"
    << "<text x=\"" << num(x0 + 1.5 * cell) << "\" y=\"" << num(y0 + 3 * cell + 24)
    << "\" text-anchor=\"middle\">predicted class</text>\n</svg>\n";
  return s.str();
}

std::string alignment_view(const std::string& id, const std::string& residues, const std::string& truth,
                           const std::string& predicted, std::size_t width) {
  if (truth.size() != predicted.size() || residues.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch, "alignment rows differ in length");
  }
  if (width == 0) width = 60;
  std::size_t mismatches = 0;
  std::string marks(truth.size(), ' ');
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != predicted[i]) {
      marks[i] = '*';
      ++mismatches;
    }
  }
  std::ostringstream s;
  s << "# " << id << "  length " << truth.size() << "  mismatches " << mismatches << '\n';
  for (std::size_t start = 0; start < truth.size(); start += width) {
    const auto n = std::min(width, truth.size() - start);
    s << '\n'
      << "pos   " << start + 1 << '\n'
      << "seq   " << residues.substr(start, n) << '\n'
      << "true  " << truth.substr(start, n) << '\n'
      << "pred  " << predicted.substr(start, n) << '\n'
      << "      " << marks.substr(start, n) << '\n';
  }
  return s.str();
}

std::size_t count_mismatch_marks(const std::string& view) {
  std::size_t n = 0;
  std::istringstream in(view);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("      ", 0) == 0) n += static_cast<std::size_t>(std::count(line.begin(), line.end(), '*'));
  }
  return n;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

void write_eda_outputs(const std::filesystem::path& dir, const EdaReport& eda) {
  write_eda_csv(eda, dir);
  BarSeries lengths{"Distribution of sequence lengths", "sequence length (residues)", {}};
  for (const auto& [len, count] : eda.length_histogram) {
    lengths.bars.emplace_back(std::to_string(len), static_cast<double>(count));
  }
  BarSeries residues{"Distribution of amino acid residues", "residue", {}};
  for (const auto& [res, count] : eda.residue_frequency) {
    residues.bars.emplace_back(std::string(1, res), static_cast<double>(count));
  }
  BarSeries classes{"Distribution of secondary structure classes", "class", {}};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    classes.bars.emplace_back(std::string(1, to_char(kAllClasses[c])), static_cast<double>(eda.class_frequency[c]));
  }
  write_text_file(dir / "lengths.svg", bar_chart_svg(lengths));
  write_text_file(dir / "residues.svg", bar_chart_svg(residues));
  write_text_file(dir / "classes.svg", bar_chart_svg(classes));
}

void write_history_outputs(const std::filesystem::path& dir, const training::History& history) {
  ensure_directory(dir);
  training::write_history_csv(dir / "history.csv", history);
  LineChart acc{"Training and validation accuracy", "epoch", "token accuracy", {{"train accuracy", {}}, {"validation accuracy", {}}}};
  LineChart loss{"Training and validation loss", "epoch", "cross-entropy", {{"train loss", {}}, {"validation loss", {}}}};
  for (const auto& e : history.epochs) {
    acc.series[0].values.push_back(e.train_acc);
    acc.series[1].values.push_back(e.val_acc);
    loss.series[0].values.push_back(e.train_loss);
    loss.series[1].values.push_back(e.val_loss);
  }
  write_text_file(dir / "accuracy_curves.svg", line_chart_svg(acc));
  write_text_file(dir / "loss_curves.svg", line_chart_svg(loss));
}

void write_eval_outputs(const std::filesystem::path& dir, const eval::EvalReport& report) {
  ensure_directory(dir);
  eval::write_report_json(dir / "report.json", report);
  eval::write_confusion_csv(dir / "confusion.csv", report.confusion);
  write_text_file(dir / "confusion_heatmap.svg", confusion_heatmap_svg(report.confusion, "Confusion matrix (H, C, E)"));
}

void write_alignment(const std::filesystem::path& dir, const SampleComparison& sample) {
  ensure_directory(dir);
  write_text_file(dir / "alignment.txt", alignment_view(sample.id, sample.residues, sample.truth, sample.predicted));
}

void render_outputs(const std::filesystem::path& dir, const EdaReport& eda, const training::History& history,
                    const eval::EvalReport& report, const SampleComparison& sample) {
  ensure_directory(dir);
  write_eda_outputs(dir, eda);
  write_history_outputs(dir, history);
  write_eval_outputs(dir, report);
  write_alignment(dir, sample);
}

}  // namespace pssp::render
