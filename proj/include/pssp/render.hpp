#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pssp/dataset.hpp"
#include "pssp/evaluation.hpp"
#include "pssp/training.hpp"

namespace pssp::render {

struct BarSeries {
  std::string title;
  std::string x_label;
  std::vector<std::pair<std::string, double>> bars;
};

struct LineSeries {
  std::string name;
  std::vector<double> values;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<LineSeries> series;
};

/// Self-contained SVG documents.
std::string bar_chart_svg(const BarSeries& series);
std::string line_chart_svg(const LineChart& chart);
std::string confusion_heatmap_svg(const eval::ConfusionMatrix& cm, const std::string& title);

/// Residues over truth over prediction, with '*' under every mismatch,
/// wrapped at `width` columns.
std::string alignment_view(const std::string& id, const std::string& residues, const std::string& truth,
                           const std::string& predicted, std::size_t width = 60);
std::size_t count_mismatch_marks(const std::string& view);

struct SampleComparison {
  std::string id;
  std::string residues;
  std::string truth;
  std::string predicted;
};

/// lengths/residues/classes .csv and .svg.
void write_eda_outputs(const std::filesystem::path& dir, const EdaReport& eda);
/// history.csv, accuracy_curves.svg, loss_curves.svg.
void write_history_outputs(const std::filesystem::path& dir, const training::History& history);
/// report.json, confusion.csv, confusion_heatmap.svg.
void write_eval_outputs(const std::filesystem::path& dir, const eval::EvalReport& report);
/// alignment.txt
void write_alignment(const std::filesystem::path& dir, const SampleComparison& sample);

/// Every figure and table for one run. Throws IoFailure.
void render_outputs(const std::filesystem::path& dir, const EdaReport& eda, const training::History& history,
                    const eval::EvalReport& report, const SampleComparison& sample);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pssp::render
