#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pssp/dataset.hpp"

namespace pssp::eval {

/// counts[true][predicted], class order H, C, E.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  std::uint64_t row_sum(std::size_t c) const noexcept;
  std::uint64_t col_sum(std::size_t c) const noexcept;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Counts positions where mask != 0. Throws LengthMismatch, and
/// IndexOutOfRange for unmasked values outside {0, 1, 2}.
ConfusionMatrix confusion(std::span<const std::int32_t> preds, std::span<const std::int32_t> truth,
                          std::span<const std::uint8_t> mask);
/// Unmasked variant: every position counts.
ConfusionMatrix confusion(std::span<const std::int32_t> preds, std::span<const std::int32_t> truth);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  ConfusionMatrix confusion;
  std::array<ClassMetrics, kNumClasses> per_class{};
  double accuracy = 0.0;
  AverageMetrics macro_avg;
  AverageMetrics weighted_avg;
  /// One entry per metric whose denominator was zero (reported as 0).
  std::vector<std::string> warnings;
};

/// precision = diag/col, recall = diag/row, F1 = harmonic mean; macro is the
/// plain mean over classes, weighted uses row supports. Zero denominators
/// give 0 and a warning. Throws EmptyMatrix.
EvalReport report(const ConfusionMatrix& cm);

/// Accuracy, weighted recall and weighted F1.
struct Summary {
  double accuracy = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Summary accuracy_recall_f1_summary(const EvalReport& report);

/// Published validation summary kept as a comparison target.
inline constexpr Summary kReferenceSummary{0.8879, 0.8879, 0.8872};

nlohmann::json to_json(const EvalReport& report);
void write_report_json(const std::filesystem::path& path, const EvalReport& report);
/// 3x3 grid with header row and column labels H,C,E.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);

/// Console table in the layout of a per-class classification report.
std::string format_report(const EvalReport& report);

}  // namespace pssp::eval
