#include "pssp/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "pssp/error.hpp"

namespace pssp::eval {

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t n = 0;
  for (const auto& row : counts) {
    for (auto v : row) n += v;
  }
  return n;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t n = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) n += counts[c][c];
  return n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const noexcept {
  std::uint64_t n = 0;
  for (auto v : counts[c]) n += v;
  return n;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const noexcept {
  std::uint64_t n = 0;
  for (const auto& row : counts) n += row[c];
  return n;
}

ConfusionMatrix confusion(std::span<const std::int32_t> preds, std::span<const std::int32_t> truth,
                          std::span<const std::uint8_t> mask) {
  if (preds.size() != truth.size() || mask.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(preds.size()) + " predictions, " +
                                               std::to_string(truth.size()) + " labels, " +
                                               std::to_string(mask.size()) + " mask entries");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!mask[i]) continue;
    const auto t = truth[i], p = preds[i];
    if (t < 0 || t >= static_cast<std::int32_t>(kNumClasses) || p < 0 || p >= static_cast<std::int32_t>(kNumClasses)) {
      throw Error(ErrorKind::IndexOutOfRange, "class index outside H, C, E at position " + std::to_string(i));
    }
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const std::int32_t> preds, std::span<const std::int32_t> truth) {
  const std::vector<std::uint8_t> mask(truth.size(), 1);
  return confusion(preds, truth, mask);
}

EvalReport report(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error(ErrorKind::EmptyMatrix, "confusion matrix has no entries");
  EvalReport r;
  r.confusion = cm;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const char name = to_char(kAllClasses[c]);
    auto& m = r.per_class[c];
    const auto tp = static_cast<double>(cm.counts[c][c]);
    const auto predicted = cm.col_sum(c);
    m.support = cm.row_sum(c);
    if (predicted > 0) {
      m.precision = tp / static_cast<double>(predicted);
    } else {
      r.warnings.push_back(std::string("precision of ") + name + " is undefined (no predictions); reported as 0");
    }
    if (m.support > 0) {
      m.recall = tp / static_cast<double>(m.support);
    } else {
      r.warnings.push_back(std::string("recall of ") + name + " is undefined (no true instances); reported as 0");
    }
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      r.warnings.push_back(std::string("F1 of ") + name + " is undefined (precision and recall are 0); reported as 0");
    }
  }

  for (const auto& m : r.per_class) {
    r.macro_avg.precision += m.precision;
    r.macro_avg.recall += m.recall;
    r.macro_avg.f1 += m.f1;
    const double w = static_cast<double>(m.support);
    r.weighted_avg.precision += w * m.precision;
    r.weighted_avg.recall += w * m.recall;
    r.weighted_avg.f1 += w * m.f1;
  }
  const double k = static_cast<double>(kNumClasses);
  r.macro_avg.precision /= k;
  r.macro_avg.recall /= k;
  r.macro_avg.f1 /= k;
  r.macro_avg.support = total;
  const double n = static_cast<double>(total);
  r.weighted_avg.precision /= n;
  r.weighted_avg.recall /= n;
  r.weighted_avg.f1 /= n;
  r.weighted_avg.support = total;
  return r;
}

Summary accuracy_recall_f1_summary(const EvalReport& report) {
  return {report.accuracy, report.weighted_avg.recall, report.weighted_avg.f1};
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = report.per_class[c];
    classes[std::string(1, to_char(kAllClasses[c]))] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  auto avg = [](const AverageMetrics& a) {
    return nlohmann::json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}, {"support", a.support}};
  };
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& row : report.confusion.counts) counts.push_back(row);
  const auto s = accuracy_recall_f1_summary(report);
  return {{"accuracy", report.accuracy},
          {"classes", classes},
          {"macro_avg", avg(report.macro_avg)},
          {"weighted_avg", avg(report.weighted_avg)},
          {"confusion", {{"labels", {"H", "C", "E"}}, {"counts", counts}, {"total", report.confusion.total()}}},
          {"summary", {{"accuracy", s.accuracy}, {"recall", s.recall}, {"f1", s.f1}}},
          {"reference_summary",
           {{"accuracy", kReferenceSummary.accuracy},
            {"recall", kReferenceSummary.recall},
            {"f1", kReferenceSummary.f1}}},
          {"warnings", report.warnings}};
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true\\pred,H,C,E\n";
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    out << to_char(kAllClasses[t]);
    for (auto v : cm.counts[t]) out << ',' << v;
    out << '\n';
  }
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  write_confusion_csv(out, cm);
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10s %10s\n", "class", "precision", "recall", "f1-score",
                "support");
  out += buf;
  static constexpr const char* kNames[] = {"H (Helix)", "C (Coil)", "E (Sheet)"};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = report.per_class[c];
    std::snprintf(buf, sizeof buf, "%-14s %10.4f %10.4f %10.4f %10llu\n", kNames[c], m.precision, m.recall, m.f1,
                  static_cast<unsigned long long>(m.support));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-14s %43.4f\n", "accuracy", report.accuracy);
  out += buf;
  for (const auto* avg : {&report.macro_avg, &report.weighted_avg}) {
    std::snprintf(buf, sizeof buf, "%-14s %10.4f %10.4f %10.4f %10llu\n",
                  avg == &report.macro_avg ? "macro avg" : "weighted avg", avg->precision, avg->recall, avg->f1,
                  static_cast<unsigned long long>(avg->support));
    out += buf;
  }
  return out;
}

}  // namespace pssp::eval
