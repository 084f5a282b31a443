#include "pssp/pipeline.hpp"

#include "pssp/error.hpp"

namespace pssp {

std::vector<SsClass> predict_sequence(const model::Parameters& params, const std::string& residues,
                                      model::Exec exec) {
  if (residues.empty()) throw Error(ErrorKind::MalformedInput, "empty sequence");
  ProteinRecord record;
  record.id = "query";
  record.residues = residues;
  // Labels are placeholders; only tokens and masks feed the model.
  record.labels.assign(residues.size(), SsClass::C);
  const auto windows = sliding_windows(record, params.config.max_len, 1, ShortPolicy::PadTail);
  const auto batch = model::make_batch(windows);
  const auto probs = model::predict_probs(params, batch, exec);

  const auto len = batch.length;
  std::vector<std::vector<ClassProbs>> rows(windows.size(), std::vector<ClassProbs>(len));
  for (std::size_t w = 0; w < windows.size(); ++w) {
    for (std::size_t j = 0; j < len; ++j) {
      const auto r = probs.row(w * len + j);
      rows[w][j] = {r[0], r[1], r[2]};
    }
  }
  return reconstruct_predictions(windows, rows, residues.size());
}

WindowEvaluation evaluate_windows(const model::Parameters& params, std::span<const WindowSample> windows,
                                  model::Exec exec, std::size_t batch_size) {
  eval::ConfusionMatrix cm;
  double loss_total = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const auto end = std::min(windows.size(), start + batch_size);
    idx.clear();
    for (std::size_t i = start; i < end; ++i) idx.push_back(i);
    const auto batch = model::make_batch(windows, idx);
    const auto pass = model::forward(params, batch, model::Mode::Eval, exec);
    const auto loss = nn::sparse_ce_loss(pass.logits, batch.labels);
    loss_total += loss.loss * static_cast<double>(loss.count);
    count += loss.count;
    const auto preds = model::argmax_labels(pass.logits, batch.mask);
    const auto part = eval::confusion(preds, batch.labels, batch.mask);
    for (std::size_t t = 0; t < kNumClasses; ++t) {
      for (std::size_t p = 0; p < kNumClasses; ++p) cm.counts[t][p] += part.counts[t][p];
    }
  }
  WindowEvaluation out;
  out.report = eval::report(cm);
  out.loss = count ? loss_total / static_cast<double>(count) : 0.0;
  return out;
}

std::string labels_to_string(std::span<const SsClass> labels) {
  std::string s;
  s.reserve(labels.size());
  for (auto c : labels) s.push_back(to_char(c));
  return s;
}

}  // namespace pssp
