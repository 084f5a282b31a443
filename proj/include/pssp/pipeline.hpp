#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pssp/augment.hpp"
#include "pssp/dataset.hpp"
#include "pssp/evaluation.hpp"
#include "pssp/model.hpp"

namespace pssp {

/// Full-length prediction for one protein: stride-1 windows of the model's
/// max_len, per-position softmax, then overlap averaging.
std::vector<SsClass> predict_sequence(const model::Parameters& params, const std::string& residues,
                                      model::Exec exec = model::Exec::Parallel);

struct WindowEvaluation {
  eval::EvalReport report;
  double loss = 0.0;
};

/// Confusion matrix and report over every unmasked position of `windows`.
WindowEvaluation evaluate_windows(const model::Parameters& params, std::span<const WindowSample> windows,
                                  model::Exec exec = model::Exec::Parallel, std::size_t batch_size = 256);

std::string labels_to_string(std::span<const SsClass> labels);

}  // namespace pssp
