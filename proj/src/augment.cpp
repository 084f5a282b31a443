#include "pssp/augment.hpp"

#include <ostream>

#include "pssp/error.hpp"

namespace pssp {

std::size_t WindowSample::valid_count() const noexcept {
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

namespace {

void check_geometry(std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) {
    throw Error(ErrorKind::InvalidConfig, "window and stride must both be at least 1");
  }
}

WindowSample make_window(const ProteinRecord& record, std::size_t offset, std::size_t window,
                         const Vocabulary& vocab) {
  WindowSample w;
  w.source_id = record.id;
  w.offset = offset;
  w.tokens.assign(window, Vocabulary::kPad);
  w.labels.assign(window, kIgnoreLabel);
  w.mask.assign(window, 0);
  const std::size_t end = std::min(record.size(), offset + window);
  for (std::size_t i = offset; i < end; ++i) {
    const auto j = i - offset;
    w.tokens[j] = vocab.token_of(record.residues[i]);
    w.labels[j] = index_of(record.labels[i]);
    w.mask[j] = 1;
  }
  return w;
}

}  // namespace

std::size_t window_count(std::size_t length, std::size_t window, std::size_t stride, ShortPolicy short_policy) {
  check_geometry(window, stride);
  if (length == 0) return 0;
  if (length < window) return short_policy == ShortPolicy::PadTail ? 1 : 0;
  return (length - window) / stride + 1;
}

std::vector<WindowSample> sliding_windows(const ProteinRecord& record, std::size_t window, std::size_t stride,
                                          ShortPolicy short_policy) {
  const auto n = window_count(record.size(), window, stride, short_policy);
  const auto& vocab = build_vocabulary();
  std::vector<WindowSample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(make_window(record, k * stride, window, vocab));
  return out;
}

std::vector<WindowSample> augment_records(std::span<const ProteinRecord> records, const AugmentConfig& config) {
  check_geometry(config.window, config.stride);
  std::vector<std::vector<WindowSample>> per_record(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    per_record[static_cast<std::size_t>(i)] =
        sliding_windows(records[static_cast<std::size_t>(i)], config.window, config.stride, config.short_policy);
  }
  std::size_t total = 0;
  for (const auto& v : per_record) total += v.size();
  std::vector<WindowSample> out;
  out.reserve(total);
  for (auto& v : per_record) {
    for (auto& w : v) out.push_back(std::move(w));
  }
  return out;
}

std::size_t count_windows(std::span<const ProteinRecord> records, std::size_t window, std::size_t stride,
                          ShortPolicy short_policy) {
  std::size_t total = 0;
  for (const auto& r : records) total += window_count(r.size(), window, stride, short_policy);
  return total;
}

std::vector<SsClass> reconstruct_predictions(std::span<const WindowSample> windows,
                                             std::span<const std::vector<ClassProbs>> probs, std::size_t target_len) {
  if (windows.size() != probs.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one probability block is required per window");
  }
  std::vector<ClassProbs> sums(target_len, ClassProbs{});
  std::vector<std::size_t> hits(target_len, 0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.source_id != windows.front().source_id) {
      throw Error(ErrorKind::MalformedInput, "windows from '" + windows.front().source_id + "' and '" + w.source_id +
                                                 "' cannot be reconstructed together");
    }
    if (probs[i].size() != w.size()) {
      throw Error(ErrorKind::ShapeMismatch, "probability rows do not match window length");
    }
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (!w.mask[j]) continue;
      const auto pos = w.offset + j;
      if (pos >= target_len) {
        throw Error(ErrorKind::IndexOutOfRange, "window position " + std::to_string(pos) + " is past the sequence end");
      }
      for (std::size_t c = 0; c < kNumClasses; ++c) sums[pos][c] += probs[i][j][c];
      ++hits[pos];
    }
  }
  std::vector<SsClass> out(target_len);
  for (std::size_t pos = 0; pos < target_len; ++pos) {
    if (hits[pos] == 0) {
      throw Error(ErrorKind::CoverageGap, "residue " + std::to_string(pos) + " is not covered by any window");
    }
    // Dividing by the shared count keeps the comparison exact for ties.
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
      if (sums[pos][c] / static_cast<double>(hits[pos]) > sums[pos][best] / static_cast<double>(hits[pos])) best = c;
    }
    out[pos] = kAllClasses[best];
  }
  return out;
}

void write_windows_csv(std::ostream& out, std::span<const WindowSample> windows) {
  out << "source_id,offset,tokens,labels,mask\n";
  auto join = [&out](const auto& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out << ' ';
      out << static_cast<long long>(values[i]);
    }
  };
  for (const auto& w : windows) {
    out << w.source_id << ',' << w.offset << ',';
    join(w.tokens);
    out << ',';
    join(w.labels);
    out << ',';
    join(w.mask);
    out << '\n';
  }
}

std::string to_string(ShortPolicy policy) { return policy == ShortPolicy::PadTail ? "pad" : "skip"; }

ShortPolicy short_policy_from_string(const std::string& text) {
  if (text == "pad") return ShortPolicy::PadTail;
  if (text == "skip") return ShortPolicy::Skip;
  throw Error(ErrorKind::InvalidConfig, "short policy must be 'pad' or 'skip', got '" + text + "'");
}

}  // namespace pssp
