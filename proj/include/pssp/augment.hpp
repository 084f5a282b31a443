#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pssp/dataset.hpp"
#include "pssp/tokenizer.hpp"

namespace pssp {

inline constexpr std::size_t kDefaultWindow = 15;
inline constexpr std::size_t kDefaultStride = 1;

/// Sample count the reference setup reports for CB513 at window 15, stride 1.
inline constexpr std::size_t kReferenceWindowCount = 76937;

enum class ShortPolicy { PadTail, Skip };

/// A fixed-length slice of one protein. Positions past the end of a short
/// protein carry PAD tokens, kIgnoreLabel and mask 0.
struct WindowSample {
  std::string source_id;
  std::size_t offset = 0;
  std::vector<TokenId> tokens;
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> mask;

  std::size_t size() const noexcept { return tokens.size(); }
  std::size_t valid_count() const noexcept;
  bool operator==(const WindowSample&) const = default;
};

struct AugmentConfig {
  std::size_t window = kDefaultWindow;
  std::size_t stride = kDefaultStride;
  ShortPolicy short_policy = ShortPolicy::PadTail;
};

std::vector<WindowSample> sliding_windows(const ProteinRecord& record, std::size_t window = kDefaultWindow,
                                          std::size_t stride = kDefaultStride,
                                          ShortPolicy short_policy = ShortPolicy::PadTail);

/// Windows for every record, ordered by (record, offset). Records are
/// processed in parallel; the result does not depend on the thread count.
std::vector<WindowSample> augment_records(std::span<const ProteinRecord> records, const AugmentConfig& config = {});

/// Number of windows sliding_windows would produce for a sequence of `length`.
std::size_t window_count(std::size_t length, std::size_t window, std::size_t stride, ShortPolicy short_policy);

std::size_t count_windows(std::span<const ProteinRecord> records, std::size_t window = kDefaultWindow,
                          std::size_t stride = kDefaultStride, ShortPolicy short_policy = ShortPolicy::PadTail);

using ClassProbs = std::array<double, kNumClasses>;

/// Per-residue labels for one protein from overlapping window predictions.
/// Each residue takes the mean of the probability rows of every unmasked
/// window position covering it, then the argmax (ties to the lower index).
/// `probs[i]` holds one row per position of `windows[i]`.
std::vector<SsClass> reconstruct_predictions(std::span<const WindowSample> windows,
                                             std::span<const std::vector<ClassProbs>> probs, std::size_t target_len);

/// CSV with columns source_id,offset,tokens,labels,mask; arrays are
/// space-separated integers.
void write_windows_csv(std::ostream& out, std::span<const WindowSample> windows);

std::string to_string(ShortPolicy policy);
ShortPolicy short_policy_from_string(const std::string& text);

}  // namespace pssp
