#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pssp/dataset.hpp"

namespace pssp {

using TokenId = std::int32_t;

/// Marker stored in label arrays at padded positions; the loss skips it.
inline constexpr std::int32_t kIgnoreLabel = -1;

/// Fixed residue vocabulary: PAD=0, UNK=1, then the 20 canonical amino acids
/// in alphabetical order starting at 2.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kCanonical = "ACDEFGHIKLMNPQRSTVWY";

  Vocabulary();

  std::size_t size() const noexcept { return kCanonical.size() + 2; }
  TokenId pad_id() const noexcept { return kPad; }
  TokenId unk_id() const noexcept { return kUnk; }

  /// Canonical letters (either case) map to their id; anything else to UNK.
  TokenId token_of(char residue) const noexcept;
  /// Throws IndexOutOfRange for ids outside the vocabulary; PAD and UNK
  /// decode to '_' and 'X'.
  char residue_of(TokenId id) const;

  /// JSON array of {"token", "id"} objects.
  std::string to_json() const;

 private:
  std::array<TokenId, 256> lookup_{};
};

const Vocabulary& build_vocabulary();

/// Throws MalformedInput on control characters.
std::vector<TokenId> encode_residues(std::string_view sequence, const Vocabulary& vocab = build_vocabulary());
std::string decode_residues(std::span<const TokenId> ids, const Vocabulary& vocab = build_vocabulary());

std::vector<std::int32_t> encode_labels(std::span<const SsClass> labels);
/// Throws MalformedInput for anything outside {0, 1, 2}.
std::vector<SsClass> decode_labels(std::span<const std::int32_t> ids);

}  // namespace pssp
