#include "pssp/tokenizer.hpp"

#include <cctype>

#include <json.hpp>

#include "pssp/error.hpp"

namespace pssp {

Vocabulary::Vocabulary() {
  lookup_.fill(kUnk);
  for (std::size_t i = 0; i < kCanonical.size(); ++i) {
    const auto upper = static_cast<unsigned char>(kCanonical[i]);
    lookup_[upper] = static_cast<TokenId>(i + 2);
    lookup_[static_cast<unsigned char>(std::tolower(upper))] = static_cast<TokenId>(i + 2);
  }
}

TokenId Vocabulary::token_of(char residue) const noexcept { return lookup_[static_cast<unsigned char>(residue)]; }

char Vocabulary::residue_of(TokenId id) const {
  if (id == kPad) return '_';
  if (id == kUnk) return 'X';
  if (id < 2 || static_cast<std::size_t>(id) >= size()) {
    throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(id) + " is outside the vocabulary");
  }
  return kCanonical[static_cast<std::size_t>(id - 2)];
}

std::string Vocabulary::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  arr.push_back({{"token", "<PAD>"}, {"id", kPad}});
  arr.push_back({{"token", "<UNK>"}, {"id", kUnk}});
  for (std::size_t i = 0; i < kCanonical.size(); ++i) {
    arr.push_back({{"token", std::string(1, kCanonical[i])}, {"id", static_cast<TokenId>(i + 2)}});
  }
  return arr.dump(2) + "\n";
}

const Vocabulary& build_vocabulary() {
  static const Vocabulary vocab;
  return vocab;
}

std::vector<TokenId> encode_residues(std::string_view sequence, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(sequence.size());
  for (char c : sequence) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u == 0x7f) {
      throw Error(ErrorKind::MalformedInput, "control character in residue sequence");
    }
    ids.push_back(vocab.token_of(c));
  }
  return ids;
}

std::string decode_residues(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(vocab.residue_of(id));
  return out;
}

std::vector<std::int32_t> encode_labels(std::span<const SsClass> labels) {
  std::vector<std::int32_t> ids;
  ids.reserve(labels.size());
  for (auto c : labels) ids.push_back(index_of(c));
  return ids;
}

std::vector<SsClass> decode_labels(std::span<const std::int32_t> ids) {
  std::vector<SsClass> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    if (id < 0 || id >= static_cast<std::int32_t>(kNumClasses)) {
      throw Error(ErrorKind::MalformedInput, "class index " + std::to_string(id) + " is not H, C or E");
    }
    out.push_back(static_cast<SsClass>(id));
  }
  return out;
}

}  // namespace pssp
