#include "pssp/split.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "pssp/error.hpp"
#include "pssp/random.hpp"

namespace pssp {

std::string to_string(SplitMode mode) { return mode == SplitMode::WindowLevel ? "window" : "protein"; }

SplitMode split_mode_from_string(const std::string& text) {
  if (text == "window") return SplitMode::WindowLevel;
  if (text == "protein") return SplitMode::ProteinLevel;
  throw Error(ErrorKind::InvalidConfig, "split mode must be 'window' or 'protein', got '" + text + "'");
}

SplitIndices split_indices(std::span<const WindowSample> items, double fraction, std::uint64_t seed, SplitMode mode) {
  if (items.empty()) throw Error(ErrorKind::DegenerateSplit, "cannot split an empty sample list");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "split fraction must lie strictly between 0 and 1");
  }
  Rng rng(derive_seed(seed, "split"));
  SplitIndices out;

  if (mode == SplitMode::WindowLevel) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(items.size())));
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, order.size())));
    out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, order.size())), order.end());
  } else {
    // Proteins in order of first appearance, then shuffled as units.
    std::unordered_map<std::string, std::size_t> group_of;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto [it, inserted] = group_of.try_emplace(items[i].source_id, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
    std::vector<std::size_t> order(groups.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
    shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(groups.size())));
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& side = k < n_train ? out.train : out.val;
      const auto& members = groups[order[k]];
      side.insert(side.end(), members.begin(), members.end());
    }
  }

  if (out.train.empty() || out.val.empty()) {
    throw Error(ErrorKind::DegenerateSplit, "split leaves " + std::to_string(out.train.size()) + " training and " +
                                                std::to_string(out.val.size()) + " validation samples");
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

Split split_train_val(std::span<const WindowSample> items, double fraction, std::uint64_t seed, SplitMode mode) {
  const auto idx = split_indices(items, fraction, seed, mode);
  Split out;
  out.train.reserve(idx.train.size());
  out.val.reserve(idx.val.size());
  for (auto i : idx.train) out.train.push_back(items[i]);
  for (auto i : idx.val) out.val.push_back(items[i]);
  return out;
}

}  // namespace pssp
