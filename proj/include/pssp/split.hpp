#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pssp/augment.hpp"

namespace pssp {

enum class SplitMode {
  WindowLevel,   // windows shuffled independently
  ProteinLevel,  // all windows of a protein land on the same side
};

std::string to_string(SplitMode mode);
SplitMode split_mode_from_string(const std::string& text);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Deterministic partition of `items` indices. WindowLevel puts
/// round(fraction * N) windows in train; ProteinLevel puts
/// round(fraction * P) of the P distinct proteins in train. Both sides are
/// returned in ascending index order. Throws DegenerateSplit if a side is
/// empty.
SplitIndices split_indices(std::span<const WindowSample> items, double fraction, std::uint64_t seed,
                           SplitMode mode = SplitMode::WindowLevel);

struct Split {
  std::vector<WindowSample> train;
  std::vector<WindowSample> val;
};

Split split_train_val(std::span<const WindowSample> items, double fraction = 0.8, std::uint64_t seed = 42,
                      SplitMode mode = SplitMode::WindowLevel);

}  // namespace pssp
