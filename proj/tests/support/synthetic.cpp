#include "synthetic.hpp"

#include <sstream>
#include <string_view>

#include "pssp/random.hpp"

namespace pssp::testing {
namespace {

constexpr std::string_view kAll = "ACDEFGHIKLMNPQRSTVWY";
constexpr std::string_view kHelixFavoured = "AELMQKR";
constexpr std::string_view kSheetFavoured = "VIYFWT";
constexpr std::string_view kCoilFavoured = "GPNDS";

char draw_residue(SsClass c, Rng& rng) {
  if (uniform_unit(rng) < 0.004) return 'X';
  if (uniform_unit(rng) < 0.65) {
    const auto pool = c == SsClass::H ? kHelixFavoured : c == SsClass::E ? kSheetFavoured : kCoilFavoured;
    return pool[uniform_index(rng, pool.size())];
  }
  return kAll[uniform_index(rng, kAll.size())];
}

}  // namespace

std::vector<ProteinRecord> synthetic_proteins(std::size_t count, std::size_t min_len, std::size_t max_len,
                                              std::uint64_t seed) {
  Rng rng(derive_seed(seed, "synthetic"));
  std::vector<ProteinRecord> out;
  out.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    ProteinRecord r;
    r.id = "syn" + std::to_string(p);
    const auto len = min_len + uniform_index(rng, max_len - min_len + 1);
    SsClass state = SsClass::C;
    while (r.residues.size() < len) {
      std::size_t run = 0;
      switch (state) {
        case SsClass::H: run = 6 + uniform_index(rng, 13); break;
        case SsClass::E: run = 3 + uniform_index(rng, 7); break;
        case SsClass::C: run = 2 + uniform_index(rng, 9); break;
      }
      for (std::size_t i = 0; i < run && r.residues.size() < len; ++i) {
        r.residues.push_back(draw_residue(state, rng));
        r.labels.push_back(state);
      }
      if (state == SsClass::C) {
        state = uniform_unit(rng) < 0.55 ? SsClass::H : SsClass::E;
      } else {
        state = SsClass::C;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string to_cb3(const std::vector<ProteinRecord>& records, bool expand_stride, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "stride"));
  std::ostringstream s;
  for (const auto& r : records) {
    s << '>' << r.id << '\n' << r.residues << '\n';
    for (auto c : r.labels) {
      if (!expand_stride) {
        s << to_char(c);
        continue;
      }
      const std::string_view pool = c == SsClass::H ? "HGI" : c == SsClass::E ? "EBb" : "CTS-";
      s << pool[uniform_index(rng, pool.size())];
    }
    s << '\n';
  }
  return s.str();
}

}  // namespace pssp::testing
