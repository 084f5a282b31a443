#include <gtest/gtest.h>

#include <sstream>

#include "pssp/augment.hpp"
#include "pssp/error.hpp"
#include "pssp/random.hpp"
#include "synthetic.hpp"

namespace pssp {
namespace {

ProteinRecord make_record(std::string id, std::size_t len, std::uint64_t seed = 1) {
  auto recs = testing::synthetic_proteins(1, len, len, seed);
  recs[0].id = std::move(id);
  return recs[0];
}

// Materialises windows by hand: every start offset the rules allow.
std::size_t brute_force_count(const std::vector<ProteinRecord>& recs, std::size_t w, std::size_t s,
                              ShortPolicy policy) {
  std::size_t n = 0;
  for (const auto& r : recs) {
    if (r.size() < w) {
      n += policy == ShortPolicy::PadTail ? 1 : 0;
      continue;
    }
    for (std::size_t off = 0; off + w <= r.size(); off += s) ++n;
  }
  return n;
}

std::vector<ClassProbs> one_hot(const WindowSample& w) {
  std::vector<ClassProbs> rows(w.size(), ClassProbs{0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.mask[i]) rows[i][static_cast<std::size_t>(w.labels[i])] = 1.0;
  }
  return rows;
}

TEST(SlidingWindows, LongRecordWindowCount) {
  const auto r = make_record("a", 20);
  const auto ws = sliding_windows(r, 15, 1);
  ASSERT_EQ(ws.size(), 6u);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    EXPECT_EQ(ws[i].offset, i);
    EXPECT_EQ(ws[i].valid_count(), 15u);
    EXPECT_EQ(ws[i].tokens, encode_residues(r.residues.substr(i, 15)));
  }
}

TEST(SlidingWindows, ExactLengthGivesOneWindow) {
  EXPECT_EQ(sliding_windows(make_record("a", 15), 15, 1).size(), 1u);
}

TEST(SlidingWindows, ShortRecordPadsTail) {
  const auto r = make_record("s", 10);
  const auto ws = sliding_windows(r, 15, 1, ShortPolicy::PadTail);
  ASSERT_EQ(ws.size(), 1u);
  const auto& w = ws[0];
  EXPECT_EQ(w.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) {
    if (i < 10) {
      EXPECT_EQ(w.mask[i], 1);
      EXPECT_EQ(w.labels[i], index_of(r.labels[i]));
    } else {
      EXPECT_EQ(w.mask[i], 0);
      EXPECT_EQ(w.tokens[i], Vocabulary::kPad);
      EXPECT_EQ(w.labels[i], kIgnoreLabel);
    }
  }
  EXPECT_TRUE(sliding_windows(r, 15, 1, ShortPolicy::Skip).empty());
}

TEST(SlidingWindows, ZeroWindowOrStrideIsInvalid) {
  const auto r = make_record("a", 5);
  EXPECT_THROW(sliding_windows(r, 0, 1), Error);
  EXPECT_THROW(sliding_windows(r, 3, 0), Error);
}

TEST(SlidingWindows, ConsecutiveWindowsShareAllButOne) {
  const auto r = make_record("a", 60, 4);
  const auto ws = sliding_windows(r, 15, 1);
  for (std::size_t i = 1; i < ws.size(); ++i) {
    EXPECT_TRUE(std::equal(ws[i - 1].tokens.begin() + 1, ws[i - 1].tokens.end(), ws[i].tokens.begin()));
    EXPECT_EQ(ws[i].offset - ws[i - 1].offset, 1u);
  }
}

TEST(CountWindows, ArithmeticExample) {
  const std::vector<ProteinRecord> recs{make_record("a", 20), make_record("b", 15), make_record("c", 10)};
  EXPECT_EQ(count_windows(recs, 15, 1, ShortPolicy::PadTail), 8u);
  EXPECT_EQ(count_windows(recs, 15, 1, ShortPolicy::Skip), 7u);
}

TEST(CountWindows, MatchesMaterialisationOracle) {
  Rng rng(derive_seed(11, "count"));
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    const auto recs = testing::synthetic_proteins(1 + uniform_index(rng, 12), 1, 90, trial);
    const std::size_t w = 1 + uniform_index(rng, 20);
    const std::size_t s = 1 + uniform_index(rng, 4);
    for (auto policy : {ShortPolicy::PadTail, ShortPolicy::Skip}) {
      const auto oracle = brute_force_count(recs, w, s, policy);
      EXPECT_EQ(count_windows(recs, w, s, policy), oracle);
      EXPECT_EQ(augment_records(recs, {w, s, policy}).size(), oracle);
    }
  }
}

TEST(CountWindows, WindowOneCountsResidues) {
  const auto recs = testing::synthetic_proteins(9, 1, 50, 2);
  std::size_t residues = 0;
  for (const auto& r : recs) residues += r.size();
  EXPECT_EQ(count_windows(recs, 1, 1), residues);
}

TEST(AugmentRecords, OrderedByRecordThenOffset) {
  const auto recs = testing::synthetic_proteins(30, 5, 40, 8);
  const auto ws = augment_records(recs);
  std::vector<WindowSample> serial;
  for (const auto& r : recs) {
    auto part = sliding_windows(r);
    serial.insert(serial.end(), part.begin(), part.end());
  }
  EXPECT_EQ(ws, serial);
}

TEST(AugmentRecords, PadTailCoversEveryResidue) {
  const auto recs = testing::synthetic_proteins(20, 1, 70, 6);
  for (const auto& r : recs) {
    std::vector<int> covered(r.size(), 0);
    for (const auto& w : sliding_windows(r)) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w.mask[i]) covered[w.offset + i] = 1;
      }
    }
    EXPECT_EQ(std::count(covered.begin(), covered.end(), 1), static_cast<long>(r.size()));
  }
}

TEST(ReconstructPredictions, SingleWindowIsArgmax) {
  const auto r = make_record("a", 4);
  auto ws = sliding_windows(r, 4, 1);
  std::vector<std::vector<ClassProbs>> probs{
      {{0.1, 0.7, 0.2}, {0.5, 0.3, 0.2}, {0.2, 0.2, 0.6}, {0.3, 0.3, 0.4}}};
  EXPECT_EQ(reconstruct_predictions(ws, probs, 4),
            (std::vector<SsClass>{SsClass::C, SsClass::H, SsClass::E, SsClass::E}));
}

TEST(ReconstructPredictions, TieGoesToLowerIndex) {
  const auto r = make_record("a", 3);
  auto ws = sliding_windows(r, 2, 1);
  ASSERT_EQ(ws.size(), 2u);
  // Position 1 is shared: (0.6,0.2,0.2) and (0.2,0.6,0.2) average to (0.4,0.4,0.2).
  std::vector<std::vector<ClassProbs>> probs{{{0.0, 0.0, 1.0}, {0.6, 0.2, 0.2}},
                                             {{0.2, 0.6, 0.2}, {0.0, 1.0, 0.0}}};
  const auto out = reconstruct_predictions(ws, probs, 3);
  EXPECT_EQ(out, (std::vector<SsClass>{SsClass::E, SsClass::H, SsClass::C}));
}

TEST(ReconstructPredictions, MatchesDirectMeanOracle) {
  Rng rng(derive_seed(3, "recon"));
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t len = 9 + uniform_index(rng, 10);
    const auto r = make_record("p", len, trial);
    const std::size_t w = 3 + uniform_index(rng, 5);
    const auto ws = sliding_windows(r, w, 1 + uniform_index(rng, 2));
    std::vector<std::vector<ClassProbs>> probs;
    for (const auto& win : ws) {
      std::vector<ClassProbs> rows(win.size());
      for (auto& row : rows) {
        double total = 0.0;
        for (auto& p : row) total += p = uniform_unit(rng);
        for (auto& p : row) p /= total;
      }
      probs.push_back(rows);
    }
    bool gap = false;
    std::vector<SsClass> expected(len);
    for (std::size_t pos = 0; pos < len; ++pos) {
      ClassProbs sum{0, 0, 0};
      int n = 0;
      for (std::size_t k = 0; k < ws.size(); ++k) {
        if (pos < ws[k].offset || pos >= ws[k].offset + w || !ws[k].mask[pos - ws[k].offset]) continue;
        for (int c = 0; c < 3; ++c) sum[c] += probs[k][pos - ws[k].offset][c];
        ++n;
      }
      if (n == 0) {
        gap = true;
        break;
      }
      int best = 0;
      for (int c = 1; c < 3; ++c) {
        if (sum[c] / n > sum[best] / n) best = c;
      }
      expected[pos] = static_cast<SsClass>(best);
    }
    if (gap) {
      EXPECT_THROW(reconstruct_predictions(ws, probs, len), Error);
    } else {
      EXPECT_EQ(reconstruct_predictions(ws, probs, len), expected);
    }
  }
}

TEST(ReconstructPredictions, OneHotRoundTrip) {
  const auto recs = testing::synthetic_proteins(100, 5, 200, 77);
  for (const auto& r : recs) {
    const auto ws = sliding_windows(r);
    std::vector<std::vector<ClassProbs>> probs;
    for (const auto& w : ws) probs.push_back(one_hot(w));
    EXPECT_EQ(reconstruct_predictions(ws, probs, r.size()), r.labels) << r.id;
  }
}

TEST(ReconstructPredictions, Errors) {
  const auto r = make_record("a", 10);
  auto ws = sliding_windows(r, 3, 3);  // offsets 0,3,6 leave position 9 uncovered
  std::vector<std::vector<ClassProbs>> probs;
  for (const auto& w : ws) probs.push_back(one_hot(w));
  try {
    reconstruct_predictions(ws, probs, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CoverageGap);
  }
  probs.pop_back();
  EXPECT_THROW(reconstruct_predictions(ws, probs, 9), Error);
  auto mixed = sliding_windows(r, 5, 5);
  mixed[1].source_id = "other";
  std::vector<std::vector<ClassProbs>> p2{one_hot(mixed[0]), one_hot(mixed[1])};
  EXPECT_THROW(reconstruct_predictions(mixed, p2, 10), Error);
}

TEST(WindowsCsv, RowPerWindow) {
  const auto recs = testing::synthetic_proteins(4, 10, 20, 1);
  const auto ws = augment_records(recs);
  std::ostringstream out;
  write_windows_csv(out, ws);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "source_id,offset,tokens,labels,mask");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, ws.size());
}

}  // namespace
}  // namespace pssp
