#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pssp/error.hpp"
#include "pssp/evaluation.hpp"
#include "pssp/random.hpp"
#include "pssp/render.hpp"
#include "synthetic.hpp"

namespace pssp::eval {
namespace {

namespace fs = std::filesystem;

ConfusionMatrix from_rows(std::array<std::array<std::uint64_t, 3>, 3> rows) {
  ConfusionMatrix cm;
  cm.counts = rows;
  return cm;
}

// Expands a matrix into (truth, pred) pairs and recomputes every metric from
// the pair list, without looking at the matrix again.
struct Recount {
  double accuracy;
  std::array<double, 3> precision, recall, f1;
  std::array<double, 3> support;
  double macro_p, macro_r, macro_f1, weighted_p, weighted_r, weighted_f1;
};

Recount recount(const ConfusionMatrix& cm) {
  std::vector<std::pair<int, int>> pairs;
  for (int t = 0; t < 3; ++t) {
    for (int p = 0; p < 3; ++p) {
      for (std::uint64_t n = 0; n < cm.counts[t][p]; ++n) pairs.emplace_back(t, p);
    }
  }
  Recount r{};
  double hits = 0;
  for (auto [t, p] : pairs) hits += t == p;
  r.accuracy = hits / static_cast<double>(pairs.size());
  for (int c = 0; c < 3; ++c) {
    double tp = 0, pred = 0, truth = 0;
    for (auto [t, p] : pairs) {
      tp += t == c && p == c;
      pred += p == c;
      truth += t == c;
    }
    r.precision[c] = pred > 0 ? tp / pred : 0.0;
    r.recall[c] = truth > 0 ? tp / truth : 0.0;
    const double s = r.precision[c] + r.recall[c];
    r.f1[c] = s > 0 ? 2 * r.precision[c] * r.recall[c] / s : 0.0;
    r.support[c] = truth;
  }
  const double n = static_cast<double>(pairs.size());
  for (int c = 0; c < 3; ++c) {
    r.macro_p += r.precision[c] / 3;
    r.macro_r += r.recall[c] / 3;
    r.macro_f1 += r.f1[c] / 3;
    r.weighted_p += r.precision[c] * r.support[c] / n;
    r.weighted_r += r.recall[c] * r.support[c] / n;
    r.weighted_f1 += r.f1[c] * r.support[c] / n;
  }
  return r;
}

void parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
  EXPECT_EQ(tree.count("svg"), 1u);
}

TEST(Confusion, Examples) {
  const std::vector<std::int32_t> labels{0, 1, 2, 2, 1};
  const auto diag = confusion(labels, labels);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) {
        EXPECT_EQ(diag.counts[i][j], 0u);
      }
    }
  }
  EXPECT_EQ(diag.trace(), 5u);
  const auto one = confusion(std::vector<std::int32_t>{2}, std::vector<std::int32_t>{0});
  EXPECT_EQ(one.counts[0][2], 1u);
  EXPECT_EQ(one.total(), 1u);
}

TEST(Confusion, MaskAndErrors) {
  const std::vector<std::int32_t> preds{0, 1, 2}, truth{0, -1, 1};
  const std::vector<std::uint8_t> mask{1, 0, 1};
  const auto cm = confusion(preds, truth, mask);
  EXPECT_EQ(cm.total(), 2u);
  EXPECT_EQ(cm.counts[1][2], 1u);
  try {
    confusion(preds, std::vector<std::int32_t>{0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
  EXPECT_THROW(confusion(preds, truth), Error);
}

TEST(Confusion, MatchesBruteForceRecount) {
  Rng rng(derive_seed(1, "confusion"));
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = uniform_index(rng, 200);
    std::vector<std::int32_t> p(n), y(n);
    std::vector<std::uint8_t> m(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<std::int32_t>(uniform_index(rng, 3));
      y[i] = static_cast<std::int32_t>(uniform_index(rng, 3));
      m[i] = uniform_unit(rng) < 0.8;
    }
    const auto cm = confusion(p, y, m);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        std::uint64_t k = 0;
        for (std::size_t i = 0; i < n; ++i) k += m[i] && y[i] == a && p[i] == b;
        EXPECT_EQ(cm.counts[a][b], k);
      }
    }
  }
}

TEST(Report, PerfectMatrix) {
  const auto r = report(from_rows({{{5, 0, 0}, {0, 5, 0}, {0, 0, 5}}}));
  EXPECT_EQ(r.accuracy, 1.0);
  for (const auto& c : r.per_class) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
  }
  const auto s = accuracy_recall_f1_summary(r);
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.f1, 1.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Report, HandExample) {
  const auto r = report(from_rows({{{2, 1, 0}, {0, 3, 0}, {1, 0, 3}}}));
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(r.per_class[1].precision, 0.75);
  EXPECT_DOUBLE_EQ(r.per_class[2].recall, 0.75);
  EXPECT_EQ(r.per_class[1].support, 3u);
}

TEST(Report, ZeroDenominatorsWarn) {
  const auto r = report(from_rows({{{4, 1, 0}, {2, 3, 0}, {0, 0, 0}}}));
  EXPECT_EQ(r.per_class[2].precision, 0.0);
  EXPECT_EQ(r.per_class[2].recall, 0.0);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings.front().find('E'), std::string::npos);
  try {
    report(ConfusionMatrix{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyMatrix);
  }
}

TEST(Report, MatchesIndependentRecomputation) {
  Rng rng(derive_seed(2, "report"));
  for (int t = 0; t < 100; ++t) {
    ConfusionMatrix cm;
    for (auto& row : cm.counts) {
      for (auto& v : row) v = uniform_unit(rng) < 0.15 ? 0 : uniform_index(rng, 60);
    }
    if (cm.total() == 0) cm.counts[0][0] = 1;
    const auto r = report(cm);
    const auto o = recount(cm);
    EXPECT_EQ(r.accuracy, o.accuracy);
    EXPECT_EQ(r.accuracy, static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(r.per_class[c].precision, o.precision[c]);
      EXPECT_EQ(r.per_class[c].recall, o.recall[c]);
      EXPECT_NEAR(r.per_class[c].f1, o.f1[c], 1e-12);
      EXPECT_EQ(static_cast<double>(r.per_class[c].support), o.support[c]);
      EXPECT_EQ(r.per_class[c].support, cm.row_sum(c));
      for (double m : {r.per_class[c].precision, r.per_class[c].recall, r.per_class[c].f1}) {
        EXPECT_GE(m, 0.0);
        EXPECT_LE(m, 1.0);
      }
    }
    EXPECT_NEAR(r.macro_avg.precision, o.macro_p, 1e-12);
    EXPECT_NEAR(r.macro_avg.recall, o.macro_r, 1e-12);
    EXPECT_NEAR(r.macro_avg.f1, o.macro_f1, 1e-12);
    EXPECT_NEAR(r.weighted_avg.precision, o.weighted_p, 1e-12);
    EXPECT_NEAR(r.weighted_avg.recall, o.weighted_r, 1e-12);
    EXPECT_NEAR(r.weighted_avg.f1, o.weighted_f1, 1e-12);
    EXPECT_NEAR(r.weighted_avg.recall, r.accuracy, 1e-12);
    const auto s = accuracy_recall_f1_summary(r);
    EXPECT_EQ(s.accuracy, r.accuracy);
    EXPECT_EQ(s.recall, r.weighted_avg.recall);
    EXPECT_EQ(s.f1, r.weighted_avg.f1);
  }
}

TEST(Report, InvariantToPairOrder) {
  Rng rng(derive_seed(3, "perm"));
  std::vector<std::int32_t> p(300), y(300);
  for (std::size_t i = 0; i < 300; ++i) {
    p[i] = static_cast<std::int32_t>(uniform_index(rng, 3));
    y[i] = static_cast<std::int32_t>(uniform_index(rng, 3));
  }
  const auto base = report(confusion(p, y));
  std::vector<std::size_t> order(300);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);
  std::vector<std::int32_t> p2(300), y2(300);
  for (std::size_t i = 0; i < 300; ++i) {
    p2[i] = p[order[i]];
    y2[i] = y[order[i]];
  }
  const auto perm = report(confusion(p2, y2));
  EXPECT_EQ(perm.confusion, base.confusion);
  EXPECT_EQ(perm.accuracy, base.accuracy);
  EXPECT_EQ(perm.weighted_avg.f1, base.weighted_avg.f1);
}

TEST(ReportFiles, JsonAndCsvAgree) {
  const auto dir = fs::temp_directory_path() / "pssp_eval_files";
  fs::remove_all(dir);
  const auto r = report(from_rows({{{20, 3, 1}, {4, 30, 2}, {0, 5, 9}}}));
  render::write_eval_outputs(dir, r);
  std::ifstream js(dir / "report.json");
  const auto j = nlohmann::json::parse(js);
  std::ifstream csv(dir / "confusion.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "true\\pred,H,C,E");
  std::uint64_t trace = 0, total = 0;
  for (int row = 0; row < 3; ++row) {
    std::getline(csv, line);
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    EXPECT_EQ(cell, std::string(1, "HCE"[row]));
    for (int col = 0; col < 3; ++col) {
      std::getline(ss, cell, ',');
      const auto v = std::stoull(cell);
      total += v;
      if (col == row) trace += v;
    }
  }
  EXPECT_EQ(j.at("accuracy").get<double>(), static_cast<double>(trace) / static_cast<double>(total));
  parse_svg(render::confusion_heatmap_svg(r.confusion, "confusion"));
  EXPECT_TRUE(fs::exists(dir / "confusion_heatmap.svg"));
  fs::remove_all(dir);
}

TEST(Render, SvgIsWellFormed) {
  parse_svg(render::bar_chart_svg({"lengths <& \"quotes\">", "length", {{"a", 3}, {"b<", 0}, {"c", 7.5}}}));
  parse_svg(render::bar_chart_svg({"empty", "x", {}}));
  parse_svg(render::line_chart_svg({"acc", "epoch", "accuracy", {{"train", {0.5, 0.7, 0.8}}, {"val", {0.4}}}}));
  parse_svg(render::line_chart_svg({"flat", "epoch", "loss", {{"train", {1.0, 1.0}}}}));
  parse_svg(render::confusion_heatmap_svg(ConfusionMatrix{}, "zeros"));
}

TEST(Render, AlignmentMarks) {
  const std::string seq = "ACDEFGHIKL", truth = "HHHCCCEEEC";
  EXPECT_EQ(render::count_mismatch_marks(render::alignment_view("p", seq, truth, truth)), 0u);
  const std::string pred = "HHECCCEEHC";
  const auto view = render::alignment_view("p", seq, truth, pred, 4);
  EXPECT_EQ(render::count_mismatch_marks(view), 2u);
  EXPECT_THROW(render::alignment_view("p", seq, truth, "HH"), Error);
}

TEST(Render, EdaOutputsOnePerDistinctKey) {
  const auto dir = fs::temp_directory_path() / "pssp_render_eda";
  fs::remove_all(dir);
  const auto eda = compute_eda(testing::synthetic_proteins(10, 5, 30, 2));
  render::write_eda_outputs(dir, eda);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    ++files;
    if (entry.path().extension() == ".svg") {
      std::ifstream in(entry.path());
      parse_svg(std::string(std::istreambuf_iterator<char>(in), {}));
    }
  }
  EXPECT_EQ(files, 6u);
  fs::remove_all(dir);
}

TEST(Render, UnwritableDirectoryIsIoFailure) {
  try {
    render::write_text_file("/proc/pssp/definitely/not/here.txt", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoFailure);
  }
}

}  // namespace
}  // namespace pssp::eval
