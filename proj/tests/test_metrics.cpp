#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "polyp/metrics.hpp"
#include "polyp/rng.hpp"
#include "test_support.hpp"

using namespace polyp;

namespace {

const std::vector<std::string> six = {"NORM", "HP", "TA.HG", "TA.LG", "TVA.HG", "TVA.LG"};

// Independent reference: recompute every statistic from a flat pair list with
// plain counting, no ConfusionMatrix involved.
struct PairStats {
  std::vector<std::vector<long>> counts;
  std::vector<double> recalls;
  double ba;
};

PairStats brute_force(std::size_t k, const std::vector<std::pair<int, int>>& pairs) {
  PairStats s;
  s.counts.assign(k, std::vector<long>(k, 0));
  for (auto [t, p] : pairs) s.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]++;
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    long support = 0;
    for (long c : s.counts[i]) support += c;
    s.recalls.push_back(static_cast<double>(s.counts[i][i]) / static_cast<double>(support));
    acc += s.recalls.back();
  }
  s.ba = acc / static_cast<double>(k);
  return s;
}

}  // namespace

TEST_CASE("confusion counts and balanced accuracy match a counting oracle") {
  Rng rng(501);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t k = rng.irange(2, 6);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back("c" + std::to_string(i));
    ConfusionMatrix cm(names);

    std::vector<std::pair<int, int>> pairs;
    // guarantee support everywhere, then add noise
    for (std::size_t i = 0; i < k; ++i) pairs.emplace_back(static_cast<int>(i), static_cast<int>(i));
    long n = static_cast<long>(rng.irange(10, 1000));
    for (long i = 0; i < n; ++i)
      pairs.emplace_back(static_cast<int>(rng.below(k)), static_cast<int>(rng.below(k)));
    for (auto [t, p] : pairs)
      cm.add(static_cast<std::size_t>(t), static_cast<std::size_t>(p));

    auto ref = brute_force(k, pairs);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        REQUIRE(cm.at(i, j) == ref.counts[i][j]);
    REQUIRE(cm.total() == static_cast<long>(pairs.size()));
    auto recalls = per_class_recall(cm);
    for (std::size_t i = 0; i < k; ++i)
      REQUIRE(recalls[i] == Catch::Approx(ref.recalls[i]).epsilon(1e-12));
    REQUIRE(balanced_accuracy(cm) == Catch::Approx(ref.ba).epsilon(1e-12));
  }
}

TEST_CASE("one-vs-rest matches pooled binary counting") {
  Rng rng(502);
  for (int trial = 0; trial < 30; ++trial) {
    ConfusionMatrix cm(six);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < 6; ++i) pairs.emplace_back(i, i);
    for (int i = 0; i < 400; ++i)
      pairs.emplace_back(static_cast<int>(rng.below(6)), static_cast<int>(rng.below(6)));
    for (auto [t, p] : pairs)
      cm.add(static_cast<std::size_t>(t), static_cast<std::size_t>(p));

    std::size_t pos = rng.below(6);
    long tp = 0, fn = 0, fp = 0, tn = 0;
    for (auto [t, p] : pairs) {
      bool t_pos = static_cast<std::size_t>(t) == pos;
      bool p_pos = static_cast<std::size_t>(p) == pos;
      if (t_pos && p_pos) ++tp;
      if (t_pos && !p_pos) ++fn;
      if (!t_pos && p_pos) ++fp;
      if (!t_pos && !p_pos) ++tn;
    }
    auto s = one_vs_rest(cm, pos);
    REQUIRE(s.sensitivity == Catch::Approx(double(tp) / double(tp + fn)).epsilon(1e-12));
    REQUIRE(s.specificity == Catch::Approx(double(tn) / double(tn + fp)).epsilon(1e-12));
    REQUIRE(s.balanced_accuracy ==
            Catch::Approx((s.sensitivity + s.specificity) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("published hyperplastic one-vs-rest figures are reproduced") {
  // Binary matrix built to give sensitivity 0.86 and specificity 0.93 exactly.
  ConfusionMatrix cm({"HP", "rest"});
  cm.add(std::size_t{0}, std::size_t{0}, 86);
  cm.add(std::size_t{0}, std::size_t{1}, 14);
  cm.add(std::size_t{1}, std::size_t{1}, 93);
  cm.add(std::size_t{1}, std::size_t{0}, 7);
  auto s = one_vs_rest(cm, std::size_t{0});
  CHECK(s.sensitivity == 0.86);
  CHECK(s.specificity == 0.93);
  CHECK(std::abs(s.balanced_accuracy - 0.89) <= 0.005 + 1e-12);
  CHECK(s.balanced_accuracy == 0.895);
}

TEST_CASE("collapse onto histotypes merges grades") {
  ConfusionMatrix cm(six);
  // one deliberate entry per interesting merge direction
  cm.add(cm.index_of("TA.HG"), cm.index_of("TA.LG"), 5);   // same type, cross grade
  cm.add(cm.index_of("TA.LG"), cm.index_of("TA.LG"), 7);   // diagonal
  cm.add(cm.index_of("TVA.HG"), cm.index_of("TA.HG"), 3);  // cross type
  cm.add(cm.index_of("NORM"), cm.index_of("HP"), 2);
  cm.add(cm.index_of("HP"), cm.index_of("HP"), 9);
  cm.add(cm.index_of("TVA.LG"), cm.index_of("TVA.HG"), 4);

  auto t = collapse_to_type(cm);
  REQUIRE(t.classes() == std::vector<std::string>{"HP", "NORM", "TA", "TVA"});
  CHECK(t.total() == cm.total());
  CHECK(t.at(t.index_of("TA"), t.index_of("TA")) == 12);    // 5 + 7 both land inside TA
  CHECK(t.at(t.index_of("TVA"), t.index_of("TA")) == 3);
  CHECK(t.at(t.index_of("NORM"), t.index_of("HP")) == 2);
  CHECK(t.at(t.index_of("HP"), t.index_of("HP")) == 9);
  CHECK(t.at(t.index_of("TVA"), t.index_of("TVA")) == 4);
  CHECK(t.at(t.index_of("TA"), t.index_of("TVA")) == 0);

  // collapsing a perfect six-way matrix keeps balanced accuracy at 1
  ConfusionMatrix perfect(six);
  for (std::size_t i = 0; i < 6; ++i) perfect.add(i, i, 3);
  CHECK(balanced_accuracy(collapse_to_type(perfect)) == 1.0);
}

TEST_CASE("degenerate matrices are rejected") {
  CHECK_THROWS_AS(ConfusionMatrix({"only"}), std::invalid_argument);
  CHECK_THROWS_AS(ConfusionMatrix({"a", "a"}), std::invalid_argument);

  ConfusionMatrix cm({"a", "b"});
  cm.add(std::size_t{0}, std::size_t{0}, 4);
  CHECK_THROWS_WITH(balanced_accuracy(cm), Catch::Matchers::ContainsSubstring("b"));
  CHECK_THROWS_AS(one_vs_rest(cm, std::size_t{1}), data_error);
  CHECK_THROWS_AS(cm.index_of("c"), data_error);
  CHECK_THROWS_AS(cm.add(std::size_t{2}, std::size_t{0}), std::invalid_argument);
}

TEST_CASE("presentation rounding is two decimals, ties up") {
  CHECK(format_2dp(0.125) == "0.13");   // exact binary tie rounds up
  CHECK(format_2dp(0.875) == "0.88");
  CHECK(format_2dp(0.86) == "0.86");
  CHECK(format_2dp(1.0) == "1.00");
  CHECK(format_2dp(0.0) == "0.00");
  CHECK(format_2dp(0.004999) == "0.00");
  CHECK(format_2dp(0.995) == "1.00");
}

TEST_CASE("json report carries full precision and matching counts") {
  ConfusionMatrix cm({"a", "b", "c"});
  cm.add(std::size_t{0}, std::size_t{0}, 3);
  cm.add(std::size_t{0}, std::size_t{1}, 1);
  cm.add(std::size_t{1}, std::size_t{1}, 5);
  cm.add(std::size_t{2}, std::size_t{0}, 2);
  cm.add(std::size_t{2}, std::size_t{2}, 6);

  auto j = metrics_json(cm);
  CHECK(j["classes"].get<std::vector<std::string>>() == cm.classes());
  CHECK(j["counts"][0][0].get<long>() == 3);
  CHECK(j["counts"][2][0].get<long>() == 2);
  CHECK(j["total"].get<long>() == 17);
  CHECK(j["balanced_accuracy"].get<double>() == balanced_accuracy(cm));
  CHECK(j["per_class"]["b"]["sensitivity"].get<double>() == 1.0);

  // serialized text parses back to the identical double
  auto text = j.dump();
  auto back = nlohmann::json::parse(text);
  CHECK(back["balanced_accuracy"].get<double>() == balanced_accuracy(cm));
}

TEST_CASE("text report aligns and includes every class") {
  ConfusionMatrix cm(six);
  for (std::size_t i = 0; i < 6; ++i) cm.add(i, i, 10);
  cm.add(std::size_t{1}, std::size_t{0}, 12345);
  auto text = format_report(cm);
  for (const auto& c : six) CHECK(text.find(c) != std::string::npos);
  CHECK(text.find("12345") != std::string::npos);
  CHECK(text.find("balanced accuracy: ") != std::string::npos);
  // every line of the matrix block has the same width
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  REQUIRE(lines.size() > 7);
  for (int i = 1; i <= 6; ++i) CHECK(lines[static_cast<std::size_t>(i)].size() == lines[0].size());
}

TEST_CASE("heat map output is deterministic and sized to the grid") {
  auto dir = testutil::scratch_dir("heatmap");
  ConfusionMatrix cm({"a", "b", "c"});
  cm.add(std::size_t{0}, std::size_t{0}, 8);
  cm.add(std::size_t{1}, std::size_t{2}, 2);
  cm.add(std::size_t{2}, std::size_t{2}, 4);

  auto p1 = (dir / "h1.png").string();
  auto p2 = (dir / "h2.png").string();
  write_heatmap_png(cm, p1, 10);
  write_heatmap_png(cm, p2, 10);

  auto img = read_png(p1);
  CHECK(img.width == 3 * 10 + 4);
  CHECK(img.height == 3 * 10 + 4);
  // largest count is fully saturated, empty cell stays white, grid line grey
  CHECK(static_cast<int>(img.at(5, 5, 0)) == 8);
  CHECK(static_cast<int>(img.at(5, 5, 2)) == 107);
  CHECK(static_cast<int>(img.at(16, 5, 0)) == 255);
  CHECK(static_cast<int>(img.at(0, 0, 0)) == 180);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}
