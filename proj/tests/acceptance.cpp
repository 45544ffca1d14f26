// Release gate for the cascade library. Each criterion prints exactly one
// [PASS]/[FAIL] line and the process exits nonzero if any criterion fails.
// This is a plain binary rather than a Catch2 suite so the verdict lines stay
// greppable and the slow end-to-end runs are timed as ordinary stopwatches.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "polyp/backbone.hpp"
#include "polyp/cascade.hpp"
#include "polyp/cli.hpp"
#include "polyp/geometry.hpp"
#include "polyp/image.hpp"
#include "polyp/labels.hpp"
#include "polyp/manifest.hpp"
#include "polyp/metrics.hpp"
#include "polyp/rng.hpp"
#include "polyp/split.hpp"
#include "polyp/synth.hpp"
#include "polyp/trainer.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

// Tolerances and the bar the trained cascade must clear, fixed here so a
// regression cannot silently loosen them.
constexpr double kMetricTol = 1e-12;
constexpr double kRoundTol = 5e-3;
constexpr double kRequiredMargin = 0.10;

// Published binary screening scores that the mean-of-recalls definition must
// reproduce up to rounding.
constexpr double kReportedBa = 0.89;
constexpr double kReportedSens = 0.86;
constexpr double kReportedSpec = 0.93;

// Training setup for the trained-cascade comparison. The baselines and all
// three stages share one optimizer profile so the margin cannot come from
// uneven treatment; epochs and crop budgets per job follow the observed
// convergence of each task. Momentum and batch size are configuration
// choices, needed here because these nets train from scratch.
constexpr double kLr0 = 0.003;
constexpr double kMomentum = 0.9;
constexpr long kBatchSize = 4;
constexpr long kDecayEvery = 24;
constexpr long kBaselineEpochs = 40;
constexpr long kHpEpochs = 25;
constexpr long kAdenomaEpochs = 50;
constexpr long kGradeEpochs = 60;
constexpr long kMaxCrops = 4;
constexpr long kGradeCrops = 8;

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

bool g_all_pass = true;

void report(int id, bool pass, const char* what, double secs) {
  std::printf("[%s] criterion %d: %s (%.2fs)\n", pass ? "PASS" : "FAIL", id, what, secs);
  std::fflush(stdout);
  if (!pass) g_all_pass = false;
}

void note(const std::string& line) {
  std::printf("        %s\n", line.c_str());
  std::fflush(stdout);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

// Deterministic probability scripts, replayed crop by crop.
class ScriptedBackbone : public polyp::Backbone {
 public:
  ScriptedBackbone(std::vector<std::string> cls, polyp::InputPolicy pol,
                   std::vector<std::vector<double>> script)
      : classes_(std::move(cls)), policy_(pol), script_(std::move(script)) {}

  const std::vector<std::string>& classes() const override { return classes_; }
  polyp::InputPolicy input_policy() const override { return policy_; }
  int min_side() const override { return 1; }
  std::vector<double> predict(const polyp::Image& img) const override {
    check_input(img);
    const auto& out = script_[static_cast<std::size_t>(calls_) % script_.size()];
    ++calls_;
    return out;
  }

 private:
  std::vector<std::string> classes_;
  polyp::InputPolicy policy_;
  std::vector<std::vector<double>> script_;
  mutable long calls_ = 0;
};

// Criterion 1: the micrometer-to-pixel rounding on the reference resolution.
void criterion1() {
  Stopwatch sw;
  bool ok = polyp::scale_to_pixels(800.0, 0.4415) == 1812 &&
            polyp::scale_to_pixels(7000.0, 0.4415) == 15855;
  double secs = sw.seconds();
  ok = ok && secs < 1.0;
  report(1, ok, "micrometer scales map to the exact pixel sides", secs);
}

// Criterion 2: the tile grid against a brute-force enumeration, then the
// full-size coarse patch decomposing into 64 disjoint in-bounds fine tiles.
void criterion2() {
  Stopwatch sw;
  polyp::Rng rng(0xACC2);
  bool ok = true;
  for (int t = 0; t < 500 && ok; ++t) {
    long w = 1 + static_cast<long>(rng.below(2500));
    long h = 1 + static_cast<long>(rng.below(2500));
    int s = 1 + static_cast<int>(rng.below(900));
    auto grid = polyp::tile_grid(w, h, s);
    std::vector<polyp::TileOrigin> brute;
    for (long y = 0; y + s <= h; y += s)
      for (long x = 0; x + s <= w; x += s) brute.push_back({x, y});
    ok = grid.count() == brute.size();
    for (std::size_t i = 0; ok && i < brute.size(); ++i)
      ok = grid.origins[i].x == brute[i].x && grid.origins[i].y == brute[i].y;
  }

  auto grid = polyp::tile_grid(15855, 15855, 1812);
  ok = ok && grid.count() == 64;
  for (std::size_t i = 0; ok && i < grid.count(); ++i) {
    const auto& a = grid.origins[i];
    ok = a.x >= 0 && a.y >= 0 && a.x + 1812 <= 15855 && a.y + 1812 <= 15855;
    for (std::size_t j = i + 1; ok && j < grid.count(); ++j) {
      const auto& b = grid.origins[j];
      ok = std::labs(a.x - b.x) >= 1812 || std::labs(a.y - b.y) >= 1812;
    }
  }
  double secs = sw.seconds();
  ok = ok && secs < 10.0;
  report(2, ok, "tile grids match brute-force enumeration and stay disjoint", secs);
}

// Criterion 3: metric arithmetic against independent recomputation, the type
// collapse against direct counting, and the published screening scores
// against the mean-of-recalls identity.
void criterion3() {
  Stopwatch sw;
  polyp::Rng rng(0xACC3);
  bool ok = true;
  for (int t = 0; t < 1000 && ok; ++t) {
    int k = 2 + static_cast<int>(rng.below(6));
    std::vector<std::string> names;
    for (int i = 0; i < k; ++i) names.push_back("c" + std::to_string(i));
    std::vector<std::vector<long>> raw(static_cast<std::size_t>(k),
                                       std::vector<long>(static_cast<std::size_t>(k), 0));
    for (int i = 0; i < k; ++i) {
      long row = 0;
      for (int j = 0; j < k; ++j) {
        raw[i][j] = static_cast<long>(rng.below(41));
        row += raw[i][j];
      }
      // every class needs support or recall is undefined
      if (row == 0) raw[i][i] = 1;
    }
    polyp::ConfusionMatrix cm(names);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (raw[i][j] > 0)
          cm.add(static_cast<std::size_t>(i), static_cast<std::size_t>(j), raw[i][j]);

    long total = 0;
    std::vector<long> row_sum(static_cast<std::size_t>(k), 0);
    std::vector<long> col_sum(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        row_sum[i] += raw[i][j];
        col_sum[j] += raw[i][j];
        total += raw[i][j];
      }

    double ba = 0.0;
    for (int i = 0; i < k; ++i)
      ba += static_cast<double>(raw[i][i]) / static_cast<double>(row_sum[i]);
    ba /= static_cast<double>(k);
    ok = std::abs(ba - polyp::balanced_accuracy(cm)) <= kMetricTol;

    for (int i = 0; ok && i < k; ++i) {
      long tp = raw[i][i];
      long fn = row_sum[i] - tp;
      long fp = col_sum[i] - tp;
      long tn = total - tp - fn - fp;
      double sens = static_cast<double>(tp) / static_cast<double>(tp + fn);
      double spec = static_cast<double>(tn) / static_cast<double>(tn + fp);
      auto s = polyp::one_vs_rest(cm, static_cast<std::size_t>(i));
      ok = std::abs(s.sensitivity - sens) <= kMetricTol &&
           std::abs(s.specificity - spec) <= kMetricTol &&
           std::abs(s.balanced_accuracy - 0.5 * (sens + spec)) <= kMetricTol;
    }

    // six-way matrix collapsed onto histotypes, against direct counting
    std::vector<std::string> six;
    for (auto l : polyp::all_labels) six.push_back(polyp::to_string(l));
    polyp::ConfusionMatrix cm6(six);
    std::vector<std::vector<long>> raw6(6, std::vector<long>(6, 0));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        raw6[i][j] = static_cast<long>(rng.below(23));
        if (raw6[i][j] > 0) cm6.add(i, j, raw6[i][j]);
      }
    auto collapsed = polyp::collapse_to_type(cm6);
    long expect[4][4] = {};
    for (std::size_t i = 0; ok && i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        auto ti = collapsed.index_of(polyp::to_string(polyp::type_of(polyp::all_labels[i])));
        auto tj = collapsed.index_of(polyp::to_string(polyp::type_of(polyp::all_labels[j])));
        expect[ti][tj] += raw6[i][j];
      }
    for (std::size_t i = 0; ok && i < 4; ++i)
      for (std::size_t j = 0; ok && j < 4; ++j) ok = collapsed.at(i, j) == expect[i][j];
  }

  // the identity lands exactly on the bound (0.895 rounds to 0.89 by half a
  // unit), so allow float dust on top of the rounding tolerance
  ok = ok && std::abs(kReportedBa - 0.5 * (kReportedSens + kReportedSpec)) <= kRoundTol + 1e-12;
  report(3, ok, "metric arithmetic matches independent oracles", sw.seconds());
}

// Criterion 4: the decision rules. Vote counting with a strict threshold,
// monotonicity of the high-grade count under a threshold sweep, and
// invariance of every aggregate under sub-patch order shuffling.
void criterion4() {
  Stopwatch sw;
  bool ok = true;

  auto hg_votes = [](int n_hg, int n_total) {
    std::vector<std::vector<double>> v;
    for (int i = 0; i < n_total; ++i)
      v.push_back(i < n_hg ? std::vector<double>{0.1, 0.9} : std::vector<double>{0.9, 0.1});
    return v;
  };
  auto grey = [](int side) { return polyp::Image::filled(side, side, 120, 120, 120); };

  // Toy geometry: at 50 um/px the fine side is 16 px, so a 128 px patch
  // carries 8x8 = 64 sub-patches and an 80 px patch carries 5x5 = 25.
  polyp::CascadeConfig c64;
  c64.sigma_fine = 800.0;
  c64.sigma_coarse = 6400.0;
  c64.mpp = 50.0;
  polyp::CascadeConfig c25 = c64;
  c25.sigma_coarse = 4000.0;

  ScriptedBackbone hp({"rest", "HP"}, polyp::InputPolicy::fixed_224, {{0.9, 0.1}});
  ScriptedBackbone adenoma({"NORM", "TA", "TVA"}, polyp::InputPolicy::fixed_224,
                           {{0.05, 0.9, 0.05}});

  {
    // 13 of 64 high-grade votes: 0.203 clears the 0.2 dysplasia threshold
    ScriptedBackbone grade({"LG", "HG"}, polyp::InputPolicy::variable_full_res, hg_votes(13, 64));
    auto r = polyp::classify_patch(grey(128), hp, adenoma, grade, c64);
    ok = ok && r.n_subpatches == 64 && r.final_label == polyp::PolypLabel::TA_HG &&
         r.hg_ratio.has_value() && std::abs(*r.hg_ratio - 13.0 / 64.0) <= kMetricTol;
  }
  {
    // 5 of 25 votes sit exactly on the threshold; the comparison is strict,
    // so the patch stays low grade
    ScriptedBackbone grade({"LG", "HG"}, polyp::InputPolicy::variable_full_res, hg_votes(5, 25));
    auto r = polyp::classify_patch(grey(80), hp, adenoma, grade, c25);
    ok = ok && r.n_subpatches == 25 && r.hg_ratio.has_value() && *r.hg_ratio == 0.2 &&
         r.final_label == polyp::PolypLabel::TA_LG;
  }
  {
    // sweep the dysplasia threshold over recorded runs with 0..25 votes: the
    // count of high-grade calls must never increase as the threshold rises
    std::vector<double> ratios;
    for (int v = 0; v <= 25; ++v) {
      ScriptedBackbone grade({"LG", "HG"}, polyp::InputPolicy::variable_full_res, hg_votes(v, 25));
      auto r = polyp::classify_patch(grey(80), hp, adenoma, grade, c25);
      ratios.push_back(r.hg_ratio.value_or(-1.0));
    }
    ok = ok && ratios.front() == 0.0 && ratios.back() == 1.0;
    long prev = static_cast<long>(ratios.size());
    for (int step = 0; step <= 100 && ok; ++step) {
      double t = static_cast<double>(step) / 100.0;
      long cnt = static_cast<long>(
          std::count_if(ratios.begin(), ratios.end(), [&](double x) { return x > t; }));
      ok = cnt <= prev;
      prev = cnt;
    }
  }
  {
    // the aggregation cores must be bitwise order-invariant
    polyp::Rng rng(0xACC4);
    std::vector<double> probs(64);
    for (auto& p : probs) p = rng.unit();
    const double mean0 = polyp::mean_probability(probs);
    const double ratio0 = polyp::high_grade_ratio(probs);
    std::vector<double> shuffled = probs;
    for (int t = 0; t < 100 && ok; ++t) {
      polyp::shuffle(shuffled, rng);
      ok = polyp::mean_probability(shuffled) == mean0 &&
           polyp::high_grade_ratio(shuffled) == ratio0;
    }
  }
  {
    // and end to end: permuting which sub-patch carries which vote never
    // changes the final label
    auto votes = hg_votes(7, 25);
    ScriptedBackbone grade0({"LG", "HG"}, polyp::InputPolicy::variable_full_res, votes);
    auto r0 = polyp::classify_patch(grey(80), hp, adenoma, grade0, c25);
    ok = ok && r0.final_label == polyp::PolypLabel::TA_HG;
    polyp::Rng rng(0xACC5);
    for (int t = 0; t < 100 && ok; ++t) {
      polyp::shuffle(votes, rng);
      ScriptedBackbone grade({"LG", "HG"}, polyp::InputPolicy::variable_full_res, votes);
      auto r = polyp::classify_patch(grey(80), hp, adenoma, grade, c25);
      ok = r.final_label == r0.final_label && r.hg_ratio == r0.hg_ratio;
    }
  }
  report(4, ok, "decision rules: strict thresholds, monotone sweep, order invariance", sw.seconds());
}

// Shared end-to-end pipeline for criteria 5, 6, 7 and 9: synthesize a corpus,
// run the oracle cascade over every parent, train single-scale baselines and
// the three cascade stages, and write every prediction and report to disk.
struct PipelineOutcome {
  std::vector<fs::path> artifacts;
  long parents = 0;
  long min_class_parents = 0;
  double oracle_ba = 0.0;
  long oracle_off_diagonal = 0;
  double secs_corpus = 0.0;
  double secs_oracle = 0.0;
  double secs_trained = 0.0;
  std::vector<polyp::SweepRow> rows;
  double cascade_ba = 0.0;
};

PipelineOutcome run_pipeline(const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  PipelineOutcome out;

  polyp::SynthConfig cfg;
  cfg.n_slides_per_class = 5;  // 5 slides x 4 patches = 20 parents per class
  cfg.patches_per_slide = 4;
  cfg.seed = 7;
  const std::string root = (work / "corpus").string();

  Stopwatch sw_corpus;
  polyp::Manifest m = polyp::generate_corpus(cfg, root);
  out.secs_corpus = sw_corpus.seconds();

  out.parents = static_cast<long>(m.records.size());
  std::map<polyp::PolypLabel, long> per_class;
  for (const auto& r : m.records) ++per_class[r.label];
  out.min_class_parents = out.parents;
  for (const auto& [label, n] : per_class) out.min_class_parents = std::min(out.min_class_parents, n);

  polyp::CascadeConfig cc;
  cc.sigma_fine = cfg.sigma_fine_um;
  cc.sigma_coarse = cfg.canvas_um;
  cc.mpp = cfg.mpp;

  {
    Stopwatch sw;
    polyp::OracleBackbone hp(polyp::OracleTask::hp, cfg);
    polyp::OracleBackbone adenoma(polyp::OracleTask::adenoma, cfg);
    polyp::OracleBackbone grade(polyp::OracleTask::grade, cfg);
    auto results = polyp::run_cascade(m, root, hp, adenoma, grade, cc);
    auto cm = polyp::confusion_from_results(m, results);
    out.oracle_ba = polyp::balanced_accuracy(cm);
    for (std::size_t i = 0; i < cm.size(); ++i)
      for (std::size_t j = 0; j < cm.size(); ++j)
        if (i != j) out.oracle_off_diagonal += cm.at(i, j);
    const fs::path pred = work / "oracle_predictions.jsonl";
    const fs::path rep = work / "oracle_report.json";
    polyp::write_results_jsonl(pred.string(), results);
    write_text(rep, polyp::metrics_json(cm).dump(2) + "\n");
    out.artifacts.push_back(pred);
    out.artifacts.push_back(rep);
    out.secs_oracle = sw.seconds();
  }

  {
    Stopwatch sw;
    polyp::TrainTaskOptions base;
    base.max_crops_per_parent = kMaxCrops;
    base.train.epochs = kBaselineEpochs;
    base.train.lr0 = kLr0;
    base.train.lr_decay_every = kDecayEvery;
    base.train.momentum = kMomentum;
    base.train.batch_size = kBatchSize;
    base.train.seed = 1;
    out.rows = polyp::sweep_scales(m, root, {cfg.sigma_fine_um, cfg.canvas_um}, base);
    const fs::path sweep = work / "sweep_report.json";
    write_text(sweep, polyp::sweep_report_json(m.mpp, out.rows).dump(2) + "\n");
    out.artifacts.push_back(sweep);

    auto stage = [&](polyp::TrainTask task, double scale, bool full_res, long epochs, long crops) {
      polyp::TrainTaskOptions o;
      o.task = task;
      o.scale_um = scale;
      o.full_res = full_res;
      o.max_crops_per_parent = crops;
      o.train.epochs = epochs;
      o.train.lr0 = kLr0;
      o.train.lr_decay_every = kDecayEvery;
      o.train.momentum = kMomentum;
      o.train.batch_size = kBatchSize;
      o.train.seed = 1;
      return polyp::train_task(m, root, o);
    };
    auto hp = stage(polyp::TrainTask::hp, cfg.sigma_fine_um, false, kHpEpochs, kMaxCrops);
    auto adenoma = stage(polyp::TrainTask::adenoma, cfg.canvas_um, false, kAdenomaEpochs, kMaxCrops);
    auto grade = stage(polyp::TrainTask::grade, cfg.sigma_fine_um, true, kGradeEpochs, kGradeCrops);

    auto results = polyp::run_cascade(m, root, *hp.model, *adenoma.model, *grade.model, cc,
                                      polyp::Split::test);
    auto cm = polyp::confusion_from_results(m, results);
    out.cascade_ba = polyp::balanced_accuracy(cm);
    const fs::path pred = work / "cascade_predictions.jsonl";
    const fs::path rep = work / "cascade_report.json";
    polyp::write_results_jsonl(pred.string(), results);
    write_text(rep, polyp::metrics_json(cm).dump(2) + "\n");
    out.artifacts.push_back(pred);
    out.artifacts.push_back(rep);
    out.secs_trained = sw.seconds();
  }

  out.artifacts.push_back(work / "corpus" / "manifest.csv");
  return out;
}

double type_ba_of(const polyp::SweepRow& row, const std::string& type) {
  for (const auto& [name, v] : row.type_ba)
    if (name == type) return v;
  return -1.0;
}

// Criterion 8: slide-level splits never leak and the published slide count
// reproduces the published partition sizes exactly.
void criterion8() {
  Stopwatch sw;
  polyp::Rng rng(0xACC8);
  bool ok = true;
  for (int t = 0; t < 10000 && ok; ++t) {
    int n = 2 + static_cast<int>(rng.below(39));
    std::map<std::string, polyp::PolypLabel> slides;
    for (int i = 0; i < n; ++i)
      slides["s" + std::to_string(i)] =
          polyp::all_labels[static_cast<std::size_t>(rng.below(6))];
    double fraction = 0.05 + 0.9 * rng.unit();
    auto split = polyp::split_slides(slides, fraction, rng.next());
    ok = split.train.size() + split.test.size() == slides.size();
    std::vector<std::string> overlap;
    std::set_intersection(split.train.begin(), split.train.end(), split.test.begin(),
                          split.test.end(), std::back_inserter(overlap));
    ok = ok && overlap.empty();
    for (const auto& id : split.train) ok = ok && slides.count(id) == 1;
    for (const auto& id : split.test) ok = ok && slides.count(id) == 1;
  }

  // 292 slides at 0.7 must land on 204 train / 88 test for any composition
  for (int rep = 0; rep < 10 && ok; ++rep) {
    std::map<std::string, polyp::PolypLabel> slides;
    for (int i = 0; i < 292; ++i)
      slides["slide" + std::to_string(i)] =
          polyp::all_labels[static_cast<std::size_t>(rng.below(6))];
    auto split = polyp::split_slides(slides, 0.7, rng.next());
    ok = split.train.size() == 204 && split.test.size() == 88;
  }
  report(8, ok, "slide splits never leak and reproduce the published sizes", sw.seconds());
}

bool same_artifacts(const PipelineOutcome& a, const PipelineOutcome& b) {
  if (a.artifacts.size() != b.artifacts.size()) return false;
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
    if (a.artifacts[i].filename() != b.artifacts[i].filename()) return false;
    if (read_bytes(a.artifacts[i]) != read_bytes(b.artifacts[i])) return false;
  }
  return true;
}

}  // namespace

int main() {
  std::printf("acceptance checks, single thread, fixed seeds\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();

  const fs::path scratch = testutil::scratch_dir("acceptance");

  note("running pipeline A (corpus, oracle cascade, baselines, trained cascade)");
  auto a = run_pipeline(scratch / "run_a");

  {
    double secs = a.secs_corpus + a.secs_oracle;
    bool ok = a.parents >= 120 && a.min_class_parents >= 20 && a.oracle_ba == 1.0 &&
              a.oracle_off_diagonal == 0 && secs < 120.0;
    note("oracle cascade over " + std::to_string(a.parents) + " parents, balanced accuracy " +
         polyp::format_2dp(a.oracle_ba));
    report(5, ok, "oracle cascade classifies the synthetic corpus perfectly", secs);
  }

  {
    double fine = -1.0, coarse = -1.0;
    for (const auto& row : a.rows) {
      if (row.scale_um == 800.0) fine = row.ba6;
      if (row.scale_um == 7000.0) coarse = row.ba6;
    }
    double margin = a.cascade_ba - std::max(fine, coarse);
    note("fine baseline " + polyp::format_2dp(fine) + ", coarse baseline " +
         polyp::format_2dp(coarse) + ", cascade " + polyp::format_2dp(a.cascade_ba) +
         ", margin " + polyp::format_2dp(margin));
    bool ok = fine >= 0.0 && coarse >= 0.0 && margin >= kRequiredMargin &&
              a.secs_trained < 1800.0;
    report(6, ok, "trained cascade beats both single-scale baselines by 0.10", a.secs_trained);
  }

  {
    Stopwatch sw;
    double hp_fine = -1.0, hp_coarse = -1.0, tva_fine = -1.0, tva_coarse = -1.0;
    for (const auto& row : a.rows) {
      if (row.scale_um == 800.0) {
        hp_fine = type_ba_of(row, "HP");
        tva_fine = type_ba_of(row, "TVA");
      }
      if (row.scale_um == 7000.0) {
        hp_coarse = type_ba_of(row, "HP");
        tva_coarse = type_ba_of(row, "TVA");
      }
    }
    note("HP one-vs-rest " + polyp::format_2dp(hp_fine) + " at 800um vs " +
         polyp::format_2dp(hp_coarse) + " at 7000um; TVA " + polyp::format_2dp(tva_fine) +
         " vs " + polyp::format_2dp(tva_coarse));
    bool ok = hp_fine > hp_coarse && tva_coarse > tva_fine;
    report(7, ok, "scale sweep prefers fine for HP and coarse for TVA", sw.seconds());
  }

  criterion8();

  {
    Stopwatch sw;
    note("running pipeline B with identical seeds");
    auto b = run_pipeline(scratch / "run_b");
    bool ok = same_artifacts(a, b);
    fs::remove_all(scratch / "run_b");
    report(9, ok, "identical seeds reproduce byte-identical predictions and reports",
           sw.seconds());
  }

  if (!g_all_pass) {
    std::printf("acceptance: FAILED\n");
    return 1;
  }
  std::printf("acceptance: all criteria passed\n");
  return 0;
}
