#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyp/backbone.hpp"
#include "polyp/cascade.hpp"
#include "polyp/common.hpp"
#include "polyp/geometry.hpp"
#include "polyp/labels.hpp"
#include "polyp/manifest.hpp"
#include "polyp/metrics.hpp"
#include "polyp/model_store.hpp"
#include "polyp/png_io.hpp"
#include "polyp/rng.hpp"
#include "polyp/smallnet.hpp"

// Turns manifest records into concrete training sets for the cascade's
// stage tasks, drives training, and runs batch inference / evaluation over a
// manifest split.

namespace polyp {

enum class TrainTask { hp, adenoma, grade, six };

inline std::string to_string(TrainTask t) {
  switch (t) {
    case TrainTask::hp: return "hp";
    case TrainTask::adenoma: return "adenoma";
    case TrainTask::grade: return "grade";
    case TrainTask::six: return "six";
  }
  throw std::logic_error("unreachable");
}

inline TrainTask parse_train_task(const std::string& s) {
  if (s == "hp") return TrainTask::hp;
  if (s == "adenoma") return TrainTask::adenoma;
  if (s == "grade") return TrainTask::grade;
  if (s == "six") return TrainTask::six;
  throw data_error("unknown task: " + s);
}

inline std::vector<std::string> task_classes(TrainTask t) {
  switch (t) {
    case TrainTask::hp: return {"rest", "HP"};
    case TrainTask::adenoma: return {"NORM", "TA", "TVA"};
    case TrainTask::grade: return {"LG", "HG"};
    case TrainTask::six: {
      std::vector<std::string> out;
      for (PolypLabel l : all_labels) out.push_back(to_string(l));
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

// class index of a record under the task's label mapping; records a task
// does not train on (HP for the adenoma stage, non-adenomas for grading)
// map to nothing
inline std::optional<int> task_label_index(TrainTask t, PolypLabel label) {
  switch (t) {
    case TrainTask::hp:
      return label == PolypLabel::HP ? 1 : 0;
    case TrainTask::adenoma:
      switch (type_of(label)) {
        case PolypType::NORM: return 0;
        case PolypType::TA: return 1;
        case PolypType::TVA: return 2;
        case PolypType::HP: return std::nullopt;
      }
      throw std::logic_error("unreachable");
    case TrainTask::grade:
      if (!is_adenoma(label)) return std::nullopt;
      return grade_of(label) == Grade::HG ? 1 : 0;
    case TrainTask::six:
      for (std::size_t i = 0; i < all_labels.size(); ++i)
        if (all_labels[i] == label) return static_cast<int>(i);
      throw std::logic_error("unreachable");
  }
  throw std::logic_error("unreachable");
}

struct TaskDataset {
  std::vector<TrainItem> items;
  std::vector<std::string> provenance;  // "<patch_id>#<cell>" or "<patch_id>#d"
  std::uint64_t data_hash = 0;
};

// Builds the image set for one task at one scale. Records already at the
// requested scale are used whole; otherwise parents at the next scale up are
// tiled and up to max_crops_per_parent cells are drawn per parent with a
// seeded shuffle. Images are resampled to 224 unless full_res keeps the
// native resolution.
inline TaskDataset materialize_task(const Manifest& m, const std::string& image_root,
                                    TrainTask task, double scale_um, bool full_res,
                                    long max_crops_per_parent, std::uint64_t seed,
                                    Split split) {
  if (max_crops_per_parent < 1)
    throw std::invalid_argument("max_crops_per_parent must be positive");
  int side = scale_to_pixels(scale_um, m.mpp);

  bool have_direct = false;
  double parent_scale = 0.0;
  for (const auto& r : m.records) {
    if (r.split != split) continue;
    if (r.scale_um == scale_um) have_direct = true;
    if (r.scale_um > scale_um && (parent_scale == 0.0 || r.scale_um < parent_scale))
      parent_scale = r.scale_um;
  }
  if (!have_direct && parent_scale == 0.0)
    throw data_error("no " + to_string(split) + " records at or above scale " +
                     format_number(scale_um) + " um");

  namespace fs = std::filesystem;
  TaskDataset out;
  auto push = [&](Image img, int label, const std::string& prov) {
    if (!full_res) img = resample_area(img, 224, 224);
    out.items.push_back({std::move(img), label});
    out.provenance.push_back(prov);
  };

  for (const auto& r : m.records) {
    if (r.split != split) continue;
    if (r.scale_um != (have_direct ? scale_um : parent_scale)) continue;
    auto label = task_label_index(task, r.label);
    if (!label) continue;

    Image img = read_png((fs::path(image_root) / r.path).string());
    if (have_direct) {
      push(std::move(img), *label, r.patch_id + "#d");
      continue;
    }

    auto grid = tile_grid(img.width, img.height, side);
    if (grid.count() == 0) continue;
    std::vector<std::size_t> cells(grid.count());
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
    auto cell_rng = derive_stream({seed, 0xC5, fnv1a64(r.patch_id)});
    shuffle(cells, cell_rng);
    cells.resize(std::min<std::size_t>(cells.size(),
                                       static_cast<std::size_t>(max_crops_per_parent)));
    std::sort(cells.begin(), cells.end());
    for (std::size_t c : cells) {
      const auto& origin = grid.origins[c];
      push(crop(img, origin.x, origin.y, side), *label,
           r.patch_id + "#" + std::to_string(c));
    }
  }

  std::string canon;
  for (std::size_t i = 0; i < out.items.size(); ++i)
    canon += out.provenance[i] + "=" + std::to_string(out.items[i].label) + "\n";
  out.data_hash = fnv1a64(canon);
  return out;
}

struct TrainTaskOptions {
  TrainTask task = TrainTask::hp;
  double scale_um = 800.0;
  bool full_res = false;
  long max_crops_per_parent = 6;
  std::string backbone = "smallnet";  // or "linear"
  TrainConfig train;
  Split split = Split::train;
};

struct TrainedTask {
  ModelMeta meta;
  std::vector<float> weights;
  TrainResult trace;
  std::shared_ptr<Backbone> model;
};

inline TrainedTask train_task(const Manifest& m, const std::string& image_root,
                              const TrainTaskOptions& opt, const EpochLogger& log = {}) {
  opt.train.validate();
  auto data = materialize_task(m, image_root, opt.task, opt.scale_um, opt.full_res,
                               opt.max_crops_per_parent, opt.train.seed, opt.split);

  auto classes = task_classes(opt.task);
  std::vector<long> support(classes.size(), 0);
  for (const auto& it : data.items) support[static_cast<std::size_t>(it.label)]++;
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (support[c] == 0)
      throw data_error("class has no training examples: " + classes[c]);

  InputPolicy policy = opt.full_res ? InputPolicy::variable_full_res : InputPolicy::fixed_224;
  TrainedTask result;
  if (opt.backbone == "smallnet") {
    auto net = std::make_shared<SmallNet>(classes, policy, opt.train.seed);
    result.trace = fit_classifier(*net, data.items, opt.train, log);
    result.weights = net->weights();
    result.model = net;
  } else if (opt.backbone == "linear") {
    auto net = std::make_shared<LinearNet>(classes, policy, opt.train.seed);
    result.trace = fit_classifier(*net, data.items, opt.train, log);
    result.weights = net->weights();
    result.model = net;
  } else {
    throw std::invalid_argument("unknown backbone: " + opt.backbone);
  }

  result.meta.kind = opt.backbone;
  result.meta.task_tag = to_string(opt.task);
  result.meta.classes = classes;
  result.meta.policy = policy;
  result.meta.train = opt.train;
  result.meta.data_hash = data.data_hash;
  result.meta.epoch_accuracy = result.trace.epoch_accuracy;
  return result;
}

// Classifies every coarse patch through the cascade, in manifest order,
// optionally restricted to one split. The manifest's resolution must match
// the cascade geometry.
inline std::vector<CascadeResult> run_cascade(const Manifest& m, const std::string& image_root,
                                              const Backbone& model_hp,
                                              const Backbone& model_adenoma,
                                              const Backbone& model_grade,
                                              const CascadeConfig& cfg,
                                              std::optional<Split> split = std::nullopt) {
  cfg.validate();
  if (std::abs(cfg.mpp - m.mpp) > 1e-12)
    throw data_error("cascade mpp " + format_number(cfg.mpp) + " does not match manifest mpp " +
                     format_number(m.mpp));

  namespace fs = std::filesystem;
  std::vector<CascadeResult> results;
  for (const auto& r : m.records) {
    if (split && r.split != *split) continue;
    if (r.scale_um != cfg.sigma_coarse) continue;
    Image patch = read_png((fs::path(image_root) / r.path).string());
    auto result = classify_patch(patch, model_hp, model_adenoma, model_grade, cfg);
    result.patch_id = r.patch_id;
    results.push_back(std::move(result));
  }
  return results;
}

// Scores cascade predictions against manifest truth as a 6-class confusion
// matrix; every prediction must reference a known patch.
inline ConfusionMatrix confusion_from_results(const Manifest& m,
                                              const std::vector<CascadeResult>& results) {
  std::map<std::string, PolypLabel> truth;
  for (const auto& r : m.records) truth[r.patch_id] = r.label;

  ConfusionMatrix cm(task_classes(TrainTask::six));
  for (const auto& r : results) {
    auto it = truth.find(r.patch_id);
    if (it == truth.end()) throw data_error("prediction for unknown patch: " + r.patch_id);
    cm.add(to_string(it->second), to_string(r.final_label));
  }
  return cm;
}

struct SweepRow {
  double scale_um = 0.0;
  double ba6 = 0.0;
  std::vector<std::pair<std::string, double>> type_ba;  // HP/NORM/TA/TVA one-vs-rest
  std::vector<double> epoch_accuracy;
};

// Trains a 6-class baseline at each scale and evaluates it on the test
// split's crops of the same scale, reporting overall and per-type balanced
// accuracy.
inline std::vector<SweepRow> sweep_scales(const Manifest& m, const std::string& image_root,
                                          const std::vector<double>& scales,
                                          const TrainTaskOptions& base,
                                          const EpochLogger& log = {}) {
  if (scales.empty()) throw std::invalid_argument("no scales requested");
  std::vector<SweepRow> rows;
  for (double scale : scales) {
    TrainTaskOptions opt = base;
    opt.task = TrainTask::six;
    opt.scale_um = scale;
    opt.full_res = false;
    auto trained = train_task(m, image_root, opt, log);

    auto test = materialize_task(m, image_root, TrainTask::six, scale, false,
                                 opt.max_crops_per_parent, opt.train.seed + 1, Split::test);
    ConfusionMatrix cm(task_classes(TrainTask::six));
    for (const auto& item : test.items) {
      auto p = trained.model->predict(item.image);
      int arg = 0;
      for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[static_cast<std::size_t>(arg)]) arg = static_cast<int>(i);
      cm.add(item.label, arg);
    }

    SweepRow row;
    row.scale_um = scale;
    row.ba6 = balanced_accuracy(cm);
    auto collapsed = collapse_to_type(cm);
    for (const auto& cls : collapsed.classes()) {
      auto stats = one_vs_rest(collapsed, cls);
      row.type_ba.emplace_back(cls, stats.balanced_accuracy);
    }
    row.epoch_accuracy = trained.trace.epoch_accuracy;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace polyp
