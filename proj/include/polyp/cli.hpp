#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyp/cascade.hpp"
#include "polyp/common.hpp"
#include "polyp/config.hpp"
#include "polyp/geometry.hpp"
#include "polyp/labels.hpp"
#include "polyp/manifest.hpp"
#include "polyp/metrics.hpp"
#include "polyp/model_store.hpp"
#include "polyp/png_io.hpp"
#include "polyp/synth.hpp"
#include "polyp/trainer.hpp"

// Command layer behind the polyp executable. Each cmd_* function performs one
// subcommand and reports problems by throwing; run_guarded turns the error
// taxonomy into the stable exit-code contract: 0 success, 2 environment or
// input problem, 3 data or semantics problem.

namespace polyp {

namespace detail {

inline void reject_unknown_keys(const KeyValueConfig& cfg, const std::set<std::string>& allowed,
                                const std::string& origin) {
  for (const auto& [key, value] : cfg.values()) {
    (void)value;
    if (!allowed.count(key)) throw data_error(origin + ": unknown config key '" + key + "'");
  }
}

inline std::string manifest_root(const std::string& manifest_path) {
  auto parent = std::filesystem::path(manifest_path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

inline void ensure_parent_dir(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw io_error("cannot create directory " + parent.string() + ": " + ec.message());
}

inline void write_text_file(const std::string& path, const std::string& content) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << content;
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace detail

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::string input_dir;
  std::string out_dir;
  double scale_um = 7000.0;
  double mpp = 0.4415;
  std::string manifest_path;  // empty: <out_dir>/manifest.csv
  double train_fraction = 0.7;
  std::uint64_t split_seed = 1;
};

// Tiles every slide image under <input-dir>/<label>/<slide>.png into square
// patches of the requested physical scale and writes the corpus plus its
// manifest. Slides smaller than one tile are skipped with a warning.
inline int cmd_extract(const ExtractArgs& a) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(a.input_dir)) throw io_error("input directory not found: " + a.input_dir);
  int side = scale_to_pixels(a.scale_um, a.mpp);

  std::map<PolypLabel, std::vector<fs::path>> slides;
  for (const auto& entry : fs::directory_iterator(a.input_dir)) {
    if (!entry.is_directory()) continue;
    PolypLabel label = parse_label(entry.path().filename().string());
    auto& list = slides[label];
    for (const auto& f : fs::directory_iterator(entry.path()))
      if (f.path().extension() == ".png") list.push_back(f.path());
    std::sort(list.begin(), list.end());
  }

  Manifest m;
  m.mpp = a.mpp;
  long skipped = 0;
  for (const auto& [label, files] : slides) {
    for (const auto& file : files) {
      auto [w, h] = read_png_dims(file.string());
      auto grid = tile_grid(w, h, side);
      if (grid.count() == 0) {
        std::fprintf(stderr, "warning: %s (%dx%d px) is smaller than one %d px tile, skipped\n",
                     file.string().c_str(), w, h, side);
        ++skipped;
        continue;
      }
      Image img = read_png(file.string());
      for (const auto& origin : grid.origins) {
        PatchRecord r;
        r.slide_id = file.stem().string();
        r.label = label;
        r.scale_um = a.scale_um;
        r.side_px = side;
        r.x_px = origin.x;
        r.y_px = origin.y;
        r.patch_id = r.slide_id + "_" + format_number(r.scale_um) + "_" +
                     std::to_string(r.x_px) + "_" + std::to_string(r.y_px);
        r.path = patch_rel_path(r);

        fs::path dest = fs::path(a.out_dir) / r.path;
        detail::ensure_parent_dir(dest.string());
        write_png(dest.string(), crop(img, origin.x, origin.y, side));
        m.records.push_back(std::move(r));
      }
    }
  }

  if (m.records.empty()) {
    std::fprintf(stderr, "warning: no patches extracted (%ld slides below tile size)\n", skipped);
    return 0;
  }

  assign_split(m, a.train_fraction, a.split_seed);
  validate_manifest(m);
  std::string manifest_path =
      a.manifest_path.empty() ? (fs::path(a.out_dir) / "manifest.csv").string() : a.manifest_path;
  detail::ensure_parent_dir(manifest_path);
  write_manifest(m, manifest_path);

  auto dist = class_distribution(m);
  std::printf("extracted %zu patches of %d px (%s um) from %ld slides\n", m.records.size(), side,
              format_number(a.scale_um).c_str(), dist.total_slides());
  for (const auto& row : dist.rows)
    std::printf("  %-6s  %ld\n", to_string(row.label).c_str(), row.patches);
  if (skipped > 0) std::printf("  (%ld slides skipped as smaller than one tile)\n", skipped);
  std::printf("manifest: %s\n", manifest_path.c_str());
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;
};

inline SynthConfig synth_config_from_file(const std::string& path) {
  auto kv = KeyValueConfig::parse_file(path);
  detail::reject_unknown_keys(kv,
                              {"n_slides_per_class", "patches_per_slide", "seed", "canvas_um",
                               "mpp", "sigma_fine_um", "train_fraction"},
                              path);
  SynthConfig cfg;
  cfg.n_slides_per_class = kv.get_long("n_slides_per_class", cfg.n_slides_per_class);
  cfg.patches_per_slide = kv.get_long("patches_per_slide", cfg.patches_per_slide);
  cfg.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(cfg.seed)));
  cfg.canvas_um = kv.get_double("canvas_um", cfg.canvas_um);
  cfg.mpp = kv.get_double("mpp", cfg.mpp);
  cfg.sigma_fine_um = kv.get_double("sigma_fine_um", cfg.sigma_fine_um);
  cfg.train_fraction = kv.get_double("train_fraction", cfg.train_fraction);
  return cfg;
}

inline int cmd_synth(const SynthArgs& a) {
  SynthConfig cfg = a.config_path.empty() ? SynthConfig{} : synth_config_from_file(a.config_path);
  Manifest m = generate_corpus(cfg, a.out_dir);

  auto dist = class_distribution(m);
  std::printf("generated %zu patches across %ld slides under %s\n", m.records.size(),
              dist.total_slides(), a.out_dir.c_str());
  for (const auto& row : dist.rows)
    std::printf("  %-6s  %s um: %ld\n", to_string(row.label).c_str(),
                format_number(row.scale_um).c_str(), row.patches);
  std::printf("manifest: %s\n",
              (std::filesystem::path(a.out_dir) / "manifest.csv").string().c_str());
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest_path;
  std::string task = "hp";
  double scale_um = 800.0;
  bool full_res = false;
  std::string out_model;
  std::string backbone = "smallnet";
  long max_crops_per_parent = 6;
  TrainConfig train;
};

inline int cmd_train(const TrainArgs& a) {
  TrainTask task;
  try {
    task = parse_train_task(a.task);
  } catch (const data_error&) {
    throw std::invalid_argument("task must be hp, adenoma, or grade");
  }
  if (task == TrainTask::six) throw std::invalid_argument("task must be hp, adenoma, or grade");

  Manifest m = read_manifest(a.manifest_path);
  std::string root = detail::manifest_root(a.manifest_path);

  TrainTaskOptions opt;
  opt.task = task;
  opt.scale_um = a.scale_um;
  opt.full_res = a.full_res;
  opt.max_crops_per_parent = a.max_crops_per_parent;
  opt.backbone = a.backbone;
  opt.train = a.train;

  auto trained = train_task(m, root, opt, [&](long epoch, double lr, double acc) {
    std::printf("epoch %ld/%ld  lr %.4g  train accuracy %.4f\n", epoch + 1, a.train.epochs, lr,
                acc);
  });
  save_model(a.out_model, trained.meta, trained.weights);
  std::printf("model written to %s (final train accuracy %.4f)\n", a.out_model.c_str(),
              trained.trace.epoch_accuracy.back());
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string manifest_path;
  std::vector<double> scales;
  std::string out_report;
  std::string backbone = "smallnet";
  long max_crops_per_parent = 6;
  TrainConfig train;
};

// One column per scale, one row for the 6-class score and one per histotype.
inline std::string format_sweep_table(const std::vector<SweepRow>& rows) {
  auto cell = [](const std::string& s) {
    std::string out = s;
    while (out.size() < 9) out.insert(out.begin(), ' ');
    return out;
  };
  auto lead = [](const std::string& s) {
    std::string out = s;
    while (out.size() < 8) out += ' ';
    return out;
  };

  std::string out = "balanced accuracy by scale (um)\n" + lead("");
  for (const auto& row : rows) out += cell(format_number(row.scale_um));
  out += "\n";

  auto metric_row = [&](const std::string& name, auto value_of) {
    out += lead(name);
    for (const auto& row : rows) out += cell(format_2dp(value_of(row)));
    out += "\n";
  };
  metric_row("6-class", [](const SweepRow& r) { return r.ba6; });
  for (std::size_t t = 0; t < rows.front().type_ba.size(); ++t)
    metric_row(rows.front().type_ba[t].first,
               [t](const SweepRow& r) { return r.type_ba[t].second; });
  return out;
}

inline nlohmann::ordered_json sweep_report_json(double mpp, const std::vector<SweepRow>& rows) {
  nlohmann::ordered_json j;
  j["mpp"] = mpp;
  auto jrows = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["scale_um"] = row.scale_um;
    r["balanced_accuracy"] = row.ba6;
    nlohmann::ordered_json per;
    for (const auto& [name, ba] : row.type_ba) per[name] = ba;
    r["per_type_balanced_accuracy"] = std::move(per);
    r["train_epoch_accuracy"] = row.epoch_accuracy;
    jrows.push_back(std::move(r));
  }
  j["rows"] = std::move(jrows);
  return j;
}

inline int cmd_sweep(const SweepArgs& a) {
  if (a.scales.empty()) throw std::invalid_argument("no scales requested");
  Manifest m = read_manifest(a.manifest_path);
  std::string root = detail::manifest_root(a.manifest_path);

  TrainTaskOptions base;
  base.backbone = a.backbone;
  base.max_crops_per_parent = a.max_crops_per_parent;
  base.train = a.train;

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < a.scales.size(); ++i) {
    std::printf("training 6-class baseline at %s um (%zu/%zu)\n",
                format_number(a.scales[i]).c_str(), i + 1, a.scales.size());
    auto one = sweep_scales(m, root, {a.scales[i]}, base);
    rows.push_back(std::move(one.front()));
  }

  detail::write_text_file(a.out_report, sweep_report_json(m.mpp, rows).dump(2) + "\n");
  std::string table = format_sweep_table(rows);
  std::filesystem::path txt(a.out_report);
  txt.replace_extension(".txt");
  if (txt.string() == a.out_report) txt = a.out_report + ".table.txt";
  detail::write_text_file(txt.string(), table);

  std::fputs(table.c_str(), stdout);
  std::printf("report: %s\n", a.out_report.c_str());
  return 0;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  std::string models_dir;
  std::string input_manifest;
  std::string config_path;  // empty: defaults
  std::string out_path;
  std::string split = "all";  // train | test | all
  // flag overrides, applied on top of config-file values
  std::optional<double> sigma_fine, sigma_coarse, t_hp, t_d, mpp;
};

inline int cmd_infer(const InferArgs& a) {
  namespace fs = std::filesystem;
  Manifest m = read_manifest(a.input_manifest);
  std::string root = detail::manifest_root(a.input_manifest);

  auto hp = load_model((fs::path(a.models_dir) / "hp").string());
  auto adenoma = load_model((fs::path(a.models_dir) / "adenoma").string());
  auto grade = load_model((fs::path(a.models_dir) / "grade").string());

  CascadeConfig cc;
  bool mpp_given = false;
  if (!a.config_path.empty()) {
    auto kv = KeyValueConfig::parse_file(a.config_path);
    detail::reject_unknown_keys(kv, {"sigma_fine", "sigma_coarse", "t_hp", "t_d", "mpp"},
                                a.config_path);
    cc.sigma_fine = kv.get_double("sigma_fine", cc.sigma_fine);
    cc.sigma_coarse = kv.get_double("sigma_coarse", cc.sigma_coarse);
    cc.t_hp = kv.get_double("t_hp", cc.t_hp);
    cc.t_d = kv.get_double("t_d", cc.t_d);
    if (kv.has("mpp")) {
      cc.mpp = kv.get_double("mpp", cc.mpp);
      mpp_given = true;
    }
  }
  if (a.sigma_fine) cc.sigma_fine = *a.sigma_fine;
  if (a.sigma_coarse) cc.sigma_coarse = *a.sigma_coarse;
  if (a.t_hp) cc.t_hp = *a.t_hp;
  if (a.t_d) cc.t_d = *a.t_d;
  if (a.mpp) {
    cc.mpp = *a.mpp;
    mpp_given = true;
  }
  if (!mpp_given) cc.mpp = m.mpp;  // geometry follows the data unless pinned

  std::optional<Split> split;
  if (a.split == "train")
    split = Split::train;
  else if (a.split == "test")
    split = Split::test;
  else if (a.split != "all")
    throw std::invalid_argument("split must be train, test, or all");

  auto results =
      run_cascade(m, root, *hp.backbone, *adenoma.backbone, *grade.backbone, cc, split);
  detail::ensure_parent_dir(a.out_path);
  write_results_jsonl(a.out_path, results);
  if (results.empty())
    std::fprintf(stderr, "warning: no %s patches at %s um to classify\n", a.split.c_str(),
                 format_number(cc.sigma_coarse).c_str());
  std::printf("wrote %zu predictions to %s\n", results.size(), a.out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string predictions_path;
  std::string manifest_path;
  std::string report_path;
  std::string plot_path;  // empty: no heat map
};

inline int cmd_evaluate(const EvalArgs& a) {
  Manifest m = read_manifest(a.manifest_path);
  auto results = read_results_jsonl(a.predictions_path);
  auto cm = confusion_from_results(m, results);

  detail::write_text_file(a.report_path, metrics_json(cm).dump(2) + "\n");
  std::string text = format_report(cm);
  std::filesystem::path txt(a.report_path);
  txt.replace_extension(".txt");
  if (txt.string() == a.report_path) txt = a.report_path + ".table.txt";
  detail::write_text_file(txt.string(), text);

  if (!a.plot_path.empty()) {
    detail::ensure_parent_dir(a.plot_path);
    write_heatmap_png(cm, a.plot_path);
  }

  std::fputs(text.c_str(), stdout);
  if (!a.plot_path.empty()) std::printf("heat map: %s\n", a.plot_path.c_str());
  std::printf("report: %s\n", a.report_path.c_str());
  return 0;
}

// ---------------------------------------------------------------- guard

// Maps the error taxonomy onto the exit-code contract shared by every
// subcommand.
template <class Fn>
int run_guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace polyp
