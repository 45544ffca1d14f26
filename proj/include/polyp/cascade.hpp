#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyp/backbone.hpp"
#include "polyp/common.hpp"
#include "polyp/config.hpp"
#include "polyp/geometry.hpp"
#include "polyp/labels.hpp"

// Three-stage inference over one coarse patch: fine-grid HP averaging, whole
// patch adenoma typing on the downsampled field, and full-resolution grading
// by the high-grade vote ratio.

namespace polyp {

struct CascadeConfig {
  double sigma_fine = 800.0;
  double sigma_coarse = 7000.0;
  double t_hp = 0.5;
  double t_d = 0.2;
  double mpp = 0.4415;

  void validate() const {
    if (!(sigma_fine > 0.0) || !(sigma_coarse > 0.0))
      throw std::invalid_argument("scales must be positive");
    if (!(sigma_fine < sigma_coarse))
      throw std::invalid_argument("fine scale must be smaller than the coarse scale");
    if (!(t_hp > 0.0) || !(t_hp < 1.0))
      throw std::invalid_argument("t_hp must be strictly inside (0, 1)");
    if (t_d < 0.0 || t_d > 1.0) throw std::invalid_argument("t_d must be in [0, 1]");
    if (!(mpp > 0.0)) throw std::invalid_argument("mpp must be positive");
  }
};

inline CascadeConfig cascade_config_from(const KeyValueConfig& kv) {
  CascadeConfig cfg;
  cfg.sigma_fine = kv.get_double("sigma_fine", cfg.sigma_fine);
  cfg.sigma_coarse = kv.get_double("sigma_coarse", cfg.sigma_coarse);
  cfg.t_hp = kv.get_double("t_hp", cfg.t_hp);
  cfg.t_d = kv.get_double("t_d", cfg.t_d);
  cfg.mpp = kv.get_double("mpp", cfg.mpp);
  cfg.validate();
  return cfg;
}

struct CascadeResult {
  std::string patch_id;
  double hp_mean_prob = 0.0;
  long n_subpatches = 0;
  int stage_fired = 0;
  PolypLabel final_label = PolypLabel::NORM;
  std::optional<std::array<double, 3>> adenoma_probs;
  std::optional<double> hg_ratio;
};

// Decision cores, separated from image plumbing so the arithmetic rules are
// testable on bare probability lists.

// mean over an unordered collection; summing in sorted order makes the
// result identical for any permutation of the inputs
inline double mean_probability(std::vector<double> probs) {
  if (probs.empty()) throw data_error("cannot average an empty probability list");
  std::sort(probs.begin(), probs.end());
  double sum = 0.0;
  for (double p : probs) sum += p;
  return sum / static_cast<double>(probs.size());
}

// fraction of sub-patches voting high grade (p > 0.5, the binary argmax)
inline double high_grade_ratio(const std::vector<double>& hg_probs) {
  if (hg_probs.empty()) throw data_error("cannot compute a ratio over zero sub-patches");
  long votes = 0;
  for (double p : hg_probs)
    if (p > 0.5) ++votes;
  return static_cast<double>(votes) / static_cast<double>(hg_probs.size());
}

// argmax with ties resolved toward the lower index (NORM < TA < TVA)
inline int adenoma_decision(const std::array<double, 3>& probs) {
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
  return best;
}

namespace detail {

inline void require_model(const Backbone& model, std::size_t n_classes, InputPolicy policy,
                          const char* stage) {
  if (model.classes().size() != n_classes)
    throw std::invalid_argument(std::string(stage) + " model must have " +
                                std::to_string(n_classes) + " classes");
  if (model.input_policy() != policy)
    throw std::invalid_argument(std::string(stage) + " model has the wrong input policy");
}

// index of the positive class: by name when the model declares it, else the
// conventional second slot of a binary head
inline std::size_t positive_index(const Backbone& model, const std::string& name) {
  const auto& cls = model.classes();
  for (std::size_t i = 0; i < cls.size(); ++i)
    if (cls[i] == name) return i;
  return 1;
}

inline TileGrid fine_grid(const Image& patch, const CascadeConfig& cfg) {
  if (patch.width != patch.height)
    throw std::invalid_argument("cascade input patch must be square");
  int fine_side = scale_to_pixels(cfg.sigma_fine, cfg.mpp);
  auto grid = tile_grid(patch.width, patch.height, fine_side);
  if (grid.count() == 0)
    throw data_error("patch of " + std::to_string(patch.width) +
                     " px is smaller than the fine scale (" + std::to_string(fine_side) + " px)");
  return grid;
}

}  // namespace detail

inline double hp_stage(const Image& patch_coarse, const Backbone& model_hp,
                       const CascadeConfig& cfg) {
  cfg.validate();
  detail::require_model(model_hp, 2, InputPolicy::fixed_224, "hp");
  auto grid = detail::fine_grid(patch_coarse, cfg);
  std::size_t hp_idx = detail::positive_index(model_hp, "HP");

  int fine_side = scale_to_pixels(cfg.sigma_fine, cfg.mpp);
  std::vector<double> probs;
  probs.reserve(grid.count());
  for (const auto& origin : grid.origins) {
    Image sub = resample_area(crop(patch_coarse, origin.x, origin.y, fine_side), 224, 224);
    probs.push_back(model_hp.predict(sub)[hp_idx]);
  }
  return mean_probability(probs);
}

inline std::array<double, 3> adenoma_stage(const Image& patch_coarse,
                                           const Backbone& model_adenoma) {
  detail::require_model(model_adenoma, 3, InputPolicy::fixed_224, "adenoma");
  auto p = model_adenoma.predict(downsample(patch_coarse, 224));
  return {p[0], p[1], p[2]};
}

struct GradeOutcome {
  double hg_ratio;
  Grade grade;
};

inline GradeOutcome grade_stage(const Image& patch_coarse, const Backbone& model_grade,
                                const CascadeConfig& cfg) {
  cfg.validate();
  detail::require_model(model_grade, 2, InputPolicy::variable_full_res, "grade");
  auto grid = detail::fine_grid(patch_coarse, cfg);
  std::size_t hg_idx = detail::positive_index(model_grade, "HG");

  int fine_side = scale_to_pixels(cfg.sigma_fine, cfg.mpp);
  std::vector<double> probs;
  probs.reserve(grid.count());
  for (const auto& origin : grid.origins)
    probs.push_back(model_grade.predict(crop(patch_coarse, origin.x, origin.y, fine_side))[hg_idx]);

  double ratio = high_grade_ratio(probs);
  return {ratio, ratio > cfg.t_d ? Grade::HG : Grade::LG};
}

inline CascadeResult classify_patch(const Image& patch_coarse, const Backbone& model_hp,
                                    const Backbone& model_adenoma, const Backbone& model_grade,
                                    const CascadeConfig& cfg) {
  cfg.validate();
  detail::require_model(model_hp, 2, InputPolicy::fixed_224, "hp");
  detail::require_model(model_adenoma, 3, InputPolicy::fixed_224, "adenoma");
  detail::require_model(model_grade, 2, InputPolicy::variable_full_res, "grade");
  int coarse_side = scale_to_pixels(cfg.sigma_coarse, cfg.mpp);
  if (patch_coarse.width != coarse_side || patch_coarse.height != coarse_side)
    throw std::invalid_argument("expected a " + std::to_string(coarse_side) +
                                " px coarse patch, got " + std::to_string(patch_coarse.width) +
                                "x" + std::to_string(patch_coarse.height));

  CascadeResult result;
  result.n_subpatches = static_cast<long>(detail::fine_grid(patch_coarse, cfg).count());
  result.hp_mean_prob = hp_stage(patch_coarse, model_hp, cfg);
  if (result.hp_mean_prob > cfg.t_hp) {
    result.stage_fired = 1;
    result.final_label = PolypLabel::HP;
    return result;
  }

  result.adenoma_probs = adenoma_stage(patch_coarse, model_adenoma);
  int type = adenoma_decision(*result.adenoma_probs);
  if (type == 0) {
    result.stage_fired = 2;
    result.final_label = PolypLabel::NORM;
    return result;
  }

  auto outcome = grade_stage(patch_coarse, model_grade, cfg);
  result.hg_ratio = outcome.hg_ratio;
  result.stage_fired = 3;
  if (type == 1)
    result.final_label = outcome.grade == Grade::HG ? PolypLabel::TA_HG : PolypLabel::TA_LG;
  else
    result.final_label = outcome.grade == Grade::HG ? PolypLabel::TVA_HG : PolypLabel::TVA_LG;
  return result;
}

inline nlohmann::ordered_json to_json(const CascadeResult& r) {
  nlohmann::ordered_json j;
  j["patch_id"] = r.patch_id;
  j["stage_fired"] = r.stage_fired;
  j["final"] = to_string(r.final_label);
  j["hp_mean_prob"] = r.hp_mean_prob;
  j["n_subpatches"] = r.n_subpatches;
  if (r.adenoma_probs)
    j["adenoma_probs"] = std::vector<double>(r.adenoma_probs->begin(), r.adenoma_probs->end());
  if (r.hg_ratio) j["hg_ratio"] = *r.hg_ratio;
  return j;
}

inline CascadeResult cascade_result_from_json(const nlohmann::json& j) {
  CascadeResult r;
  try {
    r.patch_id = j.at("patch_id").get<std::string>();
    r.stage_fired = j.at("stage_fired").get<int>();
    r.final_label = parse_label(j.at("final").get<std::string>());
    r.hp_mean_prob = j.at("hp_mean_prob").get<double>();
    r.n_subpatches = j.at("n_subpatches").get<long>();
    if (j.contains("adenoma_probs")) {
      auto v = j.at("adenoma_probs").get<std::vector<double>>();
      if (v.size() != 3) throw data_error("adenoma_probs must have 3 entries");
      r.adenoma_probs = std::array<double, 3>{v[0], v[1], v[2]};
    }
    if (j.contains("hg_ratio")) r.hg_ratio = j.at("hg_ratio").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed cascade result: ") + e.what());
  }
  return r;
}

inline void write_results_jsonl(const std::string& path, const std::vector<CascadeResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  for (const auto& r : results) out << to_json(r).dump() << "\n";
  if (!out) throw io_error("failed writing " + path);
}

inline std::vector<CascadeResult> read_results_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read " + path);
  std::vector<CascadeResult> results;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw data_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    results.push_back(cascade_result_from_json(j));
  }
  return results;
}

}  // namespace polyp
