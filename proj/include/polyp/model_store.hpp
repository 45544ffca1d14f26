#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyp/backbone.hpp"
#include "polyp/common.hpp"
#include "polyp/smallnet.hpp"
#include "polyp/synth.hpp"

// A saved model is a directory: spec.json describes the classifier (kind,
// classes, input policy, training configuration, provenance) and weights.bin
// holds the raw float32 parameters for trained kinds. Oracle kinds carry no
// weights; they are rebuilt from the generator parameters echoed in the json.

namespace polyp {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct ModelMeta {
  std::string kind;  // smallnet | linear | oracle_hp | oracle_adenoma | oracle_grade
  std::string task_tag;
  std::vector<std::string> classes;
  InputPolicy policy = InputPolicy::fixed_224;
  TrainConfig train;
  std::uint64_t data_hash = 0;
  std::vector<double> epoch_accuracy;
  SynthConfig generator;  // meaningful for oracle kinds only
};

struct LoadedModel {
  std::unique_ptr<Backbone> backbone;
  ModelMeta meta;
};

namespace detail {

constexpr char kWeightsMagic[8] = {'P', 'L', 'Y', 'P', 'W', '0', '0', '1'};

inline bool is_oracle_kind(const std::string& kind) {
  return kind.rfind("oracle_", 0) == 0;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t parse_hash_hex(const std::string& s) {
  if (s.size() != 16) throw data_error("bad data hash: " + s);
  std::uint64_t h = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else throw data_error("bad data hash: " + s);
    h = (h << 4) | static_cast<std::uint64_t>(d);
  }
  return h;
}

inline nlohmann::ordered_json train_to_json(const TrainConfig& t) {
  nlohmann::ordered_json j;
  j["epochs"] = t.epochs;
  j["lr0"] = t.lr0;
  j["lr_decay_factor"] = t.lr_decay_factor;
  j["lr_decay_every"] = t.lr_decay_every;
  j["momentum"] = t.momentum;
  j["weight_decay"] = t.weight_decay;
  j["batch_size"] = t.batch_size;
  j["seed"] = t.seed;
  j["jitter"] = {{"brightness", t.jitter.brightness},
                 {"contrast", t.jitter.contrast},
                 {"saturation", t.jitter.saturation},
                 {"hue", t.jitter.hue}};
  return j;
}

inline TrainConfig train_from_json(const nlohmann::json& j) {
  TrainConfig t;
  t.epochs = j.at("epochs").get<long>();
  t.lr0 = j.at("lr0").get<double>();
  t.lr_decay_factor = j.at("lr_decay_factor").get<double>();
  t.lr_decay_every = j.at("lr_decay_every").get<long>();
  t.momentum = j.at("momentum").get<double>();
  t.weight_decay = j.at("weight_decay").get<double>();
  t.batch_size = j.at("batch_size").get<long>();
  t.seed = j.at("seed").get<std::uint64_t>();
  const auto& jj = j.at("jitter");
  t.jitter.brightness = jj.at("brightness").get<double>();
  t.jitter.contrast = jj.at("contrast").get<double>();
  t.jitter.saturation = jj.at("saturation").get<double>();
  t.jitter.hue = jj.at("hue").get<double>();
  return t;
}

inline nlohmann::ordered_json generator_to_json(const SynthConfig& g) {
  nlohmann::ordered_json j;
  j["n_slides_per_class"] = g.n_slides_per_class;
  j["patches_per_slide"] = g.patches_per_slide;
  j["seed"] = g.seed;
  j["canvas_um"] = g.canvas_um;
  j["mpp"] = g.mpp;
  j["sigma_fine_um"] = g.sigma_fine_um;
  j["train_fraction"] = g.train_fraction;
  return j;
}

inline SynthConfig generator_from_json(const nlohmann::json& j) {
  SynthConfig g;
  g.n_slides_per_class = j.at("n_slides_per_class").get<long>();
  g.patches_per_slide = j.at("patches_per_slide").get<long>();
  g.seed = j.at("seed").get<std::uint64_t>();
  g.canvas_um = j.at("canvas_um").get<double>();
  g.mpp = j.at("mpp").get<double>();
  g.sigma_fine_um = j.at("sigma_fine_um").get<double>();
  g.train_fraction = j.at("train_fraction").get<double>();
  return g;
}

inline void write_weights(const std::filesystem::path& path, const std::vector<float>& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out.write(kWeightsMagic, sizeof kWeightsMagic);
  std::uint32_t count = static_cast<std::uint32_t>(w.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(w.data()),
            static_cast<std::streamsize>(w.size() * sizeof(float)));
  if (!out) throw io_error("failed writing " + path.string());
}

inline std::vector<float> read_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof magic) != 0)
    throw data_error("bad weights magic in " + path.string());
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in) throw data_error("truncated weights file " + path.string());
  std::vector<float> w(count);
  in.read(reinterpret_cast<char*>(w.data()),
          static_cast<std::streamsize>(w.size() * sizeof(float)));
  if (!in || in.gcount() != static_cast<std::streamsize>(w.size() * sizeof(float)))
    throw data_error("truncated weights file " + path.string());
  return w;
}

}  // namespace detail

inline void save_model(const std::string& dir, const ModelMeta& meta,
                       const std::vector<float>& weights) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create " + dir + ": " + ec.message());

  nlohmann::ordered_json j;
  j["format"] = 1;
  j["kind"] = meta.kind;
  j["task_tag"] = meta.task_tag;
  j["classes"] = meta.classes;
  j["input_policy"] = to_string(meta.policy);
  j["data_hash"] = detail::hash_hex(meta.data_hash);
  if (detail::is_oracle_kind(meta.kind)) {
    j["generator"] = detail::generator_to_json(meta.generator);
  } else {
    j["train"] = detail::train_to_json(meta.train);
    j["epoch_accuracy"] = meta.epoch_accuracy;
    detail::write_weights(fs::path(dir) / "weights.bin", weights);
  }
  std::ofstream out(fs::path(dir) / "spec.json");
  if (!out) throw io_error("cannot write " + dir + "/spec.json");
  out << j.dump(2) << "\n";
  if (!out) throw io_error("failed writing " + dir + "/spec.json");
}

inline LoadedModel load_model(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path spec_path = fs::path(dir) / "spec.json";
  std::ifstream in(spec_path);
  if (!in) throw io_error("cannot read " + spec_path.string());

  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("malformed " + spec_path.string() + ": " + e.what());
  }

  LoadedModel m;
  try {
    m.meta.kind = j.at("kind").get<std::string>();
    m.meta.task_tag = j.at("task_tag").get<std::string>();
    m.meta.classes = j.at("classes").get<std::vector<std::string>>();
    m.meta.policy = parse_input_policy(j.at("input_policy").get<std::string>());
    m.meta.data_hash = detail::parse_hash_hex(j.at("data_hash").get<std::string>());
    if (detail::is_oracle_kind(m.meta.kind)) {
      m.meta.generator = detail::generator_from_json(j.at("generator"));
    } else {
      m.meta.train = detail::train_from_json(j.at("train"));
      if (j.contains("epoch_accuracy"))
        m.meta.epoch_accuracy = j.at("epoch_accuracy").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw data_error("malformed " + spec_path.string() + ": " + e.what());
  }

  if (m.meta.kind == "smallnet") {
    auto net = std::make_unique<SmallNet>(m.meta.classes, m.meta.policy, m.meta.train.seed);
    net->set_weights(detail::read_weights(fs::path(dir) / "weights.bin"));
    m.backbone = std::move(net);
  } else if (m.meta.kind == "linear") {
    auto net = std::make_unique<LinearNet>(m.meta.classes, m.meta.policy, m.meta.train.seed);
    net->set_weights(detail::read_weights(fs::path(dir) / "weights.bin"));
    m.backbone = std::move(net);
  } else if (detail::is_oracle_kind(m.meta.kind)) {
    OracleTask task = parse_oracle_task(m.meta.kind.substr(7));
    auto oracle = std::make_unique<OracleBackbone>(task, m.meta.generator);
    if (oracle->classes() != m.meta.classes)
      throw data_error("class list mismatch for " + m.meta.kind);
    m.backbone = std::move(oracle);
  } else {
    throw data_error("unknown model kind: " + m.meta.kind);
  }
  return m;
}

}  // namespace polyp
