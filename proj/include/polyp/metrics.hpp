#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyp/common.hpp"
#include "polyp/image.hpp"
#include "polyp/labels.hpp"
#include "polyp/png_io.hpp"

namespace polyp {

// Square confusion matrix over a fixed class list. Rows index the true class,
// columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes)
      : classes_(std::move(classes)),
        counts_(classes_.size() * classes_.size(), 0) {
    if (classes_.size() < 2)
      throw std::invalid_argument("confusion matrix needs at least 2 classes");
    for (std::size_t i = 0; i < classes_.size(); ++i)
      for (std::size_t j = i + 1; j < classes_.size(); ++j)
        if (classes_[i] == classes_[j])
          throw std::invalid_argument("duplicate class name: " + classes_[i]);
  }

  std::size_t size() const { return classes_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }

  std::size_t index_of(const std::string& name) const {
    auto it = std::find(classes_.begin(), classes_.end(), name);
    if (it == classes_.end()) throw data_error("unknown class: " + name);
    return static_cast<std::size_t>(it - classes_.begin());
  }

  void add(std::size_t true_idx, std::size_t pred_idx, long count = 1) {
    check(true_idx);
    check(pred_idx);
    counts_[true_idx * size() + pred_idx] += count;
  }
  void add(const std::string& true_name, const std::string& pred_name) {
    add(index_of(true_name), index_of(pred_name));
  }

  long at(std::size_t true_idx, std::size_t pred_idx) const {
    check(true_idx);
    check(pred_idx);
    return counts_[true_idx * size() + pred_idx];
  }

  long row_total(std::size_t true_idx) const {
    long t = 0;
    for (std::size_t j = 0; j < size(); ++j) t += at(true_idx, j);
    return t;
  }

  long total() const {
    long t = 0;
    for (long c : counts_) t += c;
    return t;
  }

 private:
  void check(std::size_t idx) const {
    if (idx >= classes_.size()) throw std::invalid_argument("class index out of range");
  }

  std::vector<std::string> classes_;
  std::vector<long> counts_;
};

// Per-class recall, computed row by row. Every class must have support.
inline std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> recalls;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    long support = cm.row_total(i);
    if (support == 0)
      throw data_error("class has no true examples: " + cm.classes()[i]);
    recalls.push_back(static_cast<double>(cm.at(i, i)) / static_cast<double>(support));
  }
  return recalls;
}

// Balanced accuracy: unweighted mean of per-class recalls.
inline double balanced_accuracy(const ConfusionMatrix& cm) {
  auto recalls = per_class_recall(cm);
  double sum = 0.0;
  for (double r : recalls) sum += r;
  return sum / static_cast<double>(recalls.size());
}

struct BinaryStats {
  double sensitivity;
  double specificity;
  double balanced_accuracy;
};

// One-vs-rest reduction for a single class. Sensitivity is the recall of the
// positive class; specificity is the recall of everything else pooled.
inline BinaryStats one_vs_rest(const ConfusionMatrix& cm, std::size_t positive) {
  if (positive >= cm.size()) throw std::invalid_argument("class index out of range");
  long tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    for (std::size_t j = 0; j < cm.size(); ++j) {
      long c = cm.at(i, j);
      if (i == positive) {
        (j == positive ? tp : fn) += c;
      } else {
        (j == positive ? fp : tn) += c;
      }
    }
  }
  if (tp + fn == 0)
    throw data_error("class has no true examples: " + cm.classes()[positive]);
  if (tn + fp == 0)
    throw data_error("no true examples outside class: " + cm.classes()[positive]);
  BinaryStats s{};
  s.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
  s.balanced_accuracy = (s.sensitivity + s.specificity) / 2.0;
  return s;
}

inline BinaryStats one_vs_rest(const ConfusionMatrix& cm, const std::string& name) {
  return one_vs_rest(cm, cm.index_of(name));
}

// Collapse a six-way polyp matrix onto histotypes, merging the two grades of
// each adenoma type. Class order of the result is fixed.
inline ConfusionMatrix collapse_to_type(const ConfusionMatrix& cm) {
  std::vector<std::string> type_names = {"HP", "NORM", "TA", "TVA"};
  auto type_index = [&](const std::string& label_name) {
    PolypType t = type_of(parse_label(label_name));
    switch (t) {
      case PolypType::HP: return std::size_t{0};
      case PolypType::NORM: return std::size_t{1};
      case PolypType::TA: return std::size_t{2};
      case PolypType::TVA: return std::size_t{3};
    }
    throw std::logic_error("unreachable");
  };
  ConfusionMatrix out(type_names);
  for (std::size_t i = 0; i < cm.size(); ++i)
    for (std::size_t j = 0; j < cm.size(); ++j)
      out.add(type_index(cm.classes()[i]), type_index(cm.classes()[j]), cm.at(i, j));
  return out;
}

// Fixed-point presentation rounding: two decimals, ties away from zero.
inline std::string format_2dp(double v) {
  bool neg = v < 0.0;
  long scaled = static_cast<long>(std::floor(std::abs(v) * 100.0 + 0.5));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%ld.%02ld", neg ? "-" : "", scaled / 100, scaled % 100);
  return buf;
}

inline nlohmann::ordered_json metrics_json(const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  j["classes"] = cm.classes();
  auto& rows = j["counts"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < cm.size(); ++k) row.push_back(cm.at(i, k));
    rows.push_back(row);
  }
  j["total"] = cm.total();
  j["balanced_accuracy"] = balanced_accuracy(cm);
  auto& per = j["per_class"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    auto s = one_vs_rest(cm, i);
    per[cm.classes()[i]] = {{"sensitivity", s.sensitivity},
                            {"specificity", s.specificity},
                            {"balanced_accuracy", s.balanced_accuracy}};
  }
  return j;
}

// Plain-text report: the count matrix plus one-vs-rest statistics, columns
// aligned for terminal reading.
inline std::string format_report(const ConfusionMatrix& cm) {
  std::size_t w = 5;
  for (const auto& c : cm.classes()) w = std::max(w, c.size());
  for (std::size_t i = 0; i < cm.size(); ++i)
    for (std::size_t j = 0; j < cm.size(); ++j)
      w = std::max(w, std::to_string(cm.at(i, j)).size());
  auto pad = [&](const std::string& s) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };

  std::string out = "true \\ pred";
  std::string head_pad(out.size(), ' ');
  for (const auto& c : cm.classes()) out += "  " + pad(c);
  out += "\n";
  for (std::size_t i = 0; i < cm.size(); ++i) {
    std::string row = cm.classes()[i];
    row.resize(head_pad.size(), ' ');
    for (std::size_t j = 0; j < cm.size(); ++j)
      row += "  " + pad(std::to_string(cm.at(i, j)));
    out += row + "\n";
  }
  out += "\n";
  std::size_t sw = std::max<std::size_t>(w, 7);
  auto spad = [&](const std::string& s) {
    return std::string(sw > s.size() ? sw - s.size() : 0, ' ') + s;
  };
  out += head_pad + "  " + spad("sens") + "  " + spad("spec") + "  " + spad("bal_acc") + "\n";
  for (std::size_t i = 0; i < cm.size(); ++i) {
    auto s = one_vs_rest(cm, i);
    std::string row = cm.classes()[i];
    row.resize(head_pad.size(), ' ');
    row += "  " + spad(format_2dp(s.sensitivity));
    row += "  " + spad(format_2dp(s.specificity));
    row += "  " + spad(format_2dp(s.balanced_accuracy));
    out += row + "\n";
  }
  out += "\nbalanced accuracy: " + format_2dp(balanced_accuracy(cm)) + "\n";
  return out;
}

// Confusion heat map as a PNG. Each cell is a solid block shaded from white
// (empty) to deep blue (row maximum), with a light grid between cells.
inline void write_heatmap_png(const ConfusionMatrix& cm, const std::string& path,
                              int cell = 32) {
  if (cell < 2) throw std::invalid_argument("cell size too small");
  int k = static_cast<int>(cm.size());
  int side = k * cell + (k + 1);
  Image img = Image::filled(side, side, 180, 180, 180);
  long max_count = 1;
  for (std::size_t i = 0; i < cm.size(); ++i)
    for (std::size_t j = 0; j < cm.size(); ++j) max_count = std::max(max_count, cm.at(i, j));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      long c = cm.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      // interpolate white (255,255,255) toward blue (8,48,107)
      double t = static_cast<double>(c) / static_cast<double>(max_count);
      auto lerp = [&](int a, int b) {
        return static_cast<std::uint8_t>(
            std::floor(a + (b - a) * t + 0.5));
      };
      std::uint8_t r = lerp(255, 8), g = lerp(255, 48), b = lerp(255, 107);
      int x0 = 1 + j * (cell + 1);
      int y0 = 1 + i * (cell + 1);
      for (int y = 0; y < cell; ++y) {
        for (int x = 0; x < cell; ++x) {
          img.at(x0 + x, y0 + y, 0) = r;
          img.at(x0 + x, y0 + y, 1) = g;
          img.at(x0 + x, y0 + y, 2) = b;
        }
      }
    }
  }
  write_png(path, img);
}

}  // namespace polyp
