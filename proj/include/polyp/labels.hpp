#pragma once

#include <array>
#include <string>

#include "polyp/common.hpp"

namespace polyp {

// Slide-level diagnosis labels. The string forms are the on-disk vocabulary
// (manifest CSV, directory names, reports) and must not drift.
enum class PolypLabel { NORM, HP, TA_HG, TA_LG, TVA_HG, TVA_LG };

enum class PolypType { NORM, HP, TA, TVA };

enum class Grade { none, LG, HG };

inline constexpr std::array<PolypLabel, 6> all_labels = {
    PolypLabel::NORM,  PolypLabel::HP,     PolypLabel::TA_HG,
    PolypLabel::TA_LG, PolypLabel::TVA_HG, PolypLabel::TVA_LG};

inline const std::string& to_string(PolypLabel label) {
  static const std::array<std::string, 6> names = {"NORM",  "HP",     "TA.HG",
                                                   "TA.LG", "TVA.HG", "TVA.LG"};
  return names[static_cast<int>(label)];
}

inline const std::string& to_string(PolypType type) {
  static const std::array<std::string, 4> names = {"NORM", "HP", "TA", "TVA"};
  return names[static_cast<int>(type)];
}

inline const std::string& to_string(Grade grade) {
  static const std::array<std::string, 3> names = {"", "LG", "HG"};
  return names[static_cast<int>(grade)];
}

inline PolypLabel parse_label(const std::string& s) {
  for (PolypLabel l : all_labels)
    if (to_string(l) == s) return l;
  throw data_error("unknown label '" + s + "'");
}

inline PolypType type_of(PolypLabel label) {
  switch (label) {
    case PolypLabel::NORM: return PolypType::NORM;
    case PolypLabel::HP: return PolypType::HP;
    case PolypLabel::TA_HG:
    case PolypLabel::TA_LG: return PolypType::TA;
    default: return PolypType::TVA;
  }
}

inline Grade grade_of(PolypLabel label) {
  switch (label) {
    case PolypLabel::TA_HG:
    case PolypLabel::TVA_HG: return Grade::HG;
    case PolypLabel::TA_LG:
    case PolypLabel::TVA_LG: return Grade::LG;
    default: return Grade::none;
  }
}

inline bool is_adenoma(PolypLabel label) {
  PolypType t = type_of(label);
  return t == PolypType::TA || t == PolypType::TVA;
}

}  // namespace polyp
