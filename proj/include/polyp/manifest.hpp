#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyp/common.hpp"
#include "polyp/geometry.hpp"
#include "polyp/labels.hpp"
#include "polyp/split.hpp"

namespace polyp {

enum class Split { train, test };

inline const std::string& to_string(Split s) {
  static const std::string names[2] = {"train", "test"};
  return names[static_cast<int>(s)];
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw data_error("unknown split '" + s + "'");
}

// Shortest decimal that parses back to the same double; integers print plain.
inline std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream out;
    out << static_cast<long long>(v);
    return out.str();
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream out;
    out.precision(prec);
    out << v;
    if (std::stod(out.str()) == v) return out.str();
  }
  return std::to_string(v);
}

struct PatchRecord {
  std::string patch_id;
  std::string slide_id;
  Split split = Split::train;
  PolypLabel label = PolypLabel::NORM;
  double scale_um = 0.0;
  long x_px = 0;
  long y_px = 0;
  int side_px = 0;
  std::string path;  // relative to the dataset root
};

struct Manifest {
  double mpp = 0.4415;
  std::vector<PatchRecord> records;
};

inline constexpr const char* manifest_header =
    "patch_id,slide_id,split,label,type,grade,scale_um,x_px,y_px,side_px,path";

// Canonical on-disk location of a patch image.
inline std::string patch_rel_path(const PatchRecord& r) {
  return to_string(r.label) + "/" + r.slide_id + "/" + format_number(r.scale_um) + "/" +
         r.patch_id + ".png";
}

namespace detail {

inline void check_csv_field(const std::string& field, const std::string& what) {
  if (field.empty()) throw data_error(what + " must not be empty");
  if (field.find_first_of(",\r\n") != std::string::npos)
    throw data_error(what + " '" + field + "' contains characters not allowed in the manifest");
}

}  // namespace detail

inline void validate_manifest(const Manifest& m) {
  if (!(m.mpp > 0.0)) throw data_error("manifest mpp must be positive");
  std::set<std::string> seen_ids;
  std::map<std::string, PolypLabel> slide_label;
  std::map<std::string, Split> slide_split;
  for (const auto& r : m.records) {
    detail::check_csv_field(r.patch_id, "patch_id");
    detail::check_csv_field(r.slide_id, "slide_id");
    detail::check_csv_field(r.path, "path");
    if (!seen_ids.insert(r.patch_id).second)
      throw data_error("duplicate patch_id '" + r.patch_id + "'");
    if (!(r.scale_um > 0.0)) throw data_error("patch '" + r.patch_id + "' has non-positive scale_um");
    if (r.x_px < 0 || r.y_px < 0)
      throw data_error("patch '" + r.patch_id + "' has a negative grid position");
    int expect = scale_to_pixels(r.scale_um, m.mpp);
    if (r.side_px != expect)
      throw data_error("patch '" + r.patch_id + "' side_px " + std::to_string(r.side_px) +
                       " does not match scale " + format_number(r.scale_um) + " um at mpp " +
                       format_number(m.mpp) + " (expected " + std::to_string(expect) + ")");
    auto [it, fresh] = slide_label.emplace(r.slide_id, r.label);
    if (!fresh && it->second != r.label)
      throw data_error("slide '" + r.slide_id + "' carries more than one label");
    auto [st, fresh2] = slide_split.emplace(r.slide_id, r.split);
    if (!fresh2 && st->second != r.split)
      throw data_error("slide '" + r.slide_id + "' appears in both splits");
  }
}

inline void write_manifest(const Manifest& m, const std::string& path) {
  validate_manifest(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot create manifest " + path);
  out << manifest_header << "\n";
  out << "# mpp=" << format_number(m.mpp) << "\n";
  for (const auto& r : m.records) {
    out << r.patch_id << ',' << r.slide_id << ',' << to_string(r.split) << ','
        << to_string(r.label) << ',' << to_string(type_of(r.label)) << ','
        << to_string(grade_of(r.label)) << ',' << format_number(r.scale_um) << ','
        << r.x_px << ',' << r.y_px << ',' << r.side_px << ',' << r.path << "\n";
  }
  if (!out) throw io_error("failed writing manifest " + path);
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open manifest " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("manifest " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != manifest_header)
    throw data_error("manifest " + path + " has an unexpected header");

  Manifest m;
  m.mpp = 0.0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find("mpp=");
      if (eq != std::string::npos) m.mpp = std::stod(line.substr(eq + 4));
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 11)
      throw data_error(path + ":" + std::to_string(lineno) + ": expected 11 fields, got " +
                       std::to_string(fields.size()));
    PatchRecord r;
    try {
      r.patch_id = fields[0];
      r.slide_id = fields[1];
      r.split = parse_split(fields[2]);
      r.label = parse_label(fields[3]);
      r.scale_um = std::stod(fields[6]);
      r.x_px = std::stol(fields[7]);
      r.y_px = std::stol(fields[8]);
      r.side_px = std::stoi(fields[9]);
      r.path = fields[10];
    } catch (const data_error&) {
      throw;
    } catch (const std::exception&) {
      throw data_error(path + ":" + std::to_string(lineno) + ": malformed record");
    }
    if (fields[4] != to_string(type_of(r.label)) || fields[5] != to_string(grade_of(r.label)))
      throw data_error(path + ":" + std::to_string(lineno) +
                       ": type/grade columns disagree with label " + fields[3]);
    m.records.push_back(std::move(r));
  }
  if (!(m.mpp > 0.0)) throw data_error("manifest " + path + " is missing its '# mpp=' line");
  validate_manifest(m);
  return m;
}

// Reads just the IHDR chunk; build_manifest needs dimensions, not pixels.
inline std::pair<int, int> read_png_dims(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  unsigned char buf[24];
  in.read(reinterpret_cast<char*>(buf), 24);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (!in || !std::equal(sig, sig + 8, buf) || std::string(buf + 12, buf + 16) != "IHDR")
    throw io_error(path + " is not a PNG file");
  auto be32 = [&](int off) {
    return (static_cast<int>(buf[off]) << 24) | (static_cast<int>(buf[off + 1]) << 16) |
           (static_cast<int>(buf[off + 2]) << 8) | static_cast<int>(buf[off + 3]);
  };
  return {be32(16), be32(20)};
}

// Scans the canonical <root>/<label>/<slide>/<scale>/<patch>.png layout.
// Per-file problems (stray files, unparseable names, non-square images) are
// collected into `issues`; structural problems (duplicate ids) still throw.
inline Manifest build_manifest(const std::string& root_dir, double mpp,
                               std::vector<std::string>* issues = nullptr) {
  namespace fs = std::filesystem;
  if (!(mpp > 0.0)) throw std::invalid_argument("mpp must be positive");
  if (!fs::is_directory(root_dir)) throw io_error(root_dir + " is not a directory");

  auto note = [&](const std::string& msg) {
    if (issues) issues->push_back(msg);
  };

  Manifest m;
  m.mpp = mpp;
  for (const auto& label_entry : fs::directory_iterator(root_dir)) {
    if (!label_entry.is_directory()) {
      // the corpus's own manifest lives at the root and is not a stray
      if (label_entry.path().filename() != "manifest.csv")
        note("stray file " + label_entry.path().string());
      continue;
    }
    PolypLabel label;
    try {
      label = parse_label(label_entry.path().filename().string());
    } catch (const data_error&) {
      note("directory " + label_entry.path().string() + " is not a label");
      continue;
    }
    for (const auto& slide_entry : fs::directory_iterator(label_entry.path())) {
      if (!slide_entry.is_directory()) {
        note("stray file " + slide_entry.path().string());
        continue;
      }
      std::string slide_id = slide_entry.path().filename().string();
      for (const auto& scale_entry : fs::directory_iterator(slide_entry.path())) {
        if (!scale_entry.is_directory()) {
          note("stray file " + scale_entry.path().string());
          continue;
        }
        double scale_um = 0.0;
        try {
          std::size_t pos = 0;
          std::string name = scale_entry.path().filename().string();
          scale_um = std::stod(name, &pos);
          if (pos != name.size() || !(scale_um > 0.0)) throw std::invalid_argument("");
        } catch (const std::exception&) {
          note("directory " + scale_entry.path().string() + " is not a scale");
          continue;
        }
        for (const auto& file : fs::directory_iterator(scale_entry.path())) {
          if (!file.is_regular_file() || file.path().extension() != ".png") {
            note("skipping " + file.path().string());
            continue;
          }
          std::string stem = file.path().stem().string();
          // <slide>_<scale>_<x>_<y>, parsed from the right since slide ids
          // may themselves contain underscores
          PatchRecord r;
          r.patch_id = stem;
          r.slide_id = slide_id;
          r.label = label;
          r.scale_um = scale_um;
          auto p3 = stem.rfind('_');
          auto p2 = p3 == std::string::npos ? std::string::npos : stem.rfind('_', p3 - 1);
          auto p1 = p2 == std::string::npos ? std::string::npos : stem.rfind('_', p2 - 1);
          bool ok = p1 != std::string::npos && p1 > 0;
          if (ok) {
            try {
              r.x_px = std::stol(stem.substr(p2 + 1, p3 - p2 - 1));
              r.y_px = std::stol(stem.substr(p3 + 1));
              double id_scale = std::stod(stem.substr(p1 + 1, p2 - p1 - 1));
              ok = id_scale == scale_um && stem.substr(0, p1) == slide_id && r.x_px >= 0 &&
                   r.y_px >= 0;
            } catch (const std::exception&) {
              ok = false;
            }
          }
          if (!ok) {
            note("unparseable patch filename " + file.path().string());
            continue;
          }
          try {
            auto [w, h] = read_png_dims(file.path().string());
            if (w != h) {
              note("non-square patch " + file.path().string());
              continue;
            }
            r.side_px = w;
          } catch (const io_error& e) {
            note(e.what());
            continue;
          }
          r.path = to_string(label) + "/" + slide_id + "/" +
                   scale_entry.path().filename().string() + "/" + stem + ".png";
          m.records.push_back(std::move(r));
        }
      }
    }
  }
  std::sort(m.records.begin(), m.records.end(),
            [](const PatchRecord& a, const PatchRecord& b) { return a.path < b.path; });
  validate_manifest(m);
  return m;
}

// Assigns slide-level splits in place, stratified by label.
inline void assign_split(Manifest& m, double train_fraction, std::uint64_t seed) {
  std::map<std::string, PolypLabel> slide_labels;
  for (const auto& r : m.records) slide_labels.emplace(r.slide_id, r.label);
  SlideSplit split = split_slides(slide_labels, train_fraction, seed);
  std::set<std::string> train(split.train.begin(), split.train.end());
  for (auto& r : m.records)
    r.split = train.count(r.slide_id) ? Split::train : Split::test;
}

struct DistributionRow {
  PolypLabel label;
  double scale_um;
  long patches;
};

struct ClassDistribution {
  std::map<PolypLabel, long> slides;
  std::vector<DistributionRow> rows;  // sorted by (label, scale)

  long patches_at(PolypLabel label, double scale_um) const {
    for (const auto& row : rows)
      if (row.label == label && row.scale_um == scale_um) return row.patches;
    return 0;
  }

  long total_slides() const {
    long n = 0;
    for (const auto& [label, count] : slides) n += count;
    return n;
  }

  long total_patches(double scale_um) const {
    long n = 0;
    for (const auto& row : rows)
      if (row.scale_um == scale_um) n += row.patches;
    return n;
  }
};

inline ClassDistribution class_distribution(const Manifest& m) {
  ClassDistribution dist;
  std::map<PolypLabel, std::set<std::string>> slide_sets;
  std::map<std::pair<int, double>, long> patch_counts;
  for (const auto& r : m.records) {
    slide_sets[r.label].insert(r.slide_id);
    patch_counts[{static_cast<int>(r.label), r.scale_um}]++;
  }
  for (PolypLabel label : all_labels)
    if (slide_sets.count(label)) dist.slides[label] = static_cast<long>(slide_sets[label].size());
  for (const auto& [key, count] : patch_counts)
    dist.rows.push_back({static_cast<PolypLabel>(key.first), key.second, count});
  std::sort(dist.rows.begin(), dist.rows.end(), [](const DistributionRow& a, const DistributionRow& b) {
    if (a.label != b.label) return static_cast<int>(a.label) < static_cast<int>(b.label);
    return a.scale_um < b.scale_um;
  });
  return dist;
}

}  // namespace polyp
