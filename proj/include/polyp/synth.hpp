#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "polyp/geometry.hpp"
#include "polyp/image.hpp"
#include "polyp/labels.hpp"
#include "polyp/manifest.hpp"
#include "polyp/png_io.hpp"
#include "polyp/rng.hpp"
#include "polyp/split.hpp"

namespace polyp {

// Synthetic slides whose class cues live at controlled physical scales.
//
// Every parent patch covers canvas_um of tissue. Texture is a band motif
// whose shape encodes the histotype and only becomes readable once the whole
// field is visible:
//   NORM, HP  straight bands
//   TA        concentric rings (short period, radial gradients)
//   TVA       radial spokes (local wavelength varies with radius)
// HP additionally carries a one-pixel comb along x whose period sums to
// zero, so wide-window averaging erases it; it is only readable near full
// resolution. Adenomas carry dark nuclei dots per fine-grid cell with equal
// dark mass for both grades: low grade clusters the mass into 3x3 blobs,
// high grade scatters it as isolated singles, so grade is only readable at
// full resolution, not after wide averaging.
struct SynthConfig {
  long n_slides_per_class = 2;
  long patches_per_slide = 4;
  std::uint64_t seed = 7;
  double canvas_um = 7000.0;
  double mpp = 4.415;
  double sigma_fine_um = 800.0;
  double train_fraction = 0.7;
};

namespace synthdef {

constexpr double kBandAmplitude = 40.0;
constexpr double kBaseLo = 145.0, kBaseHi = 160.0;
constexpr long kPatchOffsetMax = 3;
constexpr long kCenterJitterMax = 40;
constexpr long kNoiseMax = 4;
// straight-band period range (NORM and HP share it so the two stay
// indistinguishable once the comb is averaged away)
constexpr double kBandPeriodLo = 168.0, kBandPeriodHi = 200.0;
// ring period range, disjoint from the straight-band range
constexpr double kRingPeriodLo = 85.0, kRingPeriodHi = 113.0;
constexpr long kSpokesLo = 12, kSpokesHi = 16;
// motif envelope: quiet center, plateau, quiet rim, both ramps smooth
constexpr double kEnvelopeInner = 250.0, kEnvelopeInnerEnd = 330.0;
constexpr double kEnvelopeOuterStart = 730.0, kEnvelopeOuter = 810.0;
// zero-sum comb added along x for HP
constexpr std::array<double, 7> kComb = {36.0, -6.0, -6.0, -6.0, -6.0, -6.0, -6.0};
constexpr std::uint8_t kDotValue = 30;
constexpr long kDotCountLo = 6, kDotCountHi = 10;
constexpr int kDotInset = 4;
constexpr int kBlobSide = 3, kBlobPitch = 7;
constexpr int kSinglePitch = 3;
// fixed warm tint so the three channels differ without new information
constexpr double kTintRed = 10.0, kTintBlue = 5.0;

}  // namespace synthdef

struct SlideParams {
  double base;
  double period;
  double angle;
  long spokes;
};

inline SlideParams slide_params(const SynthConfig& cfg, std::size_t class_idx,
                                long slide_idx) {
  auto rng = derive_stream({cfg.seed, 1, class_idx, static_cast<std::uint64_t>(slide_idx)});
  SlideParams p{};
  p.base = rng.range(synthdef::kBaseLo, synthdef::kBaseHi);
  PolypType type = type_of(all_labels[class_idx]);
  bool rings = type == PolypType::TA;
  p.period = rings ? rng.range(synthdef::kRingPeriodLo, synthdef::kRingPeriodHi)
                   : rng.range(synthdef::kBandPeriodLo, synthdef::kBandPeriodHi);
  p.angle = rng.range(0.0, 3.14159265358979323846);
  p.spokes = rng.irange(synthdef::kSpokesLo, synthdef::kSpokesHi);
  return p;
}

namespace detail {

inline double smoothstep01(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

inline double envelope(double r) {
  using namespace synthdef;
  double up = smoothstep01((r - kEnvelopeInner) / (kEnvelopeInnerEnd - kEnvelopeInner));
  double down = 1.0 - smoothstep01((r - kEnvelopeOuterStart) / (kEnvelopeOuter - kEnvelopeOuterStart));
  return up * down;
}

// Scatter the nuclei dots of one fine-grid cell. Sites live on an inset
// sub-grid, so dots never touch each other, the cell border, or a neighbor
// cell's dots.
inline void draw_cell_dots(Image& img, const SynthConfig& cfg, std::size_t class_idx,
                           long slide_idx, long patch_idx, long cell_idx, long cell_x,
                           long cell_y, int cell_side, Grade grade) {
  using namespace synthdef;
  auto rng = derive_stream({cfg.seed, 3, class_idx, static_cast<std::uint64_t>(slide_idx),
                            static_cast<std::uint64_t>(patch_idx),
                            static_cast<std::uint64_t>(cell_idx)});
  long k = rng.irange(kDotCountLo, kDotCountHi);
  int pitch = grade == Grade::LG ? kBlobPitch : kSinglePitch;
  int extent = grade == Grade::LG ? kBlobSide : 1;
  int sites = (cell_side - 2 * kDotInset - extent) / pitch + 1;
  long want = grade == Grade::LG ? k : 9 * k;
  std::vector<bool> used(static_cast<std::size_t>(sites) * sites, false);
  if (want > static_cast<long>(used.size()))
    throw data_error("fine cell of " + std::to_string(cell_side) +
                     " px cannot hold " + std::to_string(want) +
                     " nuclei dots; use a larger sigma_fine_um or a smaller mpp");
  for (long placed = 0; placed < want;) {
    auto site = rng.below(static_cast<std::uint64_t>(sites) * sites);
    if (used[site]) continue;
    used[site] = true;
    ++placed;
    int sx = static_cast<int>(site % static_cast<std::uint64_t>(sites));
    int sy = static_cast<int>(site / static_cast<std::uint64_t>(sites));
    long x0 = cell_x + kDotInset + static_cast<long>(sx) * pitch;
    long y0 = cell_y + kDotInset + static_cast<long>(sy) * pitch;
    for (int dy = 0; dy < extent; ++dy)
      for (int dx = 0; dx < extent; ++dx)
        for (int c = 0; c < 3; ++c)
          img.at(static_cast<int>(x0) + dx, static_cast<int>(y0) + dy, c) = kDotValue;
  }
}

}  // namespace detail

// Render one parent patch at full canvas resolution.
inline Image render_parent(const SynthConfig& cfg, PolypLabel label, long slide_idx,
                           long patch_idx) {
  using namespace synthdef;
  std::size_t class_idx = static_cast<std::size_t>(label);
  int side = scale_to_pixels(cfg.canvas_um, cfg.mpp);
  SlideParams sp = slide_params(cfg, class_idx, slide_idx);
  auto rng = derive_stream({cfg.seed, 2, class_idx, static_cast<std::uint64_t>(slide_idx),
                            static_cast<std::uint64_t>(patch_idx)});
  double offset = static_cast<double>(rng.irange(-kPatchOffsetMax, kPatchOffsetMax));
  double cx = (side - 1) / 2.0 + static_cast<double>(rng.irange(-kCenterJitterMax, kCenterJitterMax));
  double cy = (side - 1) / 2.0 + static_cast<double>(rng.irange(-kCenterJitterMax, kCenterJitterMax));

  PolypType type = type_of(label);
  double ca = std::cos(sp.angle), sa = std::sin(sp.angle);
  double tau = 2.0 * 3.14159265358979323846;

  Image img(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double dx = x - cx, dy = y - cy;
      double r = std::sqrt(dx * dx + dy * dy);
      double motif;
      switch (type) {
        case PolypType::TA:
          motif = std::sin(tau * r / sp.period);
          break;
        case PolypType::TVA:
          motif = std::sin(static_cast<double>(sp.spokes) * std::atan2(dy, dx));
          break;
        default:
          motif = std::sin(tau * (dx * ca + dy * sa) / sp.period);
          break;
      }
      double v = sp.base + offset + kBandAmplitude * detail::envelope(r) * motif;
      if (type == PolypType::HP) v += kComb[static_cast<std::size_t>(x % 7)];
      v += static_cast<double>(rng.irange(-kNoiseMax, kNoiseMax));
      auto quantize = [](double q) {
        double f = std::floor(q + 0.5);
        if (f < 0.0) f = 0.0;
        if (f > 255.0) f = 255.0;
        return static_cast<std::uint8_t>(f);
      };
      img.at(x, y, 0) = quantize(v + kTintRed);
      img.at(x, y, 1) = quantize(v);
      img.at(x, y, 2) = quantize(v + kTintBlue);
    }
  }

  if (is_adenoma(label)) {
    int fine = scale_to_pixels(cfg.sigma_fine_um, cfg.mpp);
    auto grid = tile_grid(side, side, fine);
    for (std::size_t i = 0; i < grid.origins.size(); ++i)
      detail::draw_cell_dots(img, cfg, class_idx, slide_idx, patch_idx,
                             static_cast<long>(i), grid.origins[i].x, grid.origins[i].y,
                             fine, grade_of(label));
  }
  return img;
}

inline std::string synth_slide_id(PolypLabel label, long slide_idx) {
  std::string name;
  for (char c : to_string(label))
    if (c != '.') name += c;
  return name + "_s" + std::to_string(slide_idx);
}

// Generate the whole corpus under root: parent patches as PNG files in the
// canonical layout plus a manifest with a stratified slide-level split.
inline Manifest generate_corpus(const SynthConfig& cfg, const std::string& root) {
  namespace fs = std::filesystem;
  if (cfg.n_slides_per_class < 1 || cfg.patches_per_slide < 1)
    throw std::invalid_argument("corpus needs at least one slide and patch per class");
  int side = scale_to_pixels(cfg.canvas_um, cfg.mpp);

  Manifest m;
  m.mpp = cfg.mpp;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw io_error("cannot create corpus root: " + root);

  for (std::size_t ci = 0; ci < all_labels.size(); ++ci) {
    PolypLabel label = all_labels[ci];
    for (long s = 0; s < cfg.n_slides_per_class; ++s) {
      for (long p = 0; p < cfg.patches_per_slide; ++p) {
        PatchRecord r;
        r.slide_id = synth_slide_id(label, s);
        r.label = label;
        r.scale_um = cfg.canvas_um;
        r.side_px = side;
        r.x_px = p * side;
        r.y_px = 0;
        r.patch_id = r.slide_id + "_" + format_number(r.scale_um) + "_" +
                     std::to_string(r.x_px) + "_" + std::to_string(r.y_px);
        r.path = patch_rel_path(r);

        fs::path file = fs::path(root) / r.path;
        fs::create_directories(file.parent_path(), ec);
        if (ec) throw io_error("cannot create directory: " + file.parent_path().string());
        write_png(file.string(), render_parent(cfg, label, s, p));
        m.records.push_back(std::move(r));
      }
    }
  }

  assign_split(m, cfg.train_fraction, cfg.seed);
  validate_manifest(m);
  write_manifest(m, (fs::path(root) / "manifest.csv").string());
  return m;
}

}  // namespace polyp
