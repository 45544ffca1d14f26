#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "polyp/common.hpp"
#include "polyp/image.hpp"
#include "polyp/image_stats.hpp"
#include "polyp/rng.hpp"
#include "polyp/synth.hpp"

namespace polyp {

enum class InputPolicy { fixed_224, variable_full_res };

inline std::string to_string(InputPolicy p) {
  return p == InputPolicy::fixed_224 ? "fixed_224" : "variable_full_res";
}

inline InputPolicy parse_input_policy(const std::string& s) {
  if (s == "fixed_224") return InputPolicy::fixed_224;
  if (s == "variable_full_res") return InputPolicy::variable_full_res;
  throw data_error("unknown input policy: " + s);
}

// A classifier over images. Implementations must be deterministic at
// inference time and return a normalized probability vector.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual std::vector<double> predict(const Image& img) const = 0;
  virtual const std::vector<std::string>& classes() const = 0;
  virtual InputPolicy input_policy() const = 0;
  virtual int min_side() const { return 32; }

 protected:
  void check_input(const Image& img) const {
    if (img.width != img.height)
      throw std::invalid_argument("classifier input must be square");
    if (input_policy() == InputPolicy::fixed_224) {
      if (img.width != 224)
        throw std::invalid_argument("this model expects 224x224 input, got " +
                                    std::to_string(img.width));
    } else if (img.width < min_side()) {
      throw std::invalid_argument("input side below the model minimum of " +
                                  std::to_string(min_side()));
    }
  }
};

struct ColorJitterParams {
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.05;

  bool is_identity() const {
    return brightness == 0.0 && contrast == 0.0 && saturation == 0.0 && hue == 0.0;
  }
  void validate() const {
    if (brightness < 0 || contrast < 0 || saturation < 0 || hue < 0)
      throw std::invalid_argument("jitter half-ranges must be non-negative");
  }
};

namespace detail {

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  double d = mx - mn;
  s = mx == 0.0 ? 0.0 : d / mx;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = (g - b) / d / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
  if (h < 0.0) h += 1.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  if (s == 0.0) {
    r = g = b = v;
    return;
  }
  h = h - std::floor(h);
  double f = h * 6.0;
  int i = static_cast<int>(std::floor(f)) % 6;
  f -= std::floor(f);
  double p = v * (1.0 - s);
  double q = v * (1.0 - s * f);
  double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace detail

// Photometric augmentation. Factors are drawn once per call in the fixed
// order brightness, contrast, saturation, hue; multiplicative factors come
// from [1-p, 1+p], the hue shift from [-p, +p] turns of the color wheel.
// Stages whose parameter is zero are skipped entirely, so all-zero
// parameters reproduce the input bit for bit.
inline Image color_jitter(const Image& img, const ColorJitterParams& params, Rng& rng) {
  params.validate();
  if (params.is_identity()) return img;

  double fb = rng.range(1.0 - params.brightness, 1.0 + params.brightness);
  double fc = rng.range(1.0 - params.contrast, 1.0 + params.contrast);
  double fs = rng.range(1.0 - params.saturation, 1.0 + params.saturation);
  double fh = rng.range(-params.hue, params.hue);

  std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<double> r(n), g(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = img.data[i * 3];
    g[i] = img.data[i * 3 + 1];
    b[i] = img.data[i * 3 + 2];
  }

  auto luminance_of = [&](std::size_t i) {
    return 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  };

  if (params.brightness > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      r[i] *= fb;
      g[i] *= fb;
      b[i] *= fb;
    }
  }
  if (params.contrast > 0.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += luminance_of(i);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = mean + (r[i] - mean) * fc;
      g[i] = mean + (g[i] - mean) * fc;
      b[i] = mean + (b[i] - mean) * fc;
    }
  }
  if (params.saturation > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double l = luminance_of(i);
      r[i] = l + (r[i] - l) * fs;
      g[i] = l + (g[i] - l) * fs;
      b[i] = l + (b[i] - l) * fs;
    }
  }
  if (params.hue > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double h, s, v;
      detail::rgb_to_hsv(std::clamp(r[i], 0.0, 255.0), std::clamp(g[i], 0.0, 255.0),
                         std::clamp(b[i], 0.0, 255.0), h, s, v);
      detail::hsv_to_rgb(h + fh, s, v, r[i], g[i], b[i]);
    }
  }

  Image out(img.width, img.height);
  auto quantize = [](double v) {
    double f = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(f, 0.0, 255.0));
  };
  for (std::size_t i = 0; i < n; ++i) {
    out.data[i * 3] = quantize(r[i]);
    out.data[i * 3 + 1] = quantize(g[i]);
    out.data[i * 3 + 2] = quantize(b[i]);
  }
  return out;
}

enum class OracleTask { hp, adenoma, grade };

inline std::string to_string(OracleTask t) {
  switch (t) {
    case OracleTask::hp: return "hp";
    case OracleTask::adenoma: return "adenoma";
    case OracleTask::grade: return "grade";
  }
  throw std::logic_error("unreachable");
}

inline OracleTask parse_oracle_task(const std::string& s) {
  if (s == "hp") return OracleTask::hp;
  if (s == "adenoma") return OracleTask::adenoma;
  if (s == "grade") return OracleTask::grade;
  throw data_error("unknown oracle task: " + s);
}

// Scripted classifier that reads the synthetic generator's cue statistics
// directly. Near-one-hot on its designed scale, exactly uniform when the
// input does not come from that scale. Thresholds sit midway between the
// measured cue distributions of the generator.
class OracleBackbone : public Backbone {
 public:
  static constexpr double kRingThreshold = 8.0;
  static constexpr double kCombThreshold = 6.0;
  static constexpr double kAlignConcentric = 0.75;
  static constexpr double kAlignRadial = 0.25;
  static constexpr long kDarkMin = 20;
  static constexpr long kInteriorMin = 3;

  OracleBackbone(OracleTask task, SynthConfig generator)
      : task_(task), generator_(generator) {
    switch (task_) {
      case OracleTask::hp: classes_ = {"rest", "HP"}; break;
      case OracleTask::adenoma: classes_ = {"NORM", "TA", "TVA"}; break;
      case OracleTask::grade: classes_ = {"LG", "HG"}; break;
    }
  }

  OracleTask task() const { return task_; }
  const SynthConfig& generator() const { return generator_; }

  InputPolicy input_policy() const override {
    return task_ == OracleTask::grade ? InputPolicy::variable_full_res
                                      : InputPolicy::fixed_224;
  }
  const std::vector<std::string>& classes() const override { return classes_; }

  std::vector<double> predict(const Image& img) const override {
    check_input(img);
    switch (task_) {
      case OracleTask::hp: return predict_hp(img);
      case OracleTask::adenoma: return predict_adenoma(img);
      case OracleTask::grade: return predict_grade(img);
    }
    throw std::logic_error("unreachable");
  }

 private:
  // a whole-field view has its band energy away from the quiet center and
  // carries no nuclei-dark pixels
  static bool looks_coarse(const Image& img) {
    return ring_ratio(img) > kRingThreshold && dark_stats(img).dark == 0;
  }

  std::vector<double> predict_hp(const Image& img) const {
    if (looks_coarse(img)) return {0.5, 0.5};
    return horizontal_step_mean(img) > kCombThreshold
               ? std::vector<double>{0.005, 0.995}
               : std::vector<double>{0.995, 0.005};
  }

  std::vector<double> predict_adenoma(const Image& img) const {
    if (!looks_coarse(img)) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double a = gradient_alignment(img);
    if (a < 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    if (a > kAlignConcentric) return {0.005, 0.990, 0.005};
    if (a < kAlignRadial) return {0.005, 0.005, 0.990};
    return {0.990, 0.005, 0.005};
  }

  std::vector<double> predict_grade(const Image& img) const {
    auto d = dark_stats(img);
    if (d.dark < kDarkMin) return {0.5, 0.5};
    return d.interior >= kInteriorMin ? std::vector<double>{0.995, 0.005}
                                     : std::vector<double>{0.005, 0.995};
  }

  OracleTask task_;
  SynthConfig generator_;
  std::vector<std::string> classes_;
};

}  // namespace polyp
