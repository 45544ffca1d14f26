#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "polyp/backbone.hpp"
#include "polyp/common.hpp"
#include "polyp/image.hpp"
#include "polyp/rng.hpp"

namespace polyp {

struct TrainConfig {
  long epochs = 50;
  double lr0 = 0.01;
  double lr_decay_factor = 0.1;
  long lr_decay_every = 20;
  double momentum = 0.0;
  double weight_decay = 0.0;
  long batch_size = 16;
  ColorJitterParams jitter;
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (!(lr0 > 0.0)) throw std::invalid_argument("lr0 must be positive");
    if (!(lr_decay_factor > 0.0) || lr_decay_factor > 1.0)
      throw std::invalid_argument("lr decay factor must be in (0, 1]");
    if (lr_decay_every < 1) throw std::invalid_argument("lr decay interval must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
    if (momentum < 0.0 || momentum >= 1.0)
      throw std::invalid_argument("momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be non-negative");
    jitter.validate();
  }
};

inline double lr_for_epoch(const TrainConfig& cfg, long epoch) {
  return cfg.lr0 * std::pow(cfg.lr_decay_factor,
                            static_cast<double>(epoch / cfg.lr_decay_every));
}

struct TrainItem {
  Image image;
  int label;
};

struct TrainResult {
  std::vector<double> epoch_accuracy;
  std::vector<double> lr_trace;
};

namespace nn {

struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0f) {}
  float& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  float at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
};

inline Tensor to_tensor(const Image& img) {
  Tensor t(3, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(c, y, x) = static_cast<float>(img.at(x, y, c)) / 255.0f - 0.5f;
  return t;
}

struct Conv {
  int in_c, out_c, k, stride, pad;
  std::vector<float> w;  // [out][in][k][k]
  std::vector<float> b;  // [out]

  Conv(int ic, int oc, int kk, int s, int p)
      : in_c(ic), out_c(oc), k(kk), stride(s), pad(p),
        w(static_cast<std::size_t>(oc) * ic * kk * kk, 0.0f), b(oc, 0.0f) {}

  void init_he(Rng& rng) {
    double std_dev = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
    for (auto& x : w) x = static_cast<float>(rng.normal() * std_dev);
    for (auto& x : b) x = 0.0f;
  }

  int out_side(int in_side) const { return (in_side + 2 * pad - k) / stride + 1; }

  Tensor forward(const Tensor& x) const {
    int oh = out_side(x.h), ow = out_side(x.w);
    Tensor y(out_c, oh, ow);
    for (int o = 0; o < out_c; ++o) {
      const float* wo = &w[static_cast<std::size_t>(o) * in_c * k * k];
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          float acc = b[static_cast<std::size_t>(o)];
          int iy0 = oy * stride - pad, ix0 = ox * stride - pad;
          for (int i = 0; i < in_c; ++i) {
            const float* wi = wo + static_cast<std::size_t>(i) * k * k;
            for (int ky = 0; ky < k; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= x.h) continue;
              const float* row = &x.v[(static_cast<std::size_t>(i) * x.h + iy) * x.w];
              for (int kx = 0; kx < k; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= x.w) continue;
                acc += wi[ky * k + kx] * row[ix];
              }
            }
          }
          y.at(o, oy, ox) = acc;
        }
      }
    }
    return y;
  }

  // accumulates parameter gradients; fills gx unless skipped for the first layer
  void backward(const Tensor& x, const Tensor& gy, std::vector<float>& gw,
                std::vector<float>& gb, Tensor* gx) const {
    for (int o = 0; o < out_c; ++o) {
      const float* wo = &w[static_cast<std::size_t>(o) * in_c * k * k];
      float* gwo = &gw[static_cast<std::size_t>(o) * in_c * k * k];
      for (int oy = 0; oy < gy.h; ++oy) {
        for (int ox = 0; ox < gy.w; ++ox) {
          float g = gy.at(o, oy, ox);
          if (g == 0.0f) continue;
          gb[static_cast<std::size_t>(o)] += g;
          int iy0 = oy * stride - pad, ix0 = ox * stride - pad;
          for (int i = 0; i < in_c; ++i) {
            const float* wi = wo + static_cast<std::size_t>(i) * k * k;
            float* gwi = gwo + static_cast<std::size_t>(i) * k * k;
            for (int ky = 0; ky < k; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= x.h) continue;
              const float* xrow = &x.v[(static_cast<std::size_t>(i) * x.h + iy) * x.w];
              float* gxrow =
                  gx ? &gx->v[(static_cast<std::size_t>(i) * x.h + iy) * x.w] : nullptr;
              for (int kx = 0; kx < k; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= x.w) continue;
                gwi[ky * k + kx] += g * xrow[ix];
                if (gxrow) gxrow[ix] += g * wi[ky * k + kx];
              }
            }
          }
        }
      }
    }
  }
};

inline void relu_inplace(Tensor& t) {
  for (auto& x : t.v)
    if (x < 0.0f) x = 0.0f;
}

// gradient through relu, using the post-activation values as the mask
inline void relu_backward_inplace(Tensor& g, const Tensor& post) {
  for (std::size_t i = 0; i < g.v.size(); ++i)
    if (post.v[i] <= 0.0f) g.v[i] = 0.0f;
}

inline std::vector<float> global_average(const Tensor& t) {
  std::vector<float> out(static_cast<std::size_t>(t.c), 0.0f);
  float inv = 1.0f / (static_cast<float>(t.h) * t.w);
  for (int c = 0; c < t.c; ++c) {
    float acc = 0.0f;
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) acc += t.at(c, y, x);
    out[static_cast<std::size_t>(c)] = acc * inv;
  }
  return out;
}

inline std::vector<double> softmax(const std::vector<float>& logits) {
  double mx = logits[0];
  for (float l : logits) mx = std::max(mx, static_cast<double>(l));
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += p[i];
  }
  for (auto& x : p) x /= sum;
  return p;
}

}  // namespace nn

// Small residual network: 5x5/4 stem, two strided residual blocks, global
// average pooling, linear softmax head. The pooling erases spatial size, so
// the net accepts any square input from min_side up when configured as
// variable_full_res.
class SmallNet : public Backbone {
 public:
  SmallNet(std::vector<std::string> class_names, InputPolicy policy, std::uint64_t seed)
      : classes_(std::move(class_names)),
        policy_(policy),
        conv1_(3, 8, 5, 4, 2),
        r1c1_(8, 16, 3, 2, 1),
        r1c2_(16, 16, 3, 1, 1),
        r1skip_(8, 16, 1, 2, 0),
        r2c1_(16, 32, 3, 2, 1),
        r2c2_(32, 32, 3, 1, 1),
        r2skip_(16, 32, 1, 2, 0) {
    if (classes_.size() < 2) throw std::invalid_argument("need at least 2 classes");
    int k = static_cast<int>(classes_.size());
    fc_w_.assign(static_cast<std::size_t>(k) * 32, 0.0f);
    fc_b_.assign(static_cast<std::size_t>(k), 0.0f);
    auto rng = derive_stream({seed, 0x1217});
    conv1_.init_he(rng);
    r1c1_.init_he(rng);
    r1c2_.init_he(rng);
    r1skip_.init_he(rng);
    r2c1_.init_he(rng);
    r2c2_.init_he(rng);
    r2skip_.init_he(rng);
    double std_dev = std::sqrt(2.0 / 32.0);
    for (auto& x : fc_w_) x = static_cast<float>(rng.normal() * std_dev);
    reset_grad_shapes();
  }

  const std::vector<std::string>& classes() const override { return classes_; }
  InputPolicy input_policy() const override { return policy_; }

  std::vector<double> predict(const Image& img) const override {
    check_input(img);
    Cache c;
    return nn::softmax(forward(nn::to_tensor(img), c));
  }

  // flat parameter block in fixed layer order
  std::vector<float> weights() const {
    std::vector<float> out;
    const_cast<SmallNet*>(this)->for_each_param(
        [&](std::vector<float>& p) { out.insert(out.end(), p.begin(), p.end()); });
    return out;
  }

  void set_weights(const std::vector<float>& flat) {
    std::size_t off = 0;
    for_each_param([&](std::vector<float>& p) {
      if (off + p.size() > flat.size()) throw data_error("weight blob too short");
      std::copy(flat.begin() + static_cast<long>(off),
                flat.begin() + static_cast<long>(off + p.size()), p.begin());
      off += p.size();
    });
    if (off != flat.size()) throw data_error("weight blob size mismatch");
  }

  std::size_t n_params() const {
    std::size_t n = 0;
    const_cast<SmallNet*>(this)->for_each_param(
        [&](std::vector<float>& p) { n += p.size(); });
    return n;
  }

  void zero_grad() {
    for_each_grad([](std::vector<float>& g) { std::fill(g.begin(), g.end(), 0.0f); });
  }

  // forward + backward for one example; returns (loss, prediction correct)
  std::pair<double, bool> accumulate_grad(const Image& img, int label) {
    check_input(img);
    if (label < 0 || label >= static_cast<int>(classes_.size()))
      throw std::invalid_argument("label out of range");
    Cache c;
    auto logits = forward(nn::to_tensor(img), c);
    auto p = nn::softmax(logits);
    double loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-12));
    int arg = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p[i] > p[static_cast<std::size_t>(arg)]) arg = static_cast<int>(i);

    int k = static_cast<int>(classes_.size());
    std::vector<float> dlogits(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      dlogits[static_cast<std::size_t>(i)] =
          static_cast<float>(p[static_cast<std::size_t>(i)] - (i == label ? 1.0 : 0.0));
    backward(c, dlogits);
    return {loss, arg == label};
  }

  void sgd_step(double lr, double momentum, double weight_decay, long batch_count) {
    float scale = 1.0f / static_cast<float>(batch_count);
    std::vector<std::vector<float>*> params, grads;
    for_each_param([&](std::vector<float>& p) { params.push_back(&p); });
    for_each_grad([&](std::vector<float>& g) { grads.push_back(&g); });
    if (velocity_.size() != params.size()) {
      velocity_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i)
        velocity_[i].assign(params[i]->size(), 0.0f);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      auto& g = *grads[i];
      auto& v = velocity_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        float grad = g[j] * scale + static_cast<float>(weight_decay) * p[j];
        v[j] = static_cast<float>(momentum) * v[j] + grad;
        p[j] -= static_cast<float>(lr) * v[j];
      }
    }
  }

 private:
  struct Cache {
    nn::Tensor x0, a1, r1a, r1out, r2a, r2out;
    std::vector<float> pooled;
  };

  std::vector<float> forward(nn::Tensor x, Cache& c) const {
    c.x0 = std::move(x);
    c.a1 = conv1_.forward(c.x0);
    nn::relu_inplace(c.a1);

    c.r1a = r1c1_.forward(c.a1);
    nn::relu_inplace(c.r1a);
    c.r1out = r1c2_.forward(c.r1a);
    {
      auto sk = r1skip_.forward(c.a1);
      for (std::size_t i = 0; i < c.r1out.v.size(); ++i) c.r1out.v[i] += sk.v[i];
    }
    nn::relu_inplace(c.r1out);

    c.r2a = r2c1_.forward(c.r1out);
    nn::relu_inplace(c.r2a);
    c.r2out = r2c2_.forward(c.r2a);
    {
      auto sk = r2skip_.forward(c.r1out);
      for (std::size_t i = 0; i < c.r2out.v.size(); ++i) c.r2out.v[i] += sk.v[i];
    }
    nn::relu_inplace(c.r2out);

    c.pooled = nn::global_average(c.r2out);
    int k = static_cast<int>(classes_.size());
    std::vector<float> logits(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      float acc = fc_b_[static_cast<std::size_t>(i)];
      for (int j = 0; j < 32; ++j)
        acc += fc_w_[static_cast<std::size_t>(i) * 32 + j] * c.pooled[static_cast<std::size_t>(j)];
      logits[static_cast<std::size_t>(i)] = acc;
    }
    return logits;
  }

  void backward(const Cache& c, const std::vector<float>& dlogits) {
    int k = static_cast<int>(classes_.size());
    std::vector<float> dpool(32, 0.0f);
    for (int i = 0; i < k; ++i) {
      float d = dlogits[static_cast<std::size_t>(i)];
      g_fc_b_[static_cast<std::size_t>(i)] += d;
      for (int j = 0; j < 32; ++j) {
        g_fc_w_[static_cast<std::size_t>(i) * 32 + j] += d * c.pooled[static_cast<std::size_t>(j)];
        dpool[static_cast<std::size_t>(j)] += d * fc_w_[static_cast<std::size_t>(i) * 32 + j];
      }
    }

    nn::Tensor g2(c.r2out.c, c.r2out.h, c.r2out.w);
    float inv = 1.0f / (static_cast<float>(c.r2out.h) * c.r2out.w);
    for (int ch = 0; ch < g2.c; ++ch)
      for (int y = 0; y < g2.h; ++y)
        for (int x = 0; x < g2.w; ++x)
          g2.at(ch, y, x) = dpool[static_cast<std::size_t>(ch)] * inv;
    nn::relu_backward_inplace(g2, c.r2out);

    nn::Tensor g_r1out(c.r1out.c, c.r1out.h, c.r1out.w);
    r2skip_.backward(c.r1out, g2, g_r2skip_w_, g_r2skip_b_, &g_r1out);
    {
      nn::Tensor ga(c.r2a.c, c.r2a.h, c.r2a.w);
      r2c2_.backward(c.r2a, g2, g_r2c2_w_, g_r2c2_b_, &ga);
      nn::relu_backward_inplace(ga, c.r2a);
      r2c1_.backward(c.r1out, ga, g_r2c1_w_, g_r2c1_b_, &g_r1out);
    }
    nn::relu_backward_inplace(g_r1out, c.r1out);

    nn::Tensor g_a1(c.a1.c, c.a1.h, c.a1.w);
    r1skip_.backward(c.a1, g_r1out, g_r1skip_w_, g_r1skip_b_, &g_a1);
    {
      nn::Tensor ga(c.r1a.c, c.r1a.h, c.r1a.w);
      r1c2_.backward(c.r1a, g_r1out, g_r1c2_w_, g_r1c2_b_, &ga);
      nn::relu_backward_inplace(ga, c.r1a);
      r1c1_.backward(c.a1, ga, g_r1c1_w_, g_r1c1_b_, &g_a1);
    }
    nn::relu_backward_inplace(g_a1, c.a1);
    conv1_.backward(c.x0, g_a1, g_conv1_w_, g_conv1_b_, nullptr);
  }

  template <class F>
  void for_each_param(F&& f) {
    f(conv1_.w); f(conv1_.b);
    f(r1c1_.w); f(r1c1_.b);
    f(r1c2_.w); f(r1c2_.b);
    f(r1skip_.w); f(r1skip_.b);
    f(r2c1_.w); f(r2c1_.b);
    f(r2c2_.w); f(r2c2_.b);
    f(r2skip_.w); f(r2skip_.b);
    f(fc_w_); f(fc_b_);
  }

  template <class F>
  void for_each_grad(F&& f) {
    f(g_conv1_w_); f(g_conv1_b_);
    f(g_r1c1_w_); f(g_r1c1_b_);
    f(g_r1c2_w_); f(g_r1c2_b_);
    f(g_r1skip_w_); f(g_r1skip_b_);
    f(g_r2c1_w_); f(g_r2c1_b_);
    f(g_r2c2_w_); f(g_r2c2_b_);
    f(g_r2skip_w_); f(g_r2skip_b_);
    f(g_fc_w_); f(g_fc_b_);
  }

  void reset_grad_shapes() {
    auto shape = [](const std::vector<float>& p, std::vector<float>& g) {
      g.assign(p.size(), 0.0f);
    };
    shape(conv1_.w, g_conv1_w_); shape(conv1_.b, g_conv1_b_);
    shape(r1c1_.w, g_r1c1_w_); shape(r1c1_.b, g_r1c1_b_);
    shape(r1c2_.w, g_r1c2_w_); shape(r1c2_.b, g_r1c2_b_);
    shape(r1skip_.w, g_r1skip_w_); shape(r1skip_.b, g_r1skip_b_);
    shape(r2c1_.w, g_r2c1_w_); shape(r2c1_.b, g_r2c1_b_);
    shape(r2c2_.w, g_r2c2_w_); shape(r2c2_.b, g_r2c2_b_);
    shape(r2skip_.w, g_r2skip_w_); shape(r2skip_.b, g_r2skip_b_);
    g_fc_w_.assign(fc_w_.size(), 0.0f);
    g_fc_b_.assign(fc_b_.size(), 0.0f);
  }

  std::vector<std::string> classes_;
  InputPolicy policy_;
  nn::Conv conv1_, r1c1_, r1c2_, r1skip_, r2c1_, r2c2_, r2skip_;
  std::vector<float> fc_w_, fc_b_;

  std::vector<float> g_conv1_w_, g_conv1_b_, g_r1c1_w_, g_r1c1_b_, g_r1c2_w_, g_r1c2_b_,
      g_r1skip_w_, g_r1skip_b_, g_r2c1_w_, g_r2c1_b_, g_r2c2_w_, g_r2c2_b_, g_r2skip_w_,
      g_r2skip_b_, g_fc_w_, g_fc_b_;
  std::vector<std::vector<float>> velocity_;
};

// Flat linear softmax classifier over raw pixels. Only meaningful with a
// fixed input size, so the variable policy is rejected.
class LinearNet : public Backbone {
 public:
  LinearNet(std::vector<std::string> class_names, InputPolicy policy, std::uint64_t seed)
      : classes_(std::move(class_names)) {
    if (policy != InputPolicy::fixed_224)
      throw std::invalid_argument("a flat linear model cannot erase input size");
    if (classes_.size() < 2) throw std::invalid_argument("need at least 2 classes");
    std::size_t k = classes_.size();
    w_.assign(k * kInputDim, 0.0f);
    b_.assign(k, 0.0f);
    auto rng = derive_stream({seed, 0x11E4});
    double std_dev = std::sqrt(1.0 / static_cast<double>(kInputDim));
    for (auto& x : w_) x = static_cast<float>(rng.normal() * std_dev);
    g_w_.assign(w_.size(), 0.0f);
    g_b_.assign(b_.size(), 0.0f);
  }

  const std::vector<std::string>& classes() const override { return classes_; }
  InputPolicy input_policy() const override { return InputPolicy::fixed_224; }

  std::vector<double> predict(const Image& img) const override {
    check_input(img);
    return nn::softmax(logits(nn::to_tensor(img)));
  }

  std::vector<float> weights() const {
    std::vector<float> out(w_);
    out.insert(out.end(), b_.begin(), b_.end());
    return out;
  }
  void set_weights(const std::vector<float>& flat) {
    if (flat.size() != w_.size() + b_.size()) throw data_error("weight blob size mismatch");
    std::copy(flat.begin(), flat.begin() + static_cast<long>(w_.size()), w_.begin());
    std::copy(flat.begin() + static_cast<long>(w_.size()), flat.end(), b_.begin());
  }
  std::size_t n_params() const { return w_.size() + b_.size(); }

  void zero_grad() {
    std::fill(g_w_.begin(), g_w_.end(), 0.0f);
    std::fill(g_b_.begin(), g_b_.end(), 0.0f);
  }

  std::pair<double, bool> accumulate_grad(const Image& img, int label) {
    check_input(img);
    if (label < 0 || label >= static_cast<int>(classes_.size()))
      throw std::invalid_argument("label out of range");
    auto x = nn::to_tensor(img);
    auto l = logits(x);
    auto p = nn::softmax(l);
    double loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-12));
    int arg = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p[i] > p[static_cast<std::size_t>(arg)]) arg = static_cast<int>(i);
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      float d = static_cast<float>(p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
      g_b_[i] += d;
      float* gw = &g_w_[i * kInputDim];
      for (std::size_t j = 0; j < kInputDim; ++j) gw[j] += d * x.v[j];
    }
    return {loss, arg == label};
  }

  void sgd_step(double lr, double momentum, double weight_decay, long batch_count) {
    if (v_w_.empty()) {
      v_w_.assign(w_.size(), 0.0f);
      v_b_.assign(b_.size(), 0.0f);
    }
    float scale = 1.0f / static_cast<float>(batch_count);
    auto update = [&](std::vector<float>& p, std::vector<float>& g, std::vector<float>& v) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        float grad = g[j] * scale + static_cast<float>(weight_decay) * p[j];
        v[j] = static_cast<float>(momentum) * v[j] + grad;
        p[j] -= static_cast<float>(lr) * v[j];
      }
    };
    update(w_, g_w_, v_w_);
    update(b_, g_b_, v_b_);
  }

 private:
  static constexpr std::size_t kInputDim = 3u * 224u * 224u;

  std::vector<float> logits(const nn::Tensor& x) const {
    std::vector<float> out(classes_.size());
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      float acc = b_[i];
      const float* wi = &w_[i * kInputDim];
      for (std::size_t j = 0; j < kInputDim; ++j) acc += wi[j] * x.v[j];
      out[i] = acc;
    }
    return out;
  }

  std::vector<std::string> classes_;
  std::vector<float> w_, b_, g_w_, g_b_, v_w_, v_b_;
};

// Optional progress hook, called once per finished epoch.
using EpochLogger = std::function<void(long epoch, double lr, double accuracy)>;

// Full training loop: plain SGD over shuffled epochs with the stepped
// learning-rate schedule, per-item seeded jitter streams, and a running
// train-accuracy report per epoch.
template <class Net>
TrainResult fit_classifier(Net& net, const std::vector<TrainItem>& items,
                           const TrainConfig& cfg, const EpochLogger& log = {}) {
  cfg.validate();
  if (items.empty()) throw data_error("no training items");
  std::vector<long> per_class(net.classes().size(), 0);
  for (const auto& it : items) {
    if (it.label < 0 || it.label >= static_cast<int>(per_class.size()))
      throw data_error("training label out of range");
    per_class[static_cast<std::size_t>(it.label)]++;
  }
  for (std::size_t c = 0; c < per_class.size(); ++c)
    if (per_class[c] == 0)
      throw data_error("class has no training examples: " + net.classes()[c]);

  TrainResult result;
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = lr_for_epoch(cfg, epoch);
    result.lr_trace.push_back(lr);
    auto shuffle_rng = derive_stream({cfg.seed, 0x5E0, static_cast<std::uint64_t>(epoch)});
    shuffle(order, shuffle_rng);

    long correct = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
      net.zero_grad();
      for (std::size_t i = pos; i < end; ++i) {
        std::size_t idx = order[i];
        auto jitter_rng = derive_stream(
            {cfg.seed, 0x5E1, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(idx)});
        Image augmented = color_jitter(items[idx].image, cfg.jitter, jitter_rng);
        auto [loss, ok] = net.accumulate_grad(augmented, items[idx].label);
        (void)loss;
        if (ok) ++correct;
      }
      net.sgd_step(lr, cfg.momentum, cfg.weight_decay, static_cast<long>(end - pos));
      pos = end;
    }
    result.epoch_accuracy.push_back(static_cast<double>(correct) /
                                    static_cast<double>(items.size()));
    if (log) log(epoch, lr, result.epoch_accuracy.back());
  }
  return result;
}

}  // namespace polyp
