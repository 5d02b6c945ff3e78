#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "smt/nn.hpp"
#include "smt/types.hpp"

namespace smt {

// Reference base action detector: volumetric-convolution encoder with stride-2
// downsampling, a global-pool classification head, and a skip-connected decoder
// producing a full-resolution localization map through a logistic squash.
struct DetectorConfig {
  int num_classes = 6;
  int clip_len = 8;
  int height = 32;
  int width = 32;
  int in_channels = 3;
  std::vector<int> channels = {8, 16, 32};
  uint64_t seed = 0;

  void validate() const {
    if (num_classes < 2) throw config_error("detector: num_classes must be >= 2");
    if (channels.size() != 3) throw config_error("detector: expects 3 channel widths");
    int div = 1 << static_cast<int>(channels.size());
    if (height % div || width % div)
      throw config_error("detector: H,W must be divisible by " + std::to_string(div));
    if (clip_len % 4)
      throw config_error("detector: clip_len must be divisible by 4");
    if (in_channels != 1 && in_channels != 3)
      throw config_error("detector: in_channels must be 1 or 3");
  }
};

template <typename T>
class Detector {
 public:
  Detector() = default;

  explicit Detector(const DetectorConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const int c0 = cfg.channels[0], c1 = cfg.channels[1], c2 = cfg.channels[2];
    enc0_ = nn::Conv3d<T>(cfg.in_channels, c0, 1, 3, 3);
    enc1_ = nn::Conv3d<T>(c0, c1, 3, 3, 3, 2);
    enc2_ = nn::Conv3d<T>(c1, c2, 3, 3, 3, 2);
    cls_ = nn::Linear<T>(c2, cfg.num_classes);
    dec1_ = nn::Conv3d<T>(c2 + c1, c1, 1, 3, 3);
    dec0_ = nn::Conv3d<T>(c1 + c0, c0, 1, 3, 3);
    out_ = nn::Conv3d<T>(c0, 1, 1, 1, 1);
    Rng rng(derive_seed(cfg.seed, "detector.init"));
    enc0_.init(rng);
    enc1_.init(rng);
    enc2_.init(rng);
    cls_.init(rng);
    dec1_.init(rng);
    dec0_.init(rng);
    out_.init(rng);
  }

  const DetectorConfig& config() const { return cfg_; }

  std::vector<nn::NamedParam<T>> params() {
    std::vector<nn::NamedParam<T>> out;
    enc0_.collect("enc0", out);
    enc1_.collect("enc1", out);
    enc2_.collect("enc2", out);
    cls_.collect("cls", out);
    dec1_.collect("dec1", out);
    dec0_.collect("dec0", out);
    out_.collect("out", out);
    return out;
  }

  std::size_t param_count() const {
    return enc0_.param_count() + enc1_.param_count() + enc2_.param_count() +
           cls_.param_count() + dec1_.param_count() + dec0_.param_count() +
           out_.param_count();
  }

  void zero_grad() {
    for (auto& p : params()) p.grad->fill(T(0));
  }

  // Input {C,T,H,W}. cache=true keeps activations for backward().
  ModelOutput<T> forward(const Tensor<T>& x, bool cache) {
    if (x.shape != std::vector<int>{cfg_.in_channels, cfg_.clip_len, cfg_.height, cfg_.width})
      throw std::invalid_argument("detector forward: clip shape mismatch, got " +
                                  shape_str(x));
    Tensor<T> s0 = a0_.forward(enc0_.forward(x, cache), cache);
    Tensor<T> s1 = a1_.forward(enc1_.forward(s0, cache), cache);
    Tensor<T> f2 = a2_.forward(enc2_.forward(s1, cache), cache);

    std::vector<T> logits = cls_.forward(gap_.forward(f2, cache), cache);

    Tensor<T> u1 = up1_.forward(f2, {s1.dim(1), s1.dim(2), s1.dim(3)}, cache);
    Tensor<T> d1 = a3_.forward(dec1_.forward(nn::concat_channels(u1, s1), cache), cache);
    Tensor<T> u0 = up0_.forward(d1, {s0.dim(1), s0.dim(2), s0.dim(3)}, cache);
    Tensor<T> d0 = a4_.forward(dec0_.forward(nn::concat_channels(u0, s0), cache), cache);
    Tensor<T> raw = squash_.forward(out_.forward(d0, cache), cache);

    ModelOutput<T> o;
    o.class_logits = std::move(logits);
    o.loc_map = Tensor<T>({cfg_.clip_len, cfg_.height, cfg_.width});
    o.loc_map.v = std::move(raw.v);
    if (cache) {
      c2_ = f2.dim(0);
      c1ch_ = s1.dim(0);
      c0ch_ = s0.dim(0);
    }
    return o;
  }

  // Backward from (d logits, d loc_map); accumulates parameter gradients.
  void backward(const std::vector<T>& g_logits, const Tensor<T>& g_loc) {
    Tensor<T> g({1, cfg_.clip_len, cfg_.height, cfg_.width});
    g.v = g_loc.v;
    Tensor<T> gd0 = dec0_
                        .backward(a4_.backward(out_.backward(squash_.backward(g))))
                        ;
    Tensor<T> gu0, gs0a;
    nn::split_channels(gd0, c1ch_, gu0, gs0a);
    Tensor<T> gd1 = dec1_.backward(a3_.backward(up0_.backward(gu0)));
    Tensor<T> gu1, gs1a;
    nn::split_channels(gd1, c2_, gu1, gs1a);
    Tensor<T> gf2 = up1_.backward(gu1);

    // classification branch joins at f2
    Tensor<T> gf2c = gap_.backward(cls_.backward(g_logits));
    for (std::size_t i = 0; i < gf2.numel(); ++i) gf2.v[i] += gf2c.v[i];

    Tensor<T> gs1 = enc2_.backward(a2_.backward(gf2));
    for (std::size_t i = 0; i < gs1.numel(); ++i) gs1.v[i] += gs1a.v[i];
    Tensor<T> gs0 = enc1_.backward(a1_.backward(gs1));
    for (std::size_t i = 0; i < gs0.numel(); ++i) gs0.v[i] += gs0a.v[i];
    enc0_.backward(a0_.backward(gs0));
  }

 private:
  DetectorConfig cfg_;
  nn::Conv3d<T> enc0_, enc1_, enc2_, dec1_, dec0_, out_;
  nn::Linear<T> cls_;
  nn::LeakyReLU<T> a0_, a1_, a2_, a3_, a4_;
  nn::GlobalAvgPool<T> gap_;
  nn::Trilinear<T> up1_, up0_;
  nn::Sigmoid<T> squash_;
  int c2_ = 0, c1ch_ = 0, c0ch_ = 0;
};

// Converts a clip {F,H,W,C} into network layout {C,F,H,W}.
template <typename T>
Tensor<T> clip_to_input(const VideoClip<T>& clip) {
  const int F = clip.num_frames(), H = clip.height(), W = clip.width(), C = clip.channels();
  Tensor<T> x({C, F, H, W});
  for (int f = 0; f < F; ++f)
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c)
        for (int ch = 0; ch < C; ++ch)
          x.v[((static_cast<std::size_t>(ch) * F + f) * H + r) * W + c] =
              clip.at(f, r, c, ch);
  return x;
}

}  // namespace smt
