#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "smt/nn.hpp"
#include "smt/types.hpp"

namespace smt {

// Error-recovery refinement network: class-agnostic volumetric U-Net that maps
// a raw localization map to a refined one. Encoder 16->32->64->128 with a
// double bottleneck, mirrored decoder with skip connections and trilinear
// upsampling. ~1.18M parameters at the default widths.
struct EoRConfig {
  int depth = 4;
  std::vector<int> channels = {16, 32, 64, 128};
  uint64_t seed = 0;

  void validate() const {
    if (depth != static_cast<int>(channels.size()))
      throw config_error("eor: channels length must equal depth");
    if (depth < 2) throw config_error("eor: depth must be >= 2");
  }
};

template <typename T>
class EoRNet {
 public:
  EoRNet() = default;

  explicit EoRNet(const EoRConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    if (cfg.channels != std::vector<int>{16, 32, 64, 128})
      throw config_error("eor: only the default 16/32/64/128 layout is supported");
    enc0_ = nn::Conv3d<T>(1, 16, 1, 3, 3);
    enc1_ = nn::Conv3d<T>(16, 32, 1, 3, 3);
    enc2_ = nn::Conv3d<T>(32, 64, 3, 3, 3);
    enc3_ = nn::Conv3d<T>(64, 128, 3, 3, 3);
    bott1_ = nn::Conv3d<T>(128, 128, 3, 3, 3);
    bott2_ = nn::Conv3d<T>(128, 128, 3, 3, 3);
    dec2_ = nn::Conv3d<T>(128 + 64, 64, 1, 1, 1);
    dec1_ = nn::Conv3d<T>(64 + 32, 32, 1, 1, 1);
    dec0_ = nn::Conv3d<T>(32 + 16, 16, 1, 1, 1);
    out_ = nn::Conv3d<T>(16, 1, 1, 3, 3);
    Rng rng(derive_seed(cfg.seed, "eor.init"));
    enc0_.init(rng);
    enc1_.init(rng);
    enc2_.init(rng);
    enc3_.init(rng);
    bott1_.init(rng);
    bott2_.init(rng);
    dec2_.init(rng);
    dec1_.init(rng);
    dec0_.init(rng);
    out_.init(rng);
  }

  const EoRConfig& config() const { return cfg_; }

  std::vector<nn::NamedParam<T>> params() {
    std::vector<nn::NamedParam<T>> out;
    enc0_.collect("enc0", out);
    enc1_.collect("enc1", out);
    enc2_.collect("enc2", out);
    enc3_.collect("enc3", out);
    bott1_.collect("bott1", out);
    bott2_.collect("bott2", out);
    dec2_.collect("dec2", out);
    dec1_.collect("dec1", out);
    dec0_.collect("dec0", out);
    out_.collect("out", out);
    return out;
  }

  std::size_t param_count() const {
    return enc0_.param_count() + enc1_.param_count() + enc2_.param_count() +
           enc3_.param_count() + bott1_.param_count() + bott2_.param_count() +
           dec2_.param_count() + dec1_.param_count() + dec0_.param_count() +
           out_.param_count();
  }

  void zero_grad() {
    for (auto& p : params()) p.grad->fill(T(0));
  }

  // raw: {F,H,W} in [0,1]. Inputs whose dims are not divisible by 8 are
  // symmetrically zero-padded, refined, then cropped back.
  LocalizationMap<T> forward(const LocalizationMap<T>& raw, bool cache) {
    if (raw.shape.size() != 3)
      throw std::invalid_argument("eor forward: expected rank-3 map, got " + shape_str(raw));
    const int F = raw.dim(0), H = raw.dim(1), W = raw.dim(2);
    pad_lo_ = {pad_before(F), pad_before(H), pad_before(W)};
    const int Fp = padded(F), Hp = padded(H), Wp = padded(W);
    padded_in_ = (Fp != F || Hp != H || Wp != W);
    orig_ = {F, H, W};

    Tensor<T> x({1, Fp, Hp, Wp});
    for (int f = 0; f < F; ++f)
      for (int r = 0; r < H; ++r) {
        const T* src = raw.data() + (static_cast<std::size_t>(f) * H + r) * W;
        T* dst = x.data() +
                 ((static_cast<std::size_t>(f + pad_lo_[0])) * Hp + r + pad_lo_[1]) * Wp +
                 pad_lo_[2];
        std::copy(src, src + W, dst);
      }

    Tensor<T> s0 = a0_.forward(enc0_.forward(x, cache), cache);
    Tensor<T> s1 = a1_.forward(enc1_.forward(p0_.forward(s0, cache), cache), cache);
    Tensor<T> s2 = a2_.forward(enc2_.forward(p1_.forward(s1, cache), cache), cache);
    Tensor<T> e3 = a3_.forward(enc3_.forward(p2_.forward(s2, cache), cache), cache);
    Tensor<T> bt = b2_.forward(bott2_.forward(b1_.forward(bott1_.forward(e3, cache), cache), cache), cache);

    Tensor<T> u2 = up2_.forward(bt, {s2.dim(1), s2.dim(2), s2.dim(3)}, cache);
    Tensor<T> d2 = a4_.forward(dec2_.forward(nn::concat_channels(u2, s2), cache), cache);
    Tensor<T> u1 = up1_.forward(d2, {s1.dim(1), s1.dim(2), s1.dim(3)}, cache);
    Tensor<T> d1 = a5_.forward(dec1_.forward(nn::concat_channels(u1, s1), cache), cache);
    Tensor<T> u0 = up0_.forward(d1, {s0.dim(1), s0.dim(2), s0.dim(3)}, cache);
    Tensor<T> d0 = a6_.forward(dec0_.forward(nn::concat_channels(u0, s0), cache), cache);
    Tensor<T> y = squash_.forward(out_.forward(d0, cache), cache);

    LocalizationMap<T> refined({F, H, W});
    for (int f = 0; f < F; ++f)
      for (int r = 0; r < H; ++r) {
        const T* src = y.data() +
                       ((static_cast<std::size_t>(f + pad_lo_[0])) * Hp + r + pad_lo_[1]) *
                           Wp +
                       pad_lo_[2];
        T* dst = refined.data() + (static_cast<std::size_t>(f) * H + r) * W;
        std::copy(src, src + W, dst);
      }
    return refined;
  }

  // Accumulates parameter gradients; the input gradient is returned (callers
  // enforcing the gradient stop simply discard it).
  LocalizationMap<T> backward(const LocalizationMap<T>& g_out) {
    const int F = orig_[0], H = orig_[1], W = orig_[2];
    const int Fp = padded(F), Hp = padded(H), Wp = padded(W);
    Tensor<T> g({1, Fp, Hp, Wp});
    for (int f = 0; f < F; ++f)
      for (int r = 0; r < H; ++r) {
        const T* src = g_out.data() + (static_cast<std::size_t>(f) * H + r) * W;
        T* dst = g.data() +
                 ((static_cast<std::size_t>(f + pad_lo_[0])) * Hp + r + pad_lo_[1]) * Wp +
                 pad_lo_[2];
        std::copy(src, src + W, dst);
      }

    Tensor<T> gd0 = dec0_.backward(a6_.backward(out_.backward(squash_.backward(g))));
    Tensor<T> gu0, gs0a;
    nn::split_channels(gd0, 32, gu0, gs0a);
    Tensor<T> gd1 = dec1_.backward(a5_.backward(up0_.backward(gu0)));
    Tensor<T> gu1, gs1a;
    nn::split_channels(gd1, 64, gu1, gs1a);
    Tensor<T> gd2 = dec2_.backward(a4_.backward(up1_.backward(gu1)));
    Tensor<T> gbt, gs2a;
    nn::split_channels(gd2, 128, gbt, gs2a);

    Tensor<T> ge3 = bott1_.backward(b1_.backward(bott2_.backward(b2_.backward(up2_.backward(gbt)))));
    Tensor<T> gs2 = p2_.backward(enc3_.backward(a3_.backward(ge3)));
    for (std::size_t i = 0; i < gs2.numel(); ++i) gs2.v[i] += gs2a.v[i];
    Tensor<T> gs1 = p1_.backward(enc2_.backward(a2_.backward(gs2)));
    for (std::size_t i = 0; i < gs1.numel(); ++i) gs1.v[i] += gs1a.v[i];
    Tensor<T> gs0 = p0_.backward(enc1_.backward(a1_.backward(gs1)));
    for (std::size_t i = 0; i < gs0.numel(); ++i) gs0.v[i] += gs0a.v[i];
    Tensor<T> gx = enc0_.backward(a0_.backward(gs0));

    LocalizationMap<T> gin({F, H, W});
    for (int f = 0; f < F; ++f)
      for (int r = 0; r < H; ++r) {
        const T* src = gx.data() +
                       ((static_cast<std::size_t>(f + pad_lo_[0])) * Hp + r + pad_lo_[1]) *
                           Wp +
                       pad_lo_[2];
        T* dst = gin.data() + (static_cast<std::size_t>(f) * H + r) * W;
        std::copy(src, src + W, dst);
      }
    return gin;
  }

 private:
  static int padded(int n) { return ((n + 7) / 8) * 8; }
  static int pad_before(int n) { return (padded(n) - n) / 2; }

  EoRConfig cfg_;
  nn::Conv3d<T> enc0_, enc1_, enc2_, enc3_, bott1_, bott2_, dec2_, dec1_, dec0_, out_;
  nn::LeakyReLU<T> a0_, a1_, a2_, a3_, a4_, a5_, a6_, b1_, b2_;
  nn::AvgPool3d<T> p0_, p1_, p2_;
  nn::Trilinear<T> up2_, up1_, up0_;
  nn::Sigmoid<T> squash_;
  std::vector<int> pad_lo_ = {0, 0, 0};
  std::vector<int> orig_ = {0, 0, 0};
  bool padded_in_ = false;
};

}  // namespace smt
