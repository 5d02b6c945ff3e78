#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "smt/common.hpp"
#include "smt/types.hpp"

namespace smt {

// Temporal-then-spatial view generation. The geometric transform (flip, and the
// optional shared crop) is identical for both views so teacher and student
// localization maps stay pixel-comparable; photometric perturbations are
// strong-view only and drawn once per clip.

struct TemporalSelection {
  std::vector<int> indices;  // non-decreasing, length T
  int strategy = 0;          // 0 contiguous, 1 stride-2, 2 boundary-repeat
};

struct GeomTransform {
  bool hflip = false;
  // optional shared crop (disabled by default; see AugmentConfig::enable_crop)
  bool crop = false;
  int crop_r0 = 0, crop_c0 = 0, crop_h = 0, crop_w = 0;
};

struct AugmentConfig {
  double p_hflip = 0.5;
  double p_contrast = 0.7;
  double p_hue = 0.7;
  double p_brightness = 0.7;
  double p_saturation = 0.7;
  double p_grayscale = 0.6;
  double p_blur = 0.5;
  double factor_lo = 0.6, factor_hi = 1.4;   // contrast/brightness/saturation
  double hue_lo = -0.1, hue_hi = 0.1;
  double sigma_lo = 0.1, sigma_hi = 2.0;     // 3x3 gaussian blur
  bool enable_crop = false;                  // shared random crop, off by default
  double crop_scale_lo = 0.8;
};

template <typename T>
struct ViewPair {
  VideoClip<T> weak;
  VideoClip<T> strong;
  GeomTransform geom;
  TemporalSelection temporal;
  std::optional<std::vector<FrameAnnotation>> annotations_t;
};

// One of three temporal strategies with equal probability: contiguous crop,
// stride-2 sampling (clamped), or contiguous crop with boundary repeat.
inline TemporalSelection sample_temporal(int F, int T, Rng& rng) {
  if (F < 2) throw std::invalid_argument("sample_temporal: F must be >= 2");
  if (T < 2) throw std::invalid_argument("sample_temporal: T must be >= 2");
  TemporalSelection sel;
  int strategy = static_cast<int>(rng.uniform_int(0, 2));
  if (T > F && strategy != 2) strategy = 2;
  sel.strategy = strategy;
  sel.indices.resize(T);
  if (strategy == 0) {
    int start = static_cast<int>(rng.uniform_int(0, F - T));
    for (int i = 0; i < T; ++i) sel.indices[i] = start + i;
  } else if (strategy == 1) {
    int max_start = std::max(0, F - 1 - 2 * (T - 1));
    int start = static_cast<int>(rng.uniform_int(0, max_start));
    for (int i = 0; i < T; ++i) sel.indices[i] = std::min(start + 2 * i, F - 1);
  } else {
    int start = static_cast<int>(rng.uniform_int(0, std::max(0, F - T)));
    for (int i = 0; i < T; ++i) sel.indices[i] = std::min(start + i, F - 1);
  }
  return sel;
}

template <typename T>
VideoClip<T> select_frames(const VideoClip<T>& clip, const TemporalSelection& sel) {
  const int H = clip.height(), W = clip.width(), C = clip.channels();
  VideoClip<T> out;
  out.frames = Tensor<T>({static_cast<int>(sel.indices.size()), H, W, C});
  out.frame_rate_hint = clip.frame_rate_hint;
  const std::size_t fsz = static_cast<std::size_t>(H) * W * C;
  for (std::size_t i = 0; i < sel.indices.size(); ++i)
    std::copy(clip.frames.data() + sel.indices[i] * fsz,
              clip.frames.data() + (sel.indices[i] + 1) * fsz, out.frames.data() + i * fsz);
  return out;
}

template <typename T>
void hflip_inplace(VideoClip<T>& clip) {
  const int F = clip.num_frames(), H = clip.height(), W = clip.width(), C = clip.channels();
  for (int f = 0; f < F; ++f)
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W / 2; ++c)
        for (int ch = 0; ch < C; ++ch)
          std::swap(clip.at(f, r, c, ch), clip.at(f, r, W - 1 - c, ch));
}

namespace detail {

template <typename T>
void rgb_to_hsv(T r, T g, T b, double& h, double& s, double& v) {
  double mx = std::max({(double)r, (double)g, (double)b});
  double mn = std::min({(double)r, (double)g, (double)b});
  v = mx;
  double d = mx - mn;
  s = mx > 0 ? d / mx : 0.0;
  if (d <= 0) {
    h = 0;
    return;
  }
  if (mx == (double)r)
    h = std::fmod((g - b) / d, 6.0);
  else if (mx == (double)g)
    h = (b - r) / d + 2.0;
  else
    h = (r - g) / d + 4.0;
  h /= 6.0;
  if (h < 0) h += 1.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  double hh = h * 6.0;
  int i = static_cast<int>(std::floor(hh)) % 6;
  if (i < 0) i += 6;
  double f = hh - std::floor(hh);
  double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

template <typename T>
double clip_gray_mean(const VideoClip<T>& clip) {
  const int C = clip.channels();
  double s = 0.0;
  std::size_t n = clip.frames.numel() / C;
  for (std::size_t i = 0; i < n; ++i) {
    const T* px = clip.frames.data() + i * C;
    if (C == 3)
      s += 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    else
      s += static_cast<double>(px[0]);
  }
  return s / static_cast<double>(n);
}

template <typename T>
void clamp_clip(VideoClip<T>& clip) {
  for (auto& x : clip.frames.v) x = clamp01(x);
}

template <typename T>
void gaussian_blur3(VideoClip<T>& clip, double sigma) {
  double k[3];
  k[1] = 1.0;
  k[0] = k[2] = std::exp(-0.5 / (sigma * sigma));
  double z = k[0] + k[1] + k[2];
  for (double& x : k) x /= z;
  const int F = clip.num_frames(), H = clip.height(), W = clip.width(), C = clip.channels();
  std::vector<double> tmp(static_cast<std::size_t>(H) * W);
  for (int f = 0; f < F; ++f)
    for (int ch = 0; ch < C; ++ch) {
      // horizontal then vertical, replicate border
      for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
          double s = 0;
          for (int d = -1; d <= 1; ++d)
            s += k[d + 1] * clip.at(f, r, std::clamp(c + d, 0, W - 1), ch);
          tmp[static_cast<std::size_t>(r) * W + c] = s;
        }
      for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
          double s = 0;
          for (int d = -1; d <= 1; ++d)
            s += k[d + 1] * tmp[static_cast<std::size_t>(std::clamp(r + d, 0, H - 1)) * W + c];
          clip.at(f, r, c, ch) = static_cast<T>(s);
        }
    }
}

}  // namespace detail

// Weak view: the shared horizontal flip only.
template <typename T>
VideoClip<T> apply_weak(const VideoClip<T>& clip, const GeomTransform& geom) {
  VideoClip<T> out = clip;
  if (geom.hflip) hflip_inplace(out);
  return out;
}

// Strong view: photometric perturbations drawn once per clip (contrast, hue,
// brightness, saturation, grayscale, blur, in that order) then the shared flip.
template <typename T>
VideoClip<T> apply_strong(const VideoClip<T>& clip, const GeomTransform& geom, Rng& rng,
                          const AugmentConfig& cfg = {}) {
  VideoClip<T> out = clip;
  const int C = out.channels();
  const std::size_t npx = out.frames.numel() / C;

  if (rng.bernoulli(cfg.p_contrast)) {
    double f = rng.uniform(cfg.factor_lo, cfg.factor_hi);
    double m = detail::clip_gray_mean(out);
    for (auto& x : out.frames.v) x = static_cast<T>((x - m) * f + m);
    detail::clamp_clip(out);
  }
  if (rng.bernoulli(cfg.p_hue)) {
    double shift = rng.uniform(cfg.hue_lo, cfg.hue_hi);
    if (C == 3) {
      for (std::size_t i = 0; i < npx; ++i) {
        T* px = out.frames.data() + i * 3;
        double h, s, v;
        detail::rgb_to_hsv(px[0], px[1], px[2], h, s, v);
        h = h + shift;
        h -= std::floor(h);
        double r, g, b;
        detail::hsv_to_rgb(h, s, v, r, g, b);
        px[0] = static_cast<T>(r);
        px[1] = static_cast<T>(g);
        px[2] = static_cast<T>(b);
      }
      detail::clamp_clip(out);
    }
  }
  if (rng.bernoulli(cfg.p_brightness)) {
    double f = rng.uniform(cfg.factor_lo, cfg.factor_hi);
    for (auto& x : out.frames.v) x = static_cast<T>(x * f);
    detail::clamp_clip(out);
  }
  if (rng.bernoulli(cfg.p_saturation)) {
    double f = rng.uniform(cfg.factor_lo, cfg.factor_hi);
    if (C == 3) {
      for (std::size_t i = 0; i < npx; ++i) {
        T* px = out.frames.data() + i * 3;
        double gray = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        for (int ch = 0; ch < 3; ++ch)
          px[ch] = static_cast<T>(gray + (px[ch] - gray) * f);
      }
      detail::clamp_clip(out);
    }
  }
  if (rng.bernoulli(cfg.p_grayscale)) {
    if (C == 3) {
      for (std::size_t i = 0; i < npx; ++i) {
        T* px = out.frames.data() + i * 3;
        double gray = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        px[0] = px[1] = px[2] = static_cast<T>(gray);
      }
    }
  }
  if (rng.bernoulli(cfg.p_blur)) {
    double sigma = rng.uniform(cfg.sigma_lo, cfg.sigma_hi);
    detail::gaussian_blur3(out, sigma);
    detail::clamp_clip(out);
  }
  if (geom.hflip) hflip_inplace(out);
  return out;
}

inline Box hflip_box(const Box& b, int width) {
  return Box{width - b.x1, b.y0, width - b.x0, b.y1};
}

inline Mask hflip_mask(const Mask& m) {
  Mask out(m.shape);
  const int H = m.dim(0), W = m.dim(1);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      out.v[static_cast<std::size_t>(r) * W + c] =
          m.v[static_cast<std::size_t>(r) * W + (W - 1 - c)];
  return out;
}

// Shared random crop: crop a window and resize back to the original size with
// nearest-neighbor sampling. Off by default.
template <typename T>
VideoClip<T> apply_crop(const VideoClip<T>& clip, const GeomTransform& geom) {
  const int F = clip.num_frames(), H = clip.height(), W = clip.width(), C = clip.channels();
  VideoClip<T> out;
  out.frames = Tensor<T>({F, H, W, C});
  out.frame_rate_hint = clip.frame_rate_hint;
  for (int f = 0; f < F; ++f)
    for (int r = 0; r < H; ++r) {
      int sr = geom.crop_r0 + std::min(geom.crop_h - 1, r * geom.crop_h / H);
      for (int c = 0; c < W; ++c) {
        int sc = geom.crop_c0 + std::min(geom.crop_w - 1, c * geom.crop_w / W);
        for (int ch = 0; ch < C; ++ch) out.at(f, r, c, ch) = clip.at(f, sr, sc, ch);
      }
    }
  return out;
}

inline FrameAnnotation crop_annotation(const FrameAnnotation& a, const GeomTransform& g,
                                       int H, int W) {
  if (!a.present) return a;
  FrameAnnotation out;
  if (a.box) {
    Box b = *a.box;
    double sx = static_cast<double>(W) / g.crop_w, sy = static_cast<double>(H) / g.crop_h;
    Box nb{(b.x0 - g.crop_c0) * sx, (b.y0 - g.crop_r0) * sy, (b.x1 - g.crop_c0) * sx,
           (b.y1 - g.crop_r0) * sy};
    nb.x0 = std::max(0.0, nb.x0);
    nb.y0 = std::max(0.0, nb.y0);
    nb.x1 = std::min(static_cast<double>(W), nb.x1);
    nb.y1 = std::min(static_cast<double>(H), nb.y1);
    if (nb.valid()) {
      out.present = true;
      out.box = nb;
    }
  }
  if (a.mask) {
    Mask m({H, W});
    bool any = false;
    for (int r = 0; r < H; ++r) {
      int sr = g.crop_r0 + std::min(g.crop_h - 1, r * g.crop_h / H);
      for (int c = 0; c < W; ++c) {
        int sc = g.crop_c0 + std::min(g.crop_w - 1, c * g.crop_w / W);
        uint8_t v = a.mask->v[static_cast<std::size_t>(sr) * a.mask->dim(1) + sc];
        m.v[static_cast<std::size_t>(r) * W + c] = v;
        any |= v != 0;
      }
    }
    if (any) {
      out.present = true;
      out.mask = std::move(m);
    }
  }
  return out;
}

// Samples one temporal selection and one geometric transform, then produces
// the weak/strong pair with transformed annotations.
template <typename T>
ViewPair<T> make_view_pair(const Sample<T>& sample, int T_len, Rng& rng,
                           const AugmentConfig& cfg = {}) {
  const int F = sample.clip.num_frames();
  const int H = sample.clip.height();
  const int W = sample.clip.width();
  ViewPair<T> vp;
  vp.temporal = sample_temporal(F, T_len, rng);
  vp.geom.hflip = rng.bernoulli(cfg.p_hflip);
  if (cfg.enable_crop) {
    double s = rng.uniform(cfg.crop_scale_lo, 1.0);
    vp.geom.crop = true;
    vp.geom.crop_h = std::max(1, static_cast<int>(std::lround(H * s)));
    vp.geom.crop_w = std::max(1, static_cast<int>(std::lround(W * s)));
    vp.geom.crop_r0 = static_cast<int>(rng.uniform_int(0, H - vp.geom.crop_h));
    vp.geom.crop_c0 = static_cast<int>(rng.uniform_int(0, W - vp.geom.crop_w));
  }

  VideoClip<T> selected = select_frames(sample.clip, vp.temporal);
  if (vp.geom.crop) selected = apply_crop(selected, vp.geom);
  vp.weak = apply_weak(selected, vp.geom);
  vp.strong = apply_strong(selected, vp.geom, rng, cfg);

  if (sample.annotations) {
    std::vector<FrameAnnotation> anns;
    anns.reserve(vp.temporal.indices.size());
    for (int idx : vp.temporal.indices) {
      FrameAnnotation a = (*sample.annotations)[idx];
      if (a.present && vp.geom.crop) a = crop_annotation(a, vp.geom, H, W);
      if (a.present && vp.geom.hflip) {
        if (a.box) a.box = hflip_box(*a.box, W);
        if (a.mask) a.mask = hflip_mask(*a.mask);
      }
      anns.push_back(std::move(a));
    }
    vp.annotations_t = std::move(anns);
  }
  return vp;
}

}  // namespace smt
