#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smt/tensor.hpp"

namespace smt {

using Mask = Tensor<uint8_t>;  // {H,W}, 0/1

// Axis-aligned box in pixel units, half-open [x0,x1) x [y0,y1).
// Pixel (r,c) has its center at (c+0.5, r+0.5).
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool valid() const { return x0 < x1 && y0 < y1; }
};

inline bool operator==(const Box& a, const Box& b) {
  return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
}

// Fixed-length frame sequence with values normalized to [0,1].
// frames: {F,H,W,C}, C in {1,3}.
template <typename T>
struct VideoClip {
  Tensor<T> frames;
  std::optional<double> frame_rate_hint;

  int num_frames() const { return frames.shape.empty() ? 0 : frames.dim(0); }
  int height() const { return frames.dim(1); }
  int width() const { return frames.dim(2); }
  int channels() const { return frames.dim(3); }

  T& at(int f, int r, int c, int ch) {
    return frames.v[((static_cast<std::size_t>(f) * frames.dim(1) + r) * frames.dim(2) + c) *
                        frames.dim(3) +
                    ch];
  }
  T at(int f, int r, int c, int ch) const {
    return frames.v[((static_cast<std::size_t>(f) * frames.dim(1) + r) * frames.dim(2) + c) *
                        frames.dim(3) +
                    ch];
  }
};

// Per-frame soft foreground map in [0,1], shape {F,H,W}.
template <typename T>
using LocalizationMap = Tensor<T>;

// Normalized class distribution over K classes.
template <typename T>
struct ClassDistribution {
  std::vector<T> probs;

  static ClassDistribution from_logits(const std::vector<T>& logits) {
    ClassDistribution d;
    d.probs.resize(logits.size());
    T mx = logits.empty() ? T(0) : *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      d.probs[i] = std::exp(logits[i] - mx);
      z += static_cast<double>(d.probs[i]);
    }
    for (auto& p : d.probs) p = static_cast<T>(p / z);
    return d;
  }

  int argmax() const {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
};

// Ground truth (or detection) region on one frame: a box, a mask, or both.
struct FrameAnnotation {
  bool present = false;
  std::optional<Box> box;
  std::optional<Mask> mask;
};

template <typename T>
struct ModelOutput {
  std::vector<T> class_logits;
  LocalizationMap<T> loc_map;  // {F,H,W}
};

template <typename T>
struct Sample {
  VideoClip<T> clip;
  std::optional<int> label;
  std::optional<std::vector<FrameAnnotation>> annotations;
  std::string sample_id;

  bool labeled() const { return label.has_value(); }
};

// ---- region conversions ----

// Mask pixel is set iff the pixel center lies inside the half-open box.
inline Mask box_to_mask(const Box& box, int height, int width) {
  if (!box.valid()) throw std::invalid_argument("box_to_mask: degenerate box");
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > width || box.y1 > height)
    throw std::invalid_argument("box_to_mask: box outside frame bounds");
  Mask m({height, width});
  for (int r = 0; r < height; ++r) {
    double cy = r + 0.5;
    if (cy < box.y0 || cy >= box.y1) continue;
    for (int c = 0; c < width; ++c) {
      double cx = c + 0.5;
      if (cx >= box.x0 && cx < box.x1) m.v[static_cast<std::size_t>(r) * width + c] = 1;
    }
  }
  return m;
}

// Tightest axis-aligned box enclosing all foreground pixels.
inline Box mask_to_box(const Mask& mask) {
  int h = mask.dim(0), w = mask.dim(1);
  int rmin = h, rmax = -1, cmin = w, cmax = -1;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (mask.v[static_cast<std::size_t>(r) * w + c]) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
  if (rmax < 0) throw std::invalid_argument("mask_to_box: empty mask");
  return Box{static_cast<double>(cmin), static_cast<double>(rmin),
             static_cast<double>(cmax + 1), static_cast<double>(rmax + 1)};
}

inline std::size_t mask_area(const Mask& m) {
  std::size_t n = 0;
  for (uint8_t x : m.v) n += x ? 1 : 0;
  return n;
}

// ---- validation ----

// Reports every invariant violation; never throws.
template <typename T>
std::vector<std::string> validate_sample(const Sample<T>& s) {
  std::vector<std::string> out;
  const auto& fr = s.clip.frames;
  if (fr.shape.size() != 4) {
    out.push_back("clip frames must be rank-4 F x H x W x C");
    return out;
  }
  int F = fr.dim(0), H = fr.dim(1), W = fr.dim(2), C = fr.dim(3);
  if (F < 2) out.push_back("clip must have F >= 2 frames");
  if (C != 1 && C != 3) out.push_back("clip channels must be 1 or 3");
  for (const T& x : fr.v) {
    if (!std::isfinite(static_cast<double>(x))) {
      out.push_back("clip contains non-finite value");
      break;
    }
    if (x < T(0) || x > T(1)) {
      out.push_back("clip value out of range [0,1]");
      break;
    }
  }
  if (s.clip.frame_rate_hint && *s.clip.frame_rate_hint <= 0)
    out.push_back("frame_rate_hint must be positive");

  bool has_label = s.label.has_value();
  bool has_ann = s.annotations.has_value();
  if (has_label != has_ann) {
    out.push_back(has_label ? "labeled sample missing annotations"
                            : "unlabeled sample carries annotations");
  }
  if (has_label && (*s.label < 0)) out.push_back("label must be non-negative");
  if (has_ann) {
    if (static_cast<int>(s.annotations->size()) != F)
      out.push_back("annotation count does not match frame count");
    for (std::size_t i = 0; i < s.annotations->size(); ++i) {
      const auto& a = (*s.annotations)[i];
      if (!a.present) continue;
      if (!a.box && !a.mask) {
        out.push_back("present annotation has neither box nor mask (frame " +
                      std::to_string(i) + ")");
        continue;
      }
      if (a.box) {
        if (!a.box->valid() || a.box->x0 < 0 || a.box->y0 < 0 || a.box->x1 > W ||
            a.box->y1 > H)
          out.push_back("invalid or out-of-bounds box (frame " + std::to_string(i) + ")");
      }
      if (a.mask) {
        if (a.mask->shape != std::vector<int>{H, W})
          out.push_back("mask shape mismatch (frame " + std::to_string(i) + ")");
        else if (mask_area(*a.mask) == 0)
          out.push_back("present annotation has empty mask (frame " + std::to_string(i) +
                        ")");
      }
    }
  }
  return out;
}

}  // namespace smt
