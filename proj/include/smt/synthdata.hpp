#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "smt/common.hpp"
#include "smt/dataio.hpp"
#include "smt/types.hpp"

namespace smt {

// Deterministic moving-shapes benchmark. Each clip renders one shape
// (square/disc/triangle) following one motion pattern (linear with border
// reflection, or circular) over a static or scrolling textured background,
// with additive noise. Class = (shape, motion); masks and boxes are exact
// renderings of the shape. Classes are split into a static-background and a
// dynamic-background sub-population.

struct SynthConfig {
  int num_classes = 6;  // 3 shapes x 2 motions
  int clips_per_class = 60;
  int val_per_class = 8;
  int test_per_class = 8;
  int frames = 8;
  int height = 32;
  int width = 32;
  int channels = 3;
  std::string background_mode = "mixed";  // static | dynamic | mixed
  double noise = 0.05;
  uint64_t seed = 7;

  void validate() const {
    if (num_classes != 6) throw config_error("synth: num_classes must be 6 (3 shapes x 2 motions)");
    if (frames < 8) throw config_error("synth: frames must be >= 8");
    if (clips_per_class < 2) throw config_error("synth: clips_per_class must be >= 2");
    if (channels != 1 && channels != 3) throw config_error("synth: channels must be 1 or 3");
    if (background_mode != "static" && background_mode != "dynamic" &&
        background_mode != "mixed")
      throw config_error("synth: background_mode must be static|dynamic|mixed");
  }
};

namespace synth {

inline const char* kShapeNames[3] = {"square", "disc", "triangle"};
inline const char* kMotionNames[2] = {"linear", "circular"};

inline std::string class_name(int cls) {
  return std::string(kShapeNames[cls / 2]) + "_" + kMotionNames[cls % 2];
}

// mixed mode: first half of the classes static, second half dynamic
inline std::string class_background(const SynthConfig& cfg, int cls) {
  if (cfg.background_mode != "mixed") return cfg.background_mode;
  return cls < cfg.num_classes / 2 ? "static" : "dynamic";
}

// analytic inclusion test at pixel center (c+0.5, r+0.5)
inline bool shape_contains(int shape, double cx, double cy, double r, double px, double py) {
  double dx = px - cx, dy = py - cy;
  switch (shape) {
    case 0:  // square
      return std::abs(dx) <= r && std::abs(dy) <= r;
    case 1:  // disc
      return dx * dx + dy * dy <= r * r;
    default: {  // upward triangle with vertices (0,-r), (-r,r), (r,r)
      if (dy < -r || dy > r) return false;
      double half_w = (dy + r) / 2.0;  // width grows linearly from apex
      return std::abs(dx) <= half_w;
    }
  }
}

struct ClipSpec {
  int shape = 0;
  int motion = 0;
  bool dynamic_bg = false;
  double radius = 5;
  double color[3] = {1, 1, 1};
  std::vector<double> cx, cy;  // per-frame center
};

// smooth background texture: coarse grid bilinearly upsampled
struct BgTexture {
  int gh = 8, gw = 8;
  std::vector<double> grid;  // gh x gw x C
  int C = 3;

  double sample(double r, double c, int ch, int H, int W) const {
    double gr = r / H * (gh - 1), gc = c / W * (gw - 1);
    int r0 = static_cast<int>(gr), c0 = static_cast<int>(gc);
    int r1 = std::min(r0 + 1, gh - 1), c1 = std::min(c0 + 1, gw - 1);
    double fr = gr - r0, fc = gc - c0;
    auto g = [&](int rr, int cc) { return grid[(static_cast<std::size_t>(rr) * gw + cc) * C + ch]; };
    return (1 - fr) * ((1 - fc) * g(r0, c0) + fc * g(r0, c1)) +
           fr * ((1 - fc) * g(r1, c0) + fc * g(r1, c1));
  }
};

struct RenderedClip {
  Tensor<float> frames;   // {F,H,W,C}
  Tensor<uint8_t> masks;  // {F,H,W}
  std::vector<Box> boxes;
  ClipSpec spec;
};

inline RenderedClip render_clip(const SynthConfig& cfg, int cls, uint64_t clip_seed) {
  const int F = cfg.frames, H = cfg.height, W = cfg.width, C = cfg.channels;
  Rng rng(clip_seed);
  ClipSpec spec;
  spec.shape = cls / 2;
  spec.motion = cls % 2;
  spec.dynamic_bg = class_background(cfg, cls) == "dynamic";
  spec.radius = rng.uniform(3.5, 6.5);

  // shape color with guaranteed luminance contrast against the mid-gray texture
  for (;;) {
    for (int ch = 0; ch < 3; ++ch) spec.color[ch] = rng.uniform(0.0, 1.0);
    double lum = 0.299 * spec.color[0] + 0.587 * spec.color[1] + 0.114 * spec.color[2];
    if (std::abs(lum - 0.5) > 0.22) break;
  }

  // motion path, reflected at borders so the shape never leaves the frame
  const double margin = spec.radius + 0.5;
  spec.cx.resize(F);
  spec.cy.resize(F);
  if (spec.motion == 0) {
    double x = rng.uniform(margin, W - margin), y = rng.uniform(margin, H - margin);
    double vx = rng.uniform(1.0, 2.5) * (rng.bernoulli(0.5) ? 1 : -1);
    double vy = rng.uniform(1.0, 2.5) * (rng.bernoulli(0.5) ? 1 : -1);
    for (int f = 0; f < F; ++f) {
      spec.cx[f] = x;
      spec.cy[f] = y;
      x += vx;
      y += vy;
      if (x < margin) { x = 2 * margin - x; vx = -vx; }
      if (x > W - margin) { x = 2 * (W - margin) - x; vx = -vx; }
      if (y < margin) { y = 2 * margin - y; vy = -vy; }
      if (y > H - margin) { y = 2 * (H - margin) - y; vy = -vy; }
    }
  } else {
    double orbit = rng.uniform(3.5, std::min(W, H) / 2.0 - margin - 0.5);
    double ocx = rng.uniform(margin + orbit, W - margin - orbit);
    double ocy = rng.uniform(margin + orbit, H - margin - orbit);
    double theta = rng.uniform(0, 2 * M_PI);
    double omega = rng.uniform(0.45, 0.85) * (rng.bernoulli(0.5) ? 1 : -1);
    for (int f = 0; f < F; ++f) {
      spec.cx[f] = ocx + orbit * std::cos(theta);
      spec.cy[f] = ocy + orbit * std::sin(theta);
      theta += omega;
    }
  }

  // background texture (values around mid-gray), plus scroll velocity if dynamic
  BgTexture bg;
  bg.C = C;
  bg.grid.resize(static_cast<std::size_t>(bg.gh) * bg.gw * C);
  for (auto& g : bg.grid) g = rng.uniform(0.3, 0.7);
  double sdx = 0, sdy = 0;
  if (spec.dynamic_bg) {
    sdx = rng.uniform(1.0, 2.5) * (rng.bernoulli(0.5) ? 1 : -1);
    sdy = rng.uniform(1.0, 2.5) * (rng.bernoulli(0.5) ? 1 : -1);
  }

  RenderedClip out;
  out.spec = spec;
  out.frames = Tensor<float>({F, H, W, C});
  out.masks = Tensor<uint8_t>({F, H, W});
  out.boxes.resize(F);
  for (int f = 0; f < F; ++f) {
    // exact mask first
    int rmin = H, rmax = -1, cmin = W, cmax = -1;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        bool in = shape_contains(spec.shape, spec.cx[f], spec.cy[f], spec.radius, c + 0.5,
                                 r + 0.5);
        out.masks.v[(static_cast<std::size_t>(f) * H + r) * W + c] = in ? 1 : 0;
        if (in) {
          rmin = std::min(rmin, r);
          rmax = std::max(rmax, r);
          cmin = std::min(cmin, c);
          cmax = std::max(cmax, c);
        }
      }
    out.boxes[f] = rmax >= 0 ? Box{static_cast<double>(cmin), static_cast<double>(rmin),
                                   static_cast<double>(cmax + 1), static_cast<double>(rmax + 1)}
                             : Box{};
    // frame: background (scrolled if dynamic), shape color, then noise
    double offr = spec.dynamic_bg ? sdy * f : 0.0;
    double offc = spec.dynamic_bg ? sdx * f : 0.0;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        bool in = out.masks.v[(static_cast<std::size_t>(f) * H + r) * W + c] != 0;
        for (int ch = 0; ch < C; ++ch) {
          double v;
          if (in) {
            v = C == 3 ? spec.color[ch]
                       : 0.299 * spec.color[0] + 0.587 * spec.color[1] + 0.114 * spec.color[2];
          } else {
            double rr = std::fmod(std::fmod(r + offr, H) + H, H);
            double cc = std::fmod(std::fmod(c + offc, W) + W, W);
            v = bg.sample(rr, cc, C == 3 ? ch : 0, H, W);
          }
          v += cfg.noise * rng.normal();
          out.frames.v[((static_cast<std::size_t>(f) * H + r) * W + c) * C + ch] =
              static_cast<float>(clamp01(v));
        }
      }
  }
  return out;
}

}  // namespace synth

// Renders every clip to disk and writes the dataset manifest. Fully
// deterministic from cfg.seed.
inline DatasetManifest generate_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.seed = cfg.seed;
  for (int cls = 0; cls < cfg.num_classes; ++cls)
    manifest.classes.push_back(
        {cls, synth::class_name(cls), synth::class_background(cfg, cls)});

  struct SplitDef {
    const char* name;
    int count;
  };
  const SplitDef splits[] = {{"train", cfg.clips_per_class},
                             {"val", cfg.val_per_class},
                             {"test", cfg.test_per_class}};
  for (int cls = 0; cls < cfg.num_classes; ++cls) {
    for (const auto& sp : splits) {
      for (int i = 0; i < sp.count; ++i) {
        std::string id = synth::class_name(cls) + "_" + sp.name + "_" + std::to_string(i);
        uint64_t clip_seed = derive_seed(cfg.seed, std::string("clip.") + id);
        auto rc = synth::render_clip(cfg, cls, clip_seed);
        fs::path dir = out_dir / id;
        fs::create_directories(dir);
        io::write_f32(dir / "frames.smtt", rc.frames);
        io::write_u8(dir / "masks.smtt", rc.masks);
        json boxes = json::array();
        for (const auto& b : rc.boxes) boxes.push_back({b.x0, b.y0, b.x1, b.y1});
        io::write_json(dir / "meta.json",
                       json{{"id", id},
                            {"class", cls},
                            {"class_name", synth::class_name(cls)},
                            {"background", synth::class_background(cfg, cls)},
                            {"shape", synth::kShapeNames[cls / 2]},
                            {"motion", synth::kMotionNames[cls % 2]},
                            {"radius", rc.spec.radius},
                            {"boxes", boxes}});
        manifest.clips.push_back({id, cls, synth::class_background(cfg, cls), sp.name, id});
      }
    }
  }
  io::write_json(out_dir / "dataset.json", manifest.to_json());
  return manifest;
}

// Class-stratified labeled/unlabeled partition of the train split.
inline SplitManifest split_labeled_unlabeled(const DatasetManifest& manifest, double percent,
                                             uint64_t seed) {
  if (percent <= 0 || percent > 100)
    throw config_error("split: percent_labeled must be in (0,100], got " +
                       std::to_string(percent));
  std::map<int, std::vector<std::string>> per_class;
  SplitManifest out;
  out.seed = seed;
  out.percent_labeled = percent;
  for (const auto& c : manifest.clips) {
    if (c.split == "train")
      per_class[c.class_id].push_back(c.id);
    else if (c.split == "val")
      out.validation.push_back(c.id);
    else
      out.test.push_back(c.id);
  }
  for (auto& [cls, ids] : per_class) {
    Rng rng(derive_seed(seed, "split.class", static_cast<uint64_t>(cls)));
    // Fisher-Yates
    for (std::size_t i = ids.size(); i > 1; --i)
      std::swap(ids[i - 1], ids[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
    auto n_lab = static_cast<std::size_t>(
        std::llround(static_cast<double>(ids.size()) * percent / 100.0));
    if (n_lab == 0)
      throw config_error("split: percent_labeled=" + std::to_string(percent) +
                         " yields zero labeled samples for class " + std::to_string(cls));
    n_lab = std::min(n_lab, ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      (i < n_lab ? out.labeled : out.unlabeled).push_back(ids[i]);
  }
  std::sort(out.labeled.begin(), out.labeled.end());
  std::sort(out.unlabeled.begin(), out.unlabeled.end());
  return out;
}

// Loads one clip from disk as a Sample; annotations are attached only when
// `labeled` is set (unlabeled samples are stripped at load time).
inline Sample<float> load_sample(const fs::path& root, const ClipEntry& entry, bool labeled) {
  Sample<float> s;
  s.sample_id = entry.id;
  s.clip.frames = io::read_f32(root / entry.path / "frames.smtt");
  if (labeled) {
    s.label = entry.class_id;
    Tensor<uint8_t> masks = io::read_u8(root / entry.path / "masks.smtt");
    const int F = masks.dim(0), H = masks.dim(1), W = masks.dim(2);
    std::vector<FrameAnnotation> anns(F);
    for (int f = 0; f < F; ++f) {
      Mask m({H, W});
      std::copy(masks.data() + static_cast<std::size_t>(f) * H * W,
                masks.data() + static_cast<std::size_t>(f + 1) * H * W, m.data());
      if (mask_area(m) > 0) {
        anns[f].present = true;
        anns[f].box = mask_to_box(m);
        anns[f].mask = std::move(m);
      }
    }
    s.annotations = std::move(anns);
  }
  return s;
}

}  // namespace smt
