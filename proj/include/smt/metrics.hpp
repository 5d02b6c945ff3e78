#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smt/losses.hpp"
#include "smt/types.hpp"

namespace smt {

// Per-frame scored regions linked across time for one video and class.
struct DetectionTube {
  std::string sample_id;
  int class_id = -1;
  double score = 0.0;
  std::vector<FrameAnnotation> frames;

  bool empty() const {
    for (const auto& f : frames)
      if (f.present) return false;
    return true;
  }
};

enum class IouMode { box, mask };

namespace detail {

// largest 4-connected foreground component of a binary mask; empty optional if
// no foreground
inline std::optional<Mask> largest_component(const Mask& bin) {
  const int H = bin.dim(0), W = bin.dim(1);
  std::vector<int> label(static_cast<std::size_t>(H) * W, -1);
  int best = -1;
  std::size_t best_size = 0;
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < label.size(); ++start) {
    if (!bin.v[start] || label[start] >= 0) continue;
    std::size_t size = 0;
    stack.clear();
    stack.push_back(start);
    label[start] = next;
    while (!stack.empty()) {
      std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      int r = static_cast<int>(i) / W, c = static_cast<int>(i) % W;
      const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int nr = r + dr[k], nc = c + dc[k];
        if (nr < 0 || nr >= H || nc < 0 || nc >= W) continue;
        std::size_t j = static_cast<std::size_t>(nr) * W + nc;
        if (bin.v[j] && label[j] < 0) {
          label[j] = next;
          stack.push_back(j);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best = next;
    }
    ++next;
  }
  if (best < 0) return std::nullopt;
  Mask out({H, W});
  for (std::size_t i = 0; i < label.size(); ++i) out.v[i] = label[i] == best ? 1 : 0;
  return out;
}

}  // namespace detail

// Binarize each frame of the localization map, keep the largest connected
// component, and score the tube with the argmax class probability.
template <typename T>
DetectionTube extract_tube(const ModelOutput<T>& output, const std::string& sample_id,
                           double binarize_thresh = 0.5) {
  const int F = output.loc_map.dim(0), H = output.loc_map.dim(1), W = output.loc_map.dim(2);
  auto dist = ClassDistribution<T>::from_logits(output.class_logits);
  DetectionTube tube;
  tube.sample_id = sample_id;
  tube.class_id = dist.argmax();
  tube.score = static_cast<double>(dist.probs[tube.class_id]);
  tube.frames.resize(F);
  for (int f = 0; f < F; ++f) {
    Mask bin({H, W});
    const T* src = output.loc_map.data() + static_cast<std::size_t>(f) * H * W;
    bool any = false;
    for (std::size_t i = 0; i < static_cast<std::size_t>(H) * W; ++i) {
      bin.v[i] = static_cast<double>(src[i]) > binarize_thresh ? 1 : 0;
      any |= bin.v[i] != 0;
    }
    if (!any) continue;
    auto comp = detail::largest_component(bin);
    if (!comp) continue;
    FrameAnnotation& fa = tube.frames[f];
    fa.present = true;
    fa.box = mask_to_box(*comp);
    fa.mask = std::move(*comp);
  }
  return tube;
}

inline double box_intersection(const Box& a, const Box& b) {
  double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  return ix * iy;
}

namespace detail {

inline const Box& require_box(const FrameAnnotation& a) {
  if (a.box) return *a.box;
  throw std::invalid_argument("frame_iou: annotation has no box; store one or use mask mode");
}

inline const Mask& require_mask(const FrameAnnotation& a) {
  if (a.mask) return *a.mask;
  throw std::invalid_argument("frame_iou: annotation has no mask; store one or use box mode");
}

struct Overlap {
  double inter = 0, uni = 0;
};

inline Overlap frame_overlap(const FrameAnnotation& a, const FrameAnnotation& b,
                             IouMode mode) {
  Overlap o;
  if (!a.present && !b.present) return o;
  if (mode == IouMode::box) {
    double aa = a.present ? require_box(a).area() : 0.0;
    double ab = b.present ? require_box(b).area() : 0.0;
    o.inter = (a.present && b.present) ? box_intersection(require_box(a), require_box(b))
                                       : 0.0;
    o.uni = aa + ab - o.inter;
  } else {
    std::size_t aa = a.present ? mask_area(require_mask(a)) : 0;
    std::size_t ab = b.present ? mask_area(require_mask(b)) : 0;
    std::size_t in = 0;
    if (a.present && b.present) {
      const Mask& ma = require_mask(a);
      const Mask& mb = require_mask(b);
      check_same_shape(ma, mb, "frame_iou(mask)");
      for (std::size_t i = 0; i < ma.numel(); ++i) in += (ma.v[i] && mb.v[i]) ? 1 : 0;
    }
    o.inter = static_cast<double>(in);
    o.uni = static_cast<double>(aa + ab - in);
  }
  return o;
}

}  // namespace detail

// IoU of two per-frame regions. A present/absent pair scores 0; absent/absent
// pairs are excluded from scoring by callers.
inline double frame_iou(const FrameAnnotation& a, const FrameAnnotation& b, IouMode mode) {
  auto o = detail::frame_overlap(a, b, mode);
  return o.uni > 0 ? o.inter / o.uni : 0.0;
}

// 3D tube IoU: sum of per-frame intersections over sum of per-frame unions,
// over frames where either tube is present.
inline double tube_iou_3d(const DetectionTube& pred, const DetectionTube& gt,
                          IouMode mode = IouMode::mask) {
  const std::size_t F = std::max(pred.frames.size(), gt.frames.size());
  double inter = 0, uni = 0;
  static const FrameAnnotation absent;
  for (std::size_t f = 0; f < F; ++f) {
    const FrameAnnotation& a = f < pred.frames.size() ? pred.frames[f] : absent;
    const FrameAnnotation& b = f < gt.frames.size() ? gt.frames[f] : absent;
    if (!a.present && !b.present) continue;
    auto o = detail::frame_overlap(a, b, mode);
    inter += o.inter;
    uni += o.uni;
  }
  return uni > 0 ? inter / uni : 0.0;
}

// One pooled detection for AP computation: a score plus its IoU against every
// ground truth in the class pool (0 where matching is impossible).
struct ScoredDetection {
  double score = 0.0;
  std::vector<double> iou;  // indexed by gt
};

// Greedy matching at descending score (stable order breaks ties), all-points
// interpolated area under the precision-recall curve.
inline double average_precision(std::vector<ScoredDetection> detections, std::size_t num_gt,
                                double thresh) {
  if (num_gt == 0) return 0.0;
  std::stable_sort(detections.begin(), detections.end(),
                   [](const ScoredDetection& a, const ScoredDetection& b) {
                     return a.score > b.score;
                   });
  std::vector<bool> matched(num_gt, false);
  std::vector<int> tp(detections.size(), 0);
  for (std::size_t d = 0; d < detections.size(); ++d) {
    int best = -1;
    double best_iou = thresh;  // strict: IoU must exceed the threshold
    for (std::size_t g = 0; g < num_gt; ++g) {
      if (matched[g]) continue;
      if (detections[d].iou[g] > best_iou) {
        best_iou = detections[d].iou[g];
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      matched[best] = true;
      tp[d] = 1;
    }
  }
  // precision/recall points
  std::vector<double> prec(detections.size()), rec(detections.size());
  int cum_tp = 0;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    cum_tp += tp[d];
    prec[d] = static_cast<double>(cum_tp) / static_cast<double>(d + 1);
    rec[d] = static_cast<double>(cum_tp) / static_cast<double>(num_gt);
  }
  // all-points interpolation: running max of precision from the right
  for (std::size_t d = detections.size(); d-- > 1;)
    prec[d - 1] = std::max(prec[d - 1], prec[d]);
  double ap = 0.0, prev_rec = 0.0;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    ap += (rec[d] - prev_rec) * prec[d];
    prev_rec = rec[d];
  }
  return ap;
}

// ---- dataset-level pooling ----

struct GroundTruthVideo {
  std::string sample_id;
  int label = -1;
  std::vector<FrameAnnotation> frames;
};

struct PerClassAp {
  std::map<int, double> ap;        // class -> AP, classes with >= 1 gt instance
  double mean = 0.0;

  void finish() {
    double s = 0.0;
    for (auto& [k, v] : ap) s += v;
    mean = ap.empty() ? 0.0 : s / static_cast<double>(ap.size());
  }
};

// f-mAP: pools per-frame detections per class; a detection can only match the
// ground truth of its own video and frame index.
inline PerClassAp f_map(const std::vector<DetectionTube>& predictions,
                        const std::vector<GroundTruthVideo>& ground_truths, double thresh,
                        IouMode mode = IouMode::mask) {
  std::map<int, std::vector<std::pair<std::string, std::size_t>>> gt_keys;  // class->(video,frame)
  std::map<int, std::vector<const FrameAnnotation*>> gt_regions;
  for (const auto& gt : ground_truths)
    for (std::size_t f = 0; f < gt.frames.size(); ++f)
      if (gt.frames[f].present) {
        gt_keys[gt.label].push_back({gt.sample_id, f});
        gt_regions[gt.label].push_back(&gt.frames[f]);
      }
  PerClassAp out;
  for (const auto& [cls, keys] : gt_keys) {
    std::vector<ScoredDetection> dets;
    for (const auto& tube : predictions) {
      if (tube.class_id != cls) continue;
      for (std::size_t f = 0; f < tube.frames.size(); ++f) {
        if (!tube.frames[f].present) continue;
        ScoredDetection sd;
        sd.score = tube.score;
        sd.iou.resize(keys.size(), 0.0);
        for (std::size_t g = 0; g < keys.size(); ++g)
          if (keys[g].first == tube.sample_id && keys[g].second == f)
            sd.iou[g] = frame_iou(tube.frames[f], *gt_regions[cls][g], mode);
        dets.push_back(std::move(sd));
      }
    }
    out.ap[cls] = average_precision(std::move(dets), keys.size(), thresh);
  }
  out.finish();
  return out;
}

// v-mAP: pools per-video tubes per class with 3D IoU.
inline PerClassAp v_map(const std::vector<DetectionTube>& predictions,
                        const std::vector<GroundTruthVideo>& ground_truths, double thresh,
                        IouMode mode = IouMode::mask) {
  std::map<int, std::vector<const GroundTruthVideo*>> gts;
  for (const auto& gt : ground_truths) gts[gt.label].push_back(&gt);
  PerClassAp out;
  for (const auto& [cls, pool] : gts) {
    std::vector<ScoredDetection> dets;
    for (const auto& tube : predictions) {
      if (tube.class_id != cls) continue;
      ScoredDetection sd;
      sd.score = tube.score;
      sd.iou.resize(pool.size(), 0.0);
      for (std::size_t g = 0; g < pool.size(); ++g)
        if (pool[g]->sample_id == tube.sample_id) {
          DetectionTube gt_tube;
          gt_tube.frames = pool[g]->frames;
          sd.iou[g] = tube_iou_3d(tube, gt_tube, mode);
        }
      dets.push_back(std::move(sd));
    }
    out.ap[cls] = average_precision(std::move(dets), pool.size(), thresh);
  }
  out.finish();
  return out;
}

// Temporal-coherence diagnostic: mean |phi(map)|; lower is smoother.
template <typename T>
double coherence_score(const LocalizationMap<T>& map) {
  Tensor<T> d = temporal_difference(map);
  double s = 0.0;
  for (const T& x : d.v) s += std::abs(static_cast<double>(x));
  return s / static_cast<double>(d.numel());
}

}  // namespace smt
