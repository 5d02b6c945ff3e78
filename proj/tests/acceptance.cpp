// Acceptance gate: runs the ten release criteria and prints one PASS/FAIL
// line each. Exit code is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "smt/trainer.hpp"

using namespace smt;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("criterion %2d [%s] %s%s%s\n", criterion, ok ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

bool guard(const std::function<bool()>& f, std::string& err) {
  try {
    return f();
  } catch (const std::exception& e) {
    err = e.what();
    return false;
  }
}

// ---- shared helpers ----

Sample<float> synth_sample(int cls, uint64_t seed, bool labeled) {
  SynthConfig sc;
  auto rc = synth::render_clip(sc, cls, seed);
  Sample<float> s;
  s.sample_id = "acc_" + std::to_string(cls) + "_" + std::to_string(seed);
  s.clip.frames = rc.frames;
  if (labeled) {
    s.label = cls;
    std::vector<FrameAnnotation> anns(sc.frames);
    for (int f = 0; f < sc.frames; ++f) {
      anns[f].present = true;
      anns[f].box = rc.boxes[f];
      Mask m({sc.height, sc.width});
      std::copy(rc.masks.data() + static_cast<std::size_t>(f) * sc.height * sc.width,
                rc.masks.data() + static_cast<std::size_t>(f + 1) * sc.height * sc.width,
                m.data());
      anns[f].mask = std::move(m);
    }
    s.annotations = std::move(anns);
  }
  return s;
}

template <typename T>
BatchItem<T> view_item(const Sample<float>& sf, uint64_t aug_seed) {
  Sample<T> s = sample_cast<T>(sf);
  Rng rng(aug_seed);
  BatchItem<T> item;
  item.views = make_view_pair(s, 8, rng, AugmentConfig{});
  item.label = s.label;
  item.sample_id = s.sample_id;
  return item;
}

template <typename T>
double max_param_delta(std::vector<nn::NamedParam<T>> a, std::vector<nn::NamedParam<T>> b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, max_abs_diff(*a[i].value, *b[i].value));
  return d;
}

// ---- criterion 1: EMA exactness ----

bool ema_exactness() {
  TrainConfig cfg;
  cfg.beta = 0.99;
  TrainState<float> st(cfg);

  std::vector<Tensor<float>> pre_t, pre_et;
  for (auto& p : st.teacher.params()) pre_t.push_back(*p.value);
  for (auto& p : st.eor_teacher.params()) pre_et.push_back(*p.value);

  std::vector<BatchItem<float>> lab = {view_item<float>(synth_sample(0, 11, true), 21),
                                       view_item<float>(synth_sample(3, 12, true), 22)};
  std::vector<BatchItem<float>> unl = {view_item<float>(synth_sample(1, 13, false), 23),
                                       view_item<float>(synth_sample(4, 14, false), 24)};
  train_step(st, lab, unl, 0.05);

  const float b = 0.99f, ob = 0.01f;
  double worst = 0;
  auto replay = [&](std::vector<nn::NamedParam<float>> teacher,
                    std::vector<nn::NamedParam<float>> student,
                    const std::vector<Tensor<float>>& pre) {
    for (std::size_t i = 0; i < teacher.size(); ++i)
      for (std::size_t k = 0; k < teacher[i].value->numel(); ++k) {
        float want = b * pre[i].v[k] + ob * student[i].value->v[k];
        worst = std::max(worst, std::abs(double(teacher[i].value->v[k]) - double(want)));
      }
  };
  replay(st.teacher.params(), st.student.params(), pre_t);
  replay(st.eor_teacher.params(), st.eor_student.params(), pre_et);
  std::printf("  ema replay max deviation: %.3g\n", worst);
  return worst <= 1e-6;
}

// ---- criterion 2: gradient isolation ----

bool gradient_isolation() {
  DetectorConfig dcfg;
  Detector<double> det(dcfg);
  EoRConfig ecfg;
  EoRNet<double> eor(ecfg);
  Rng rng(31);

  Tensor<double> x({3, 8, 32, 32});
  for (auto& v : x.v) v = rng.uniform(0, 1);
  ModelOutput<double> out = det.forward(x, true);
  det.zero_grad();
  eor.zero_grad();

  // only the refinement-path loss active: BCE on the refined map from a
  // detached copy of the raw map
  LocalizationMap<double> detached = out.loc_map;
  LocalizationMap<double> refined = eor.forward(detached, true);
  Tensor<double> target(refined.shape);
  for (auto& v : target.v) v = rng.bernoulli(0.2) ? 1.0 : 0.0;
  Tensor<double> g(refined.shape);
  bce_mean_grad(refined, target, 1.0, g);
  eor.backward(g);

  double base_norm = 0;
  for (auto& p : det.params())
    for (double gv : p.grad->v) base_norm = std::max(base_norm, std::abs(gv));
  double eor_norm = 0;
  for (auto& p : eor.params())
    for (double gv : p.grad->v) eor_norm += gv * gv;
  std::printf("  base grad max |g| under refinement-only loss: %g (eor grad norm^2 %g)\n",
              base_norm, eor_norm);
  if (base_norm != 0.0 || eor_norm == 0.0) return false;

  // full losses: the teacher copies must receive no optimizer gradient
  TrainConfig cfg;
  TrainState<float> st(cfg);
  std::vector<BatchItem<float>> lab = {view_item<float>(synth_sample(2, 15, true), 25)};
  std::vector<BatchItem<float>> unl = {view_item<float>(synth_sample(5, 16, false), 26)};
  train_step(st, lab, unl, 0.1);
  double teacher_grad = 0;
  for (auto& p : st.teacher.params())
    for (float gv : p.grad->v) teacher_grad = std::max(teacher_grad, std::abs(double(gv)));
  for (auto& p : st.eor_teacher.params())
    for (float gv : p.grad->v) teacher_grad = std::max(teacher_grad, std::abs(double(gv)));
  std::printf("  teacher grad max |g| after full train_step: %g\n", teacher_grad);
  return teacher_grad == 0.0;
}

// ---- criterion 3: loss oracles ----

bool loss_oracles() {
  Rng rng(41);
  auto rmap = [&](int F = 4, int H = 8, int W = 8) {
    Tensor<double> t({F, H, W});
    for (auto& x : t.v) x = rng.uniform(0.02, 0.98);
    return t;
  };
  auto rdist = [&] {
    std::vector<double> l(4);
    for (auto& x : l) x = rng.uniform(-3, 3);
    return ClassDistribution<double>::from_logits(l);
  };

  for (int trial = 0; trial < 200; ++trial) {
    auto p = rdist(), q = rdist();
    double s = 0;
    for (int i = 0; i < 4; ++i) {
      double m = 0.5 * (p.probs[i] + q.probs[i]);
      if (p.probs[i] > 0) s += 0.5 * p.probs[i] * std::log(p.probs[i] / m);
      if (q.probs[i] > 0) s += 0.5 * q.probs[i] * std::log(q.probs[i] / m);
    }
    if (std::abs(jsd(p, q) - s) > 1e-9) return false;
    if (jsd(p, p) != 0.0) return false;

    Tensor<double> a = rmap(), c = rmap();
    double acc = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += (c.v[i] - a.v[i]) * (c.v[i] - a.v[i]);
    if (std::abs(mse_mean(a, c) - acc / a.numel()) > 1e-9) return false;

    Tensor<double> d = temporal_difference(a);
    for (int f = 0; f < 3; ++f)
      for (int i = 0; i < 64; ++i)
        if (d.v[f * 64 + i] != a.v[(f + 1) * 64 + i] - a.v[f * 64 + i]) return false;

    Tensor<double> e = rmap();
    DopTerms dt = dop_loss(a, e, c);
    if (std::abs(dt.dop_u -
                 mse_mean(temporal_difference(a), temporal_difference(c))) > 1e-12)
      return false;
    if (std::abs(dt.dop_eor -
                 mse_mean(temporal_difference(e), temporal_difference(c))) > 1e-12)
      return false;
  }

  ClassDistribution<double> da, db;
  da.probs = {1, 0, 0, 0};
  db.probs = {0, 0, 1, 0};
  if (jsd(da, db) != std::log(2.0)) return false;

  // exact constant-offset invariance of the difference-of-prediction term
  Tensor<double> a({4, 4, 4}), c({4, 4, 4});
  for (auto& x : a.v) x = static_cast<double>(rng.uniform_int(0, 32)) / 64.0;
  for (auto& x : c.v) x = static_cast<double>(rng.uniform_int(0, 32)) / 64.0;
  Tensor<double> c_off = c;
  for (auto& x : c_off.v) x += 0.25;
  if (dop_loss(a, a, c).dop_u != dop_loss(a, a, c_off).dop_u) return false;

  LossBreakdown bd;
  bd.sup_cls = 0.7;
  bd.sup_loc = 0.2;
  bd.sup_eor = 0.1;
  bd.base_cls_cons = 0.4;
  bd.base_loc_cons = 0.3;
  bd.eor_cons = 0.2;
  bd.dop_u = 0.1;
  bd.dop_eor = 0.05;
  bd.lambda_t = 0.1;
  double want = (0.7 + 0.2 + 0.1) + 0.1 * (0.4 + 0.3 + 0.2 + 0.1 + 0.05);
  return std::abs(total_loss(bd).total - want) <= 1e-9;
}

// ---- criterion 4: loss gradient finite-difference checks ----

bool loss_gradients() {
  Rng rng(51);
  const double h = 1e-4, tol = 1e-3;
  auto rel_ok = [&](double got, double want) {
    double denom = std::max({std::abs(got), std::abs(want), 1e-8});
    return std::abs(got - want) / denom < tol;
  };
  auto fd = [&](const std::function<double()>& f, double& xi) {
    double orig = xi;
    xi = orig + h;
    double fp = f();
    xi = orig - h;
    double fm = f();
    xi = orig;
    return (fp - fm) / (2 * h);
  };

  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> logits(5);
    for (auto& x : logits) x = rng.uniform(-4, 4);
    int label = static_cast<int>(rng.uniform_int(0, 4));
    std::vector<double> g;
    softmax_cross_entropy_grad(logits, label, 1.0, g);
    for (int i = 0; i < 5; ++i)
      if (!rel_ok(g[i], fd([&] { return softmax_cross_entropy(logits, label); }, logits[i])))
        return false;

    auto p = ClassDistribution<double>::from_logits(
        {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
         rng.uniform(-2, 2)});
    std::vector<double> sl(5);
    for (auto& x : sl) x = rng.uniform(-2, 2);
    std::vector<double> gj(5, 0.0);
    jsd_grad_wrt_logits(p, sl, 1.0, gj);
    for (int i = 0; i < 5; ++i)
      if (!rel_ok(gj[i],
                  fd([&] { return jsd(p, ClassDistribution<double>::from_logits(sl)); },
                     sl[i])))
        return false;
  }

  Tensor<double> pred({4, 8, 8}), target({4, 8, 8}), tmap({4, 8, 8});
  for (auto& x : pred.v) x = rng.uniform(0.05, 0.95);
  for (auto& x : target.v) x = rng.bernoulli(0.5) ? 1.0 : 0.0;
  for (auto& x : tmap.v) x = rng.uniform(0.05, 0.95);

  Tensor<double> gb(pred.shape), gm(pred.shape), gd(pred.shape);
  bce_mean_grad(pred, target, 1.0, gb);
  mse_mean_grad(tmap, pred, 1.0, gm);
  dop_grad_wrt_s(tmap, pred, 1.0, gd);
  for (int probe = 0; probe < 60; ++probe) {
    std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, pred.numel() - 1));
    if (!rel_ok(gb.v[k], fd([&] { return bce_mean(pred, target); }, pred.v[k]))) return false;
    if (!rel_ok(gm.v[k], fd([&] { return mse_mean(tmap, pred); }, pred.v[k]))) return false;
    if (!rel_ok(gd.v[k], fd([&] {
                  return mse_mean(temporal_difference(tmap), temporal_difference(pred));
                }, pred.v[k])))
      return false;
  }
  return true;
}

// ---- criterion 5: metric oracles ----

double ap_oracle(std::vector<ScoredDetection> dets, std::size_t num_gt, double thresh) {
  if (num_gt == 0) return 0.0;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  std::vector<bool> used(num_gt, false);
  std::vector<int> tp(dets.size(), 0);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    int best = -1;
    double best_iou = thresh;
    for (std::size_t g = 0; g < num_gt; ++g)
      if (!used[g] && dets[d].iou[g] > best_iou) {
        best_iou = dets[d].iou[g];
        best = static_cast<int>(g);
      }
    if (best >= 0) {
      used[best] = true;
      tp[d] = 1;
    }
  }
  double ap = 0, prev_rec = 0;
  int cum = 0;
  for (std::size_t d = 0; d < dets.size(); ++d) {
    cum += tp[d];
    double rec = double(cum) / double(num_gt);
    double pmax = 0;
    int c2 = cum;
    for (std::size_t j = d; j < dets.size(); ++j) {
      if (j > d) c2 += tp[j];
      pmax = std::max(pmax, double(c2) / double(j + 1));
    }
    ap += (rec - prev_rec) * pmax;
    prev_rec = rec;
  }
  return ap;
}

bool metric_oracles() {
  Rng rng(61);
  // exhaustive-ish random instances
  for (int trial = 0; trial < 600; ++trial) {
    std::size_t nd = 1 + static_cast<std::size_t>(rng.uniform_int(0, 4));
    std::size_t ng = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    std::vector<ScoredDetection> dets(nd);
    for (auto& d : dets) {
      d.score = rng.uniform(0, 1);
      d.iou.resize(ng);
      for (auto& x : d.iou) x = rng.bernoulli(0.3) ? 0.0 : rng.uniform(0, 1);
    }
    double thresh = rng.uniform(0.1, 0.9);
    if (std::abs(average_precision(dets, ng, thresh) - ap_oracle(dets, ng, thresh)) > 1e-9)
      return false;
  }

  auto ann = [](double x0, double y0, double x1, double y1) {
    FrameAnnotation a;
    a.present = true;
    a.box = Box{x0, y0, x1, y1};
    a.mask = box_to_mask(*a.box, 16, 16);
    return a;
  };
  if (std::abs(frame_iou(ann(0, 0, 4, 4), ann(2, 0, 6, 4), IouMode::box) - 8.0 / 24.0) > 1e-9)
    return false;
  if (std::abs(frame_iou(ann(0, 0, 4, 4), ann(2, 0, 6, 4), IouMode::mask) - 8.0 / 24.0) >
      1e-9)
    return false;
  DetectionTube tp_, tg_;
  tp_.frames = {ann(0, 0, 4, 4), ann(0, 0, 4, 4)};
  tg_.frames = {ann(0, 0, 4, 4), ann(2, 0, 6, 4)};
  if (std::abs(tube_iou_3d(tp_, tg_, IouMode::box) - 24.0 / 40.0) > 1e-9) return false;

  // ground-truth self evaluation
  std::vector<GroundTruthVideo> gts;
  std::vector<DetectionTube> preds;
  for (int v = 0; v < 8; ++v) {
    GroundTruthVideo gt;
    gt.sample_id = "v" + std::to_string(v);
    gt.label = v % 4;
    for (int f = 0; f < 3; ++f) {
      double x0 = rng.uniform_int(0, 8), y0 = rng.uniform_int(0, 8);
      gt.frames.push_back(ann(x0, y0, x0 + 5, y0 + 5));
    }
    DetectionTube p;
    p.sample_id = gt.sample_id;
    p.class_id = gt.label;
    p.score = 0.9;
    p.frames = gt.frames;
    gts.push_back(std::move(gt));
    preds.push_back(std::move(p));
  }
  for (double t : {0.2, 0.3, 0.4, 0.5, 0.6, 0.75, 0.95}) {
    if (std::abs(f_map(preds, gts, t, IouMode::mask).mean - 1.0) > 1e-12) return false;
    if (std::abs(v_map(preds, gts, t, IouMode::mask).mean - 1.0) > 1e-12) return false;
  }
  return true;
}

// ---- criterion 6: lambda = 0 degeneration ----

TrainConfig smoke_config(const std::string& mode, const fs::path& data, const fs::path& split) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.dataset_dir = data.string();
  cfg.split_path = split.string();
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 5;
  cfg.detector.clip_len = 8;
  cfg.detector.height = 16;
  cfg.detector.width = 16;
  cfg.detector.channels = {2, 3, 4};
  return cfg;
}

bool lambda_zero_degeneration() {
  fs::path dir = fs::temp_directory_path() / "smt_acc_smoke";
  fs::remove_all(dir);
  SynthConfig sc;
  sc.clips_per_class = 2;
  sc.val_per_class = 1;
  sc.test_per_class = 1;
  sc.height = 16;
  sc.width = 16;
  sc.seed = 12;
  DatasetManifest manifest = generate_dataset(sc, dir);
  SplitManifest split = split_labeled_unlabeled(manifest, 50, 3);
  fs::path split_path = dir / "split.json";
  io::write_json(split_path, split.to_json());

  TrainConfig ca = smoke_config("supervised", dir, split_path);
  TrainConfig cb = smoke_config("full", dir, split_path);
  cb.lambda_max = 0.0;
  ca.out_dir = (dir / "run_sup").string();
  cb.out_dir = (dir / "run_full0").string();
  Trainer<float> ta(ca), tb(cb);
  ta.run_epoch(0);
  tb.run_epoch(0);
  ta.run_epoch(1);
  tb.run_epoch(1);

  double d = std::max(
      {max_param_delta<float>(ta.state().student.params(), tb.state().student.params()),
       max_param_delta<float>(ta.state().teacher.params(), tb.state().teacher.params()),
       max_param_delta<float>(ta.state().eor_student.params(),
                              tb.state().eor_student.params()),
       max_param_delta<float>(ta.state().eor_teacher.params(),
                              tb.state().eor_teacher.params())});
  std::printf("  parameter trajectory divergence after 2 epochs: %g (steps %lld vs %lld)\n",
              d, static_cast<long long>(ta.state().step),
              static_cast<long long>(tb.state().step));
  fs::remove_all(dir);
  return d == 0.0 && ta.state().step == tb.state().step;
}

// ---- criteria 7 & 8: scaled semi-supervised experiment ----

// Pinned after the pilot oracle runs (see README): the margin check requires
// 5 f-mAP points over supervised; the ordering check is strict.
struct ExperimentPin {
  double lr = 3e-3;      // default 1e-4 never exits the classifier plateau here
  double eor_lr = 3e-4;  // refinement net diverges to a constant map at 3e-3
  double lambda_max = 0.1;
  int epochs = 45;
  int ramp_epochs = 10;
  double percent_labeled = 10.0;
  uint64_t split_seed = 7;
  std::vector<uint64_t> seeds = {1, 2, 3};
  double margin = 5.0;  // absolute f-mAP@0.5 points, full vs supervised
};

struct RunResult {
  double f_map = 0;
  double coherence = 0;
};

RunResult run_experiment(const fs::path& bench, const fs::path& split_path,
                         const std::string& mode, uint64_t seed, const ExperimentPin& pin,
                         const fs::path& out_root) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.dataset_dir = bench.string();
  cfg.split_path = split_path.string();
  cfg.out_dir = (out_root / (mode + "_s" + std::to_string(seed))).string();
  cfg.epochs = pin.epochs;
  cfg.ramp_epochs = pin.ramp_epochs;
  cfg.lr = pin.lr;
  cfg.eor_lr = pin.eor_lr;
  cfg.lambda_max = pin.lambda_max;
  cfg.seed = seed;
  Trainer<float> trainer(cfg);
  for (int e = 0; e < cfg.epochs; ++e) {
    trainer.run_epoch(e);
    trainer.state().epoch = e + 1;
  }

  // evaluate the teacher on the held-out test split
  fs::path root(bench);
  auto manifest = DatasetManifest::from_json(io::read_json(root / "dataset.json"));
  auto split = SplitManifest::from_json(io::read_json(split_path));
  std::map<std::string, const ClipEntry*> by_id;
  for (const auto& c : manifest.clips) by_id[c.id] = &c;
  std::map<int, std::string> class_bg;
  for (const auto& c : manifest.classes) class_bg[c.id] = c.background;
  std::vector<Sample<float>> test;
  for (const auto& id : split.test) test.push_back(load_sample(root, *by_id.at(id), true));

  EvalReport rep = evaluate_model(trainer.state().teacher, test, class_bg, 0.5);
  RunResult r;
  r.f_map = rep.f_map_at("0.5");
  r.coherence = rep.coherence;
  std::printf("  run %-12s seed %llu: f-mAP@0.5 %.4f  v-mAP@0.5 %.4f  coherence %.5f\n",
              mode.c_str(), static_cast<unsigned long long>(seed), r.f_map,
              rep.v_map_at("0.5"), r.coherence);
  std::fflush(stdout);
  return r;
}

bool experiment(bool& ordering_ok, bool& margin_ok, bool& dop_ok) {
  ExperimentPin pin;
  fs::path work = fs::temp_directory_path() / "smt_acc_bench";
  fs::remove_all(work);
  fs::path bench = work / "bench";
  SynthConfig sc;  // default benchmark
  DatasetManifest manifest = generate_dataset(sc, bench);
  SplitManifest split =
      split_labeled_unlabeled(manifest, pin.percent_labeled, pin.split_seed);
  fs::path split_path = bench / "split.json";
  io::write_json(split_path, split.to_json());

  const std::vector<std::string> modes = {"supervised", "mean-teacher", "+dop", "full"};
  std::map<std::string, double> mean_f, mean_coh;
  for (const auto& mode : modes) {
    double sf = 0, sco = 0;
    for (uint64_t seed : pin.seeds) {
      RunResult r = run_experiment(bench, split_path, mode, seed, pin, work / "runs");
      sf += r.f_map;
      sco += r.coherence;
    }
    mean_f[mode] = sf / pin.seeds.size();
    mean_coh[mode] = sco / pin.seeds.size();
    std::printf("  mode %-12s mean f-mAP@0.5 %.4f  mean coherence %.5f\n", mode.c_str(),
                mean_f[mode], mean_coh[mode]);
    std::fflush(stdout);
  }

  ordering_ok = mean_f["full"] > mean_f["mean-teacher"] &&
                mean_f["mean-teacher"] > mean_f["supervised"];
  margin_ok = mean_f["full"] >= mean_f["supervised"] + pin.margin / 100.0 &&
              mean_f["full"] >= mean_f["mean-teacher"];
  dop_ok = mean_coh["+dop"] < mean_coh["mean-teacher"];
  std::printf("  gap full-supervised: %.2f points (margin %.1f); ordering %s; dop coherence "
              "%.5f vs mean-teacher %.5f\n",
              (mean_f["full"] - mean_f["supervised"]) * 100.0, pin.margin,
              ordering_ok ? "strict" : "VIOLATED", mean_coh["+dop"],
              mean_coh["mean-teacher"]);
  fs::remove_all(work);
  return true;
}

// ---- criterion 9: refinement-net parameter budget ----

bool eor_budget() {
  EoRNet<float> net{EoRConfig{}};
  auto n = static_cast<double>(net.param_count());
  std::printf("  eor parameters: %zu (target 1.1M +/- 15%%)\n", net.param_count());
  return n >= 1.1e6 * 0.85 && n <= 1.1e6 * 1.15;
}

// ---- criterion 10: static/dynamic report + golden file ----

bool report_partitions() {
  // deterministic report built from ground-truth self-detections over the six
  // benchmark classes (three static-background, three dynamic-background)
  Rng rng(71);
  std::map<int, std::string> class_bg;
  SynthConfig sc;
  for (int cls = 0; cls < 6; ++cls) class_bg[cls] = synth::class_background(sc, cls);

  std::vector<GroundTruthVideo> gts;
  std::vector<DetectionTube> preds;
  for (int v = 0; v < 12; ++v) {
    GroundTruthVideo gt;
    gt.sample_id = "clip" + std::to_string(v);
    gt.label = v % 6;
    for (int f = 0; f < 4; ++f) {
      double x0 = rng.uniform_int(0, 10), y0 = rng.uniform_int(0, 10);
      FrameAnnotation a;
      a.present = true;
      a.box = Box{x0, y0, x0 + 6, y0 + 6};
      a.mask = box_to_mask(*a.box, 32, 32);
      gt.frames.push_back(std::move(a));
    }
    DetectionTube p;
    p.sample_id = gt.sample_id;
    p.class_id = gt.label;
    p.score = 0.75;
    p.frames = gt.frames;
    // degrade half the dynamic-class detections so the sub-means differ
    if (gt.label >= 3 && v >= 6) p.frames[0] = FrameAnnotation{};
    gts.push_back(std::move(gt));
    preds.push_back(std::move(p));
  }
  EvalReport rep = make_eval_report(preds, gts, class_bg, 0.0123);

  bool has_partitions = true;
  for (const auto& row : rep.f_rows)
    if (!row.has_static || !row.has_dynamic) has_partitions = false;
  if (!has_partitions) return false;
  const auto& r5 = rep.f_rows[3];  // threshold 0.5
  std::printf("  f-mAP@0.5 static %.4f dynamic %.4f overall %.4f\n", r5.static_mean,
              r5.dynamic_mean, r5.mean);
  if (!(r5.static_mean >= r5.dynamic_mean)) return false;

  // golden-file comparison of the serialized report
  fs::path golden = fs::path(GOLDEN_DIR) / "eval_report.csv";
  std::string got = rep.to_csv();
  if (!fs::exists(golden)) {
    std::printf("  golden file missing: %s\n", golden.string().c_str());
    std::ofstream dump(fs::temp_directory_path() / "eval_report_golden.csv");
    dump << got;
    return false;
  }
  std::ifstream in(golden);
  std::stringstream want;
  want << in.rdbuf();
  if (got != want.str()) {
    std::printf("  report serialization differs from golden file\n");
    return false;
  }

  // round trip through json keeps the partition means
  EvalReport back = EvalReport::from_json(rep.to_json());
  return back.f_rows[3].static_mean == rep.f_rows[3].static_mean &&
         back.f_rows[3].dynamic_mean == rep.f_rows[3].dynamic_mean &&
         back.coherence == rep.coherence;
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_experiment = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--skip-experiment") skip_experiment = true;

  std::string err;
  auto run = [&](int n, const std::string& name, const std::function<bool()>& f) {
    err.clear();
    bool ok = guard(f, err);
    report(n, name, ok, err);
  };

  run(1, "ema exactness (teacher = beta*prev + (1-beta)*student, 1e-6)", ema_exactness);
  run(2, "gradient isolation (refinement-only loss leaves base grads at 0)",
      gradient_isolation);
  run(3, "loss oracles (jsd/mse/temporal-diff/dop/total, 1e-9)", loss_oracles);
  run(4, "loss gradient finite-difference checks (1e-4 step, 1e-3 rel)", loss_gradients);
  run(5, "metric oracles (iou/ap brute force, gt self-eval = 1.0)", metric_oracles);
  run(6, "lambda=0 degeneration (bit-identical to supervised)", lambda_zero_degeneration);

  if (skip_experiment) {
    report(7, "semi-supervised gain (SKIPPED by flag)", false, "--skip-experiment");
    report(8, "dop coherence effect (SKIPPED by flag)", false, "--skip-experiment");
  } else {
    bool ordering = false, margin = false, dop = false;
    err.clear();
    bool ran = guard([&] { return experiment(ordering, margin, dop); }, err);
    report(7, "semi-supervised gain (full >= sup + margin, full > mt > sup)",
           ran && ordering && margin, err);
    report(8, "dop coherence effect (+dop coherence < mean-teacher)", ran && dop, err);
  }

  run(9, "eor parameter budget (1.1M +/- 15%)", eor_budget);
  run(10, "static/dynamic report partitions + golden file", report_partitions);

  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures;
}
