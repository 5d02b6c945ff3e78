#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smt/augment.hpp"
#include "smt/checkpoint.hpp"
#include "smt/detector.hpp"
#include "smt/eor.hpp"
#include "smt/evalreport.hpp"
#include "smt/losses.hpp"
#include "smt/metrics.hpp"
#include "smt/optimizer.hpp"
#include "smt/synthdata.hpp"

namespace smt {

// Dual-pair mean-teacher trainer: a student/teacher base detector plus a
// student/teacher refinement net, one Adam step over the student pair per
// batch, EMA update of both teacher copies after every step.

struct TrainConfig {
  std::string mode = "full";  // supervised | mean-teacher | +eor | +dop | full
  std::string dataset_dir;
  std::string split_path;
  std::string out_dir;
  int epochs = 50;
  int batch_size = 8;
  double beta = 0.99;
  double lambda_max = 0.1;
  int ramp_epochs = 15;
  double lr = 1e-4;
  double eor_lr = 0;  // 0: inherit lr. The refinement net usually wants a
                      // smaller rate than the detector head.
  int burn_in_epochs = 0;
  uint64_t seed = 1;
  double binarize_thresh = 0.5;
  bool eval_student = false;
  int checkpoint_every = 0;  // 0: only the rolling last checkpoint
  DetectorConfig detector;
  EoRConfig eor;
  AugmentConfig aug;

  void validate() const {
    if (epochs < 1) throw config_error("train: epochs must be >= 1");
    if (batch_size < 2 || batch_size % 2)
      throw config_error("train: batch_size must be even and >= 2");
    if (beta < 0 || beta > 1) throw config_error("train: beta must be in [0,1]");
    if (lambda_max < 0) throw config_error("train: lambda_max must be >= 0");
    if (ramp_epochs < 0) throw config_error("train: ramp_epochs must be >= 0");
    if (lr <= 0) throw config_error("train: lr must be > 0");
    if (eor_lr < 0) throw config_error("train: eor_lr must be >= 0 (0 inherits lr)");
    if (burn_in_epochs < 0) throw config_error("train: burn_in_epochs must be >= 0");
    detector.validate();
    eor.validate();
  }

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"mode", mode},
        {"dataset_dir", dataset_dir},
        {"split_path", split_path},
        {"out_dir", out_dir},
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"beta", beta},
        {"lambda_max", lambda_max},
        {"ramp_epochs", ramp_epochs},
        {"lr", lr},
        {"eor_lr", eor_lr},
        {"burn_in_epochs", burn_in_epochs},
        {"seed", seed},
        {"binarize_thresh", binarize_thresh},
        {"eval_student", eval_student},
        {"checkpoint_every", checkpoint_every},
        {"detector",
         {{"num_classes", detector.num_classes},
          {"clip_len", detector.clip_len},
          {"height", detector.height},
          {"width", detector.width},
          {"in_channels", detector.in_channels},
          {"channels", detector.channels}}},
        {"eor", {{"depth", eor.depth}, {"channels", eor.channels}}}};
  }

  // Identifies checkpoint compatibility; paths and logging knobs are excluded.
  // epochs is excluded too: it is only the stop condition, so a run may be
  // extended by resuming with a larger value.
  uint64_t config_hash() const {
    nlohmann::json j = to_json();
    j.erase("dataset_dir");
    j.erase("split_path");
    j.erase("out_dir");
    j.erase("checkpoint_every");
    j.erase("eval_student");
    j.erase("epochs");
    return hash_str(j.dump());
  }
};

struct ModeFlags {
  bool unlabeled = false;
  bool cls_cons = false;
  bool loc_cons = false;
  bool eor_cons = false;
  bool dop_u = false;
  bool dop_eor = false;
};

inline ModeFlags mode_flags(const std::string& mode) {
  if (mode == "supervised") return {};
  if (mode == "mean-teacher") return {true, true, true, false, false, false};
  if (mode == "+eor") return {true, true, true, true, false, false};
  if (mode == "+dop") return {true, true, true, false, true, false};
  if (mode == "full") return {true, true, true, true, true, true};
  throw config_error("unknown mode: " + mode +
                     " (expected supervised|mean-teacher|+eor|+dop|full)");
}

template <typename T>
struct BatchItem {
  ViewPair<T> views;
  std::optional<int> label;
  std::string sample_id;
};

// Builds the {F,H,W} 0/1 localization target from transformed annotations.
template <typename T>
Tensor<T> loc_target(const std::vector<FrameAnnotation>& anns, int H, int W) {
  Tensor<T> out({static_cast<int>(anns.size()), H, W});
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  for (std::size_t f = 0; f < anns.size(); ++f) {
    const auto& a = anns[f];
    if (!a.present) continue;
    const Mask m = a.mask ? *a.mask : box_to_mask(*a.box, H, W);
    for (std::size_t i = 0; i < hw; ++i) out.v[f * hw + i] = m.v[i] ? T(1) : T(0);
  }
  return out;
}

template <typename T>
struct TrainState {
  TrainConfig cfg;
  ModeFlags flags;
  Detector<T> student, teacher;
  EoRNet<T> eor_student, eor_teacher;
  Adam<T> opt;
  int epoch = 0;     // next epoch to run
  int64_t step = 0;  // global step counter
  Rng shuffle_lab{0}, shuffle_unl{0};
  std::vector<std::size_t> labeled_order;  // cycled across epoch boundaries
  std::size_t labeled_cursor = 0;

  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  explicit TrainState(const TrainConfig& c)
      : cfg(c),
        flags(mode_flags(c.mode)),
        student(with_seed(c.detector, derive_seed(c.seed, "detector"))),
        teacher(with_seed(c.detector, derive_seed(c.seed, "detector"))),
        eor_student(with_eor_seed(c.eor, derive_seed(c.seed, "eor"))),
        eor_teacher(with_eor_seed(c.eor, derive_seed(c.seed, "eor"))),
        opt(all_student_params(), c.lr),
        shuffle_lab(derive_seed(c.seed, "shuffle.labeled")),
        shuffle_unl(derive_seed(c.seed, "shuffle.unlabeled")) {
    if (c.eor_lr > 0)
      opt.set_lr_range(student.params().size(), opt.params().size(), c.eor_lr);
  }

  std::vector<nn::NamedParam<T>> all_student_params() {
    auto out = student.params();
    for (auto& p : eor_student.params()) out.push_back(p);
    return out;
  }

  double lambda_at(int e) const {
    if (!flags.unlabeled || e < cfg.burn_in_epochs) return 0.0;
    return lambda_schedule(static_cast<double>(e), cfg.lambda_max,
                           static_cast<double>(cfg.ramp_epochs));
  }

 private:
  static DetectorConfig with_seed(DetectorConfig d, uint64_t s) {
    d.seed = s;
    return d;
  }
  static EoRConfig with_eor_seed(EoRConfig e, uint64_t s) {
    e.seed = s;
    return e;
  }
};

// One optimizer step. Forward/backward passes are interleaved per sample (each
// layer caches a single activation set), but the observable contract holds:
// teacher passes carry no gradient, the student refinement net consumes a
// detached copy of the student map, one optimizer update covers the full
// student parameter set, and both EMA updates run last.
template <typename T>
LossBreakdown train_step(TrainState<T>& state, const std::vector<BatchItem<T>>& labeled,
                         const std::vector<BatchItem<T>>& unlabeled, double lambda) {
  const auto& cfg = state.cfg;
  const ModeFlags& fl = state.flags;
  const int L = static_cast<int>(labeled.size());
  const int N = L + static_cast<int>(unlabeled.size());
  if (L == 0) throw std::invalid_argument("train_step: labeled batch is empty");

  const bool cons = lambda > 0.0;
  const bool need_teor = cons && (fl.eor_cons || fl.dop_eor);

  state.opt.zero_grad();
  LossBreakdown b;
  b.lambda_t = lambda;

  auto process = [&](const BatchItem<T>& item, bool is_labeled) {
    ModelOutput<T> t_out;
    LocalizationMap<T> t_loc_eor;
    std::optional<ClassDistribution<T>> t_dist;
    if (cons) {
      t_out = state.teacher.forward(clip_to_input(item.views.weak), false);
      t_dist = ClassDistribution<T>::from_logits(t_out.class_logits);
      if (need_teor) t_loc_eor = state.eor_teacher.forward(t_out.loc_map, false);
    }

    ModelOutput<T> s_out = state.student.forward(clip_to_input(item.views.strong), true);
    std::vector<T> g_logits(s_out.class_logits.size(), T(0));
    Tensor<T> g_loc(s_out.loc_map.shape);

    std::optional<Tensor<T>> target;
    if (is_labeled) {
      target = loc_target<T>(*item.views.annotations_t, cfg.detector.height,
                             cfg.detector.width);
      b.sup_cls += softmax_cross_entropy(s_out.class_logits, *item.label) / L;
      // g_logits is still zero here, so the overwriting grad call is additive
      softmax_cross_entropy_grad(s_out.class_logits, *item.label, 1.0 / L, g_logits);
      b.sup_loc += bce_mean(s_out.loc_map, *target) / L;
      bce_mean_grad(s_out.loc_map, *target, 1.0 / L, g_loc);
    }

    if (cons) {
      const double w = lambda / N;
      if (fl.cls_cons) {
        b.base_cls_cons += jsd(*t_dist, ClassDistribution<T>::from_logits(s_out.class_logits)) / N;
        jsd_grad_wrt_logits(*t_dist, s_out.class_logits, w, g_logits);
      }
      if (fl.loc_cons) {
        b.base_loc_cons += loc_consistency(t_out.loc_map, s_out.loc_map) / N;
        mse_mean_grad(t_out.loc_map, s_out.loc_map, w, g_loc);
      }
      if (fl.eor_cons) {
        b.eor_cons += eor_consistency(t_loc_eor, s_out.loc_map) / N;
        mse_mean_grad(t_loc_eor, s_out.loc_map, w, g_loc);
      }
      if (fl.dop_u) {
        b.dop_u += mse_mean(temporal_difference(t_out.loc_map),
                            temporal_difference(s_out.loc_map)) /
                   N;
        dop_grad_wrt_s(t_out.loc_map, s_out.loc_map, w, g_loc);
      }
      if (fl.dop_eor) {
        b.dop_eor += mse_mean(temporal_difference(t_loc_eor),
                              temporal_difference(s_out.loc_map)) /
                     N;
        dop_grad_wrt_s(t_loc_eor, s_out.loc_map, w, g_loc);
      }
    }

    state.student.backward(g_logits, g_loc);

    if (is_labeled) {
      // detached copy of the student map; the refinement net's input gradient
      // is discarded so nothing flows back into the base detector
      LocalizationMap<T> detached = s_out.loc_map;
      LocalizationMap<T> refined = state.eor_student.forward(detached, true);
      b.sup_eor += bce_mean(refined, *target) / L;
      Tensor<T> g_ref(refined.shape);
      bce_mean_grad(refined, *target, 1.0 / L, g_ref);
      state.eor_student.backward(g_ref);
    }
  };

  for (const auto& item : labeled) process(item, true);
  if (cons)
    for (const auto& item : unlabeled) process(item, false);

  try {
    b = total_loss(b);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " [breakdown " + b.csv_row() + "]");
  }

  state.opt.step();
  auto st_params = state.student.params();
  auto te_params = state.teacher.params();
  ema_update(te_params, st_params, cfg.beta);
  auto est_params = state.eor_student.params();
  auto ete_params = state.eor_teacher.params();
  ema_update(ete_params, est_params, cfg.beta);
  ++state.step;
  return b;
}

// ---- evaluation helpers ----

// Center contiguous window of clip_len frames (identity when F == clip_len).
template <typename T>
std::vector<int> eval_window(int F, int clip_len) {
  if (F < clip_len)
    throw std::invalid_argument("evaluation clip shorter than the model clip length");
  std::vector<int> idx(clip_len);
  int start = (F - clip_len) / 2;
  for (int i = 0; i < clip_len; ++i) idx[i] = start + i;
  return idx;
}

template <typename T>
std::vector<DetectionTube> predict_tubes(Detector<T>& model,
                                         const std::vector<Sample<T>>& samples,
                                         double binarize_thresh,
                                         std::vector<double>* coherence_out = nullptr) {
  const int clip_len = model.config().clip_len;
  std::vector<DetectionTube> tubes;
  for (const auto& s : samples) {
    TemporalSelection sel;
    sel.indices = eval_window<T>(s.clip.num_frames(), clip_len);
    VideoClip<T> window = select_frames(s.clip, sel);
    ModelOutput<T> out = model.forward(clip_to_input(window), false);
    if (coherence_out) coherence_out->push_back(coherence_score(out.loc_map));
    tubes.push_back(extract_tube(out, s.sample_id, binarize_thresh));
  }
  return tubes;
}

template <typename T>
std::vector<GroundTruthVideo> make_ground_truth(const std::vector<Sample<T>>& samples,
                                                int clip_len) {
  std::vector<GroundTruthVideo> gts;
  for (const auto& s : samples) {
    GroundTruthVideo gt;
    gt.sample_id = s.sample_id;
    gt.label = *s.label;
    for (int idx : eval_window<T>(s.clip.num_frames(), clip_len))
      gt.frames.push_back((*s.annotations)[idx]);
    gts.push_back(std::move(gt));
  }
  return gts;
}

template <typename T>
EvalReport evaluate_model(Detector<T>& model, const std::vector<Sample<T>>& samples,
                          const std::map<int, std::string>& class_background,
                          double binarize_thresh) {
  std::vector<double> coh;
  auto tubes = predict_tubes(model, samples, binarize_thresh, &coh);
  auto gts = make_ground_truth(samples, model.config().clip_len);
  double mean_coh = 0;
  for (double c : coh) mean_coh += c;
  if (!coh.empty()) mean_coh /= static_cast<double>(coh.size());
  return make_eval_report(tubes, gts, class_background, mean_coh);
}

// ---- full training loop ----

template <typename T>
void save_checkpoint(TrainState<T>& state, const fs::path& path);
template <typename T>
void load_checkpoint(TrainState<T>& state, const fs::path& path);

template <typename T>
Sample<T> sample_cast(Sample<float> s) {
  Sample<T> out;
  out.sample_id = std::move(s.sample_id);
  out.label = s.label;
  out.annotations = std::move(s.annotations);
  out.clip.frame_rate_hint = s.clip.frame_rate_hint;
  out.clip.frames = s.clip.frames.template cast<T>();
  return out;
}

template <typename T>
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg) {
    cfg.validate();
    state_ = std::make_unique<TrainState<T>>(cfg);
    load_data();
  }

  TrainState<T>& state() { return *state_; }
  const std::vector<Sample<T>>& validation_samples() const { return val_; }
  const std::map<int, std::string>& class_background() const { return class_bg_; }

  // Derived from the unlabeled pool in every mode so mode comparisons see the
  // same number of optimizer steps.
  int steps_per_epoch() const {
    const int half = state_->cfg.batch_size / 2;
    const int U = static_cast<int>(unlabeled_ids_.size());
    const int Lb = static_cast<int>(labeled_ids_.size());
    int n = (U >= half ? U : Lb) / half;
    return std::max(1, n);
  }

  void run() {
    const auto& cfg = state_->cfg;
    fs::create_directories(cfg.out_dir);
    io::write_json(fs::path(cfg.out_dir) / "run_config.json", cfg.to_json());

    std::ofstream loss_log;
    open_loss_log(loss_log);
    std::ofstream metrics_log(fs::path(cfg.out_dir) / "metrics.jsonl",
                              state_->epoch > 0 ? std::ios::app : std::ios::out);

    for (int epoch = state_->epoch; epoch < cfg.epochs; ++epoch) {
      run_epoch(epoch, &loss_log);
      EvalReport rep = eval_epoch();
      metrics_log << nlohmann::json{{"epoch", epoch},
                                    {"f_map_0.5", rep.f_map_at("0.5")},
                                    {"v_map_0.5", rep.v_map_at("0.5")},
                                    {"coherence", rep.coherence}}
                         .dump()
                  << "\n"
                  << std::flush;
      state_->epoch = epoch + 1;
      save_checkpoint(*state_, fs::path(cfg.out_dir) / "checkpoint_last.smtc");
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
        save_checkpoint(*state_, fs::path(cfg.out_dir) /
                                     ("checkpoint_epoch" + std::to_string(epoch + 1) + ".smtc"));
    }
  }

  // One epoch of optimizer steps; loss rows appended to the CSV stream if given.
  void run_epoch(int epoch, std::ofstream* loss_log = nullptr) {
    const auto& cfg = state_->cfg;
    const int half = cfg.batch_size / 2;
    const double lambda = state_->lambda_at(epoch);
    const bool use_unlabeled = state_->flags.unlabeled && !unlabeled_ids_.empty();

    std::vector<std::size_t> unl_order(unlabeled_ids_.size());
    for (std::size_t i = 0; i < unl_order.size(); ++i) unl_order[i] = i;
    shuffle(unl_order, state_->shuffle_unl);
    std::size_t unl_cursor = 0;

    const int steps = steps_per_epoch();
    for (int s = 0; s < steps; ++s) {
      std::vector<BatchItem<T>> lab_batch, unl_batch;
      for (int i = 0; i < half; ++i) lab_batch.push_back(next_labeled(epoch));
      if (use_unlabeled) {
        for (int i = 0; i < half; ++i) {
          if (unl_cursor >= unl_order.size()) {
            shuffle(unl_order, state_->shuffle_unl);
            unl_cursor = 0;
          }
          unl_batch.push_back(make_item(unlabeled_pool_[unl_order[unl_cursor++]], epoch));
        }
      }
      LossBreakdown b = train_step(*state_, lab_batch, unl_batch, lambda);
      if (loss_log)
        *loss_log << epoch << "," << (state_->step - 1) << "," << b.csv_row() << "\n";
    }
    if (loss_log) loss_log->flush();
  }

  EvalReport eval_epoch() {
    Detector<T>& model = state_->cfg.eval_student ? state_->student : state_->teacher;
    return evaluate_model(model, val_, class_bg_, state_->cfg.binarize_thresh);
  }

  void resume_from(const fs::path& checkpoint) { load_checkpoint(*state_, checkpoint); }

 private:
  void load_data() {
    const auto& cfg = state_->cfg;
    if (cfg.dataset_dir.empty() || cfg.split_path.empty())
      throw config_error("train: dataset_dir and split_path are required");
    fs::path root(cfg.dataset_dir);
    DatasetManifest manifest = DatasetManifest::from_json(io::read_json(root / "dataset.json"));
    SplitManifest split = SplitManifest::from_json(io::read_json(cfg.split_path));
    std::map<std::string, const ClipEntry*> by_id;
    for (const auto& c : manifest.clips) by_id[c.id] = &c;
    for (const auto& c : manifest.classes) class_bg_[c.id] = c.background;

    auto load_list = [&](const std::vector<std::string>& ids, bool labeled,
                         std::vector<Sample<T>>& out) {
      for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw config_error("split references unknown clip: " + id);
        out.push_back(sample_cast<T>(load_sample(root, *it->second, labeled)));
      }
    };
    load_list(split.labeled, true, labeled_pool_);
    if (state_->flags.unlabeled) load_list(split.unlabeled, false, unlabeled_pool_);
    load_list(split.validation, true, val_);
    labeled_ids_ = split.labeled;
    unlabeled_ids_ = split.unlabeled;

    state_->labeled_order.resize(labeled_pool_.size());
    for (std::size_t i = 0; i < labeled_pool_.size(); ++i) state_->labeled_order[i] = i;
    if (state_->epoch == 0 && state_->step == 0) {
      shuffle(state_->labeled_order, state_->shuffle_lab);
      state_->labeled_cursor = 0;
    }
  }

  static void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
  }

  BatchItem<T> next_labeled(int epoch) {
    if (state_->labeled_cursor >= state_->labeled_order.size()) {
      shuffle(state_->labeled_order, state_->shuffle_lab);
      state_->labeled_cursor = 0;
    }
    return make_item(labeled_pool_[state_->labeled_order[state_->labeled_cursor++]], epoch);
  }

  BatchItem<T> make_item(const Sample<T>& s, int epoch) {
    Rng rng(derive_seed(state_->cfg.seed, "aug." + s.sample_id,
                        static_cast<uint64_t>(state_->step)));
    BatchItem<T> item;
    item.views = make_view_pair(s, state_->cfg.detector.clip_len, rng, state_->cfg.aug);
    item.label = s.label;
    item.sample_id = s.sample_id;
    return item;
  }

  void open_loss_log(std::ofstream& os) {
    fs::path p = fs::path(state_->cfg.out_dir) / "loss_log.csv";
    bool fresh = state_->epoch == 0 || !fs::exists(p);
    os.open(p, fresh ? std::ios::out : std::ios::app);
    if (fresh) os << "epoch,step," << LossBreakdown::csv_header() << "\n";
  }

  std::unique_ptr<TrainState<T>> state_;
  std::vector<Sample<T>> labeled_pool_, unlabeled_pool_, val_;
  std::vector<std::string> labeled_ids_, unlabeled_ids_;
  std::map<int, std::string> class_bg_;
};

// ---- checkpointing ----

template <typename T>
void save_checkpoint(TrainState<T>& state, const fs::path& path) {
  std::vector<std::pair<std::string, const Tensor<T>*>> arrays;
  auto add = [&](const std::string& prefix, std::vector<nn::NamedParam<T>> params) {
    for (auto& p : params) arrays.push_back({prefix + p.name, p.value});
  };
  add("detector.student.", state.student.params());
  add("detector.teacher.", state.teacher.params());
  add("eor.student.", state.eor_student.params());
  add("eor.teacher.", state.eor_teacher.params());
  const auto& opt_params = state.opt.params();
  for (std::size_t i = 0; i < opt_params.size(); ++i) {
    arrays.push_back({"optim.m." + opt_params[i].name + "#" + std::to_string(i),
                      &state.opt.moment1()[i]});
    arrays.push_back({"optim.v." + opt_params[i].name + "#" + std::to_string(i),
                      &state.opt.moment2()[i]});
  }

  nlohmann::json meta{{"format", 1},
                      {"config_hash", state.cfg.config_hash()},
                      {"epoch", state.epoch},
                      {"step", state.step},
                      {"adam_t", state.opt.steps_taken()},
                      {"rng_labeled", state.shuffle_lab.state()},
                      {"rng_unlabeled", state.shuffle_unl.state()},
                      {"labeled_order", state.labeled_order},
                      {"labeled_cursor", state.labeled_cursor}};
  write_archive<T>(path, meta, arrays);
}

template <typename T>
void load_checkpoint(TrainState<T>& state, const fs::path& path) {
  Archive<T> ar = read_archive<T>(path);
  if (ar.meta.at("format") != 1) throw std::runtime_error("unsupported checkpoint format");
  if (ar.meta.at("config_hash").template get<uint64_t>() != state.cfg.config_hash())
    throw std::runtime_error("checkpoint config hash does not match the current config");

  auto restore = [&](const std::string& prefix, std::vector<nn::NamedParam<T>> params) {
    for (auto& p : params) {
      auto it = ar.arrays.find(prefix + p.name);
      if (it == ar.arrays.end())
        throw std::runtime_error("checkpoint missing entry: " + prefix + p.name);
      check_same_shape(*p.value, it->second, "load_checkpoint");
      p.value->v = it->second.v;
    }
  };
  restore("detector.student.", state.student.params());
  restore("detector.teacher.", state.teacher.params());
  restore("eor.student.", state.eor_student.params());
  restore("eor.teacher.", state.eor_teacher.params());
  const auto& opt_params = state.opt.params();
  for (std::size_t i = 0; i < opt_params.size(); ++i) {
    for (auto [tag, dst] : {std::pair{"optim.m.", &state.opt.moment1()[i]},
                            std::pair{"optim.v.", &state.opt.moment2()[i]}}) {
      std::string name = tag + opt_params[i].name + "#" + std::to_string(i);
      auto it = ar.arrays.find(name);
      if (it == ar.arrays.end())
        throw std::runtime_error("checkpoint missing entry: " + name);
      dst->v = it->second.v;
    }
  }
  state.epoch = ar.meta.at("epoch");
  state.step = ar.meta.at("step");
  state.opt.set_steps_taken(ar.meta.at("adam_t"));
  state.shuffle_lab.set_state(ar.meta.at("rng_labeled"));
  state.shuffle_unl.set_state(ar.meta.at("rng_unlabeled"));
  state.labeled_order =
      ar.meta.at("labeled_order").template get<std::vector<std::size_t>>();
  state.labeled_cursor = ar.meta.at("labeled_cursor");
}

}  // namespace smt
