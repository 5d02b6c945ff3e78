#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "smt/synthdata.hpp"
#include "smt/types.hpp"

using namespace smt;

namespace {

SynthConfig tiny_config() {
  SynthConfig cfg;
  cfg.clips_per_class = 4;
  cfg.val_per_class = 1;
  cfg.test_per_class = 1;
  cfg.height = 16;
  cfg.width = 16;
  cfg.seed = 99;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("smt_synth_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("render_clip is deterministic in the seed") {
  SynthConfig cfg = tiny_config();
  auto a = synth::render_clip(cfg, 2, 1234);
  auto b = synth::render_clip(cfg, 2, 1234);
  CHECK(max_abs_diff(a.frames, b.frames) == 0.0);
  CHECK(a.masks.v == b.masks.v);
  auto c = synth::render_clip(cfg, 2, 1235);
  CHECK(max_abs_diff(a.frames, c.frames) > 0.0);
}

TEST_CASE("masks match the analytic shape test and boxes are tight") {
  SynthConfig cfg = tiny_config();
  for (int cls = 0; cls < 6; ++cls) {
    auto rc = synth::render_clip(cfg, cls, 1000 + cls);
    for (int f = 0; f < cfg.frames; ++f) {
      Mask m({cfg.height, cfg.width});
      for (int r = 0; r < cfg.height; ++r)
        for (int c = 0; c < cfg.width; ++c) {
          bool in = synth::shape_contains(rc.spec.shape, rc.spec.cx[f], rc.spec.cy[f],
                                          rc.spec.radius, c + 0.5, r + 0.5);
          std::size_t i = (static_cast<std::size_t>(f) * cfg.height + r) * cfg.width + c;
          CHECK(rc.masks.v[i] == (in ? 1 : 0));
          m.v[static_cast<std::size_t>(r) * cfg.width + c] = rc.masks.v[i];
        }
      REQUIRE(mask_area(m) > 0);
      CHECK(mask_to_box(m) == rc.boxes[f]);
    }
  }
}

TEST_CASE("shape stays fully inside the frame on every frame") {
  SynthConfig cfg = tiny_config();
  for (int cls = 0; cls < 6; ++cls)
    for (uint64_t seed = 0; seed < 10; ++seed) {
      auto rc = synth::render_clip(cfg, cls, seed * 71 + cls);
      for (const auto& b : rc.boxes) {
        CHECK(b.x0 >= 0);
        CHECK(b.y0 >= 0);
        CHECK(b.x1 <= cfg.width);
        CHECK(b.y1 <= cfg.height);
        CHECK(b.valid());
      }
    }
}

TEST_CASE("static backgrounds repeat across frames, dynamic ones move") {
  SynthConfig cfg = tiny_config();
  cfg.noise = 0.0;
  auto probe = [&](int cls) {
    auto rc = synth::render_clip(cfg, cls, 555);
    const int H = cfg.height, W = cfg.width, C = cfg.channels;
    double diff = 0;
    int counted = 0;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        // compare only pixels outside the shape on both frames
        std::size_t m0 = (static_cast<std::size_t>(0) * H + r) * W + c;
        std::size_t m1 = (static_cast<std::size_t>(1) * H + r) * W + c;
        if (rc.masks.v[m0] || rc.masks.v[m1]) continue;
        for (int ch = 0; ch < C; ++ch) {
          std::size_t i0 = ((static_cast<std::size_t>(0) * H + r) * W + c) * C + ch;
          std::size_t i1 = ((static_cast<std::size_t>(1) * H + r) * W + c) * C + ch;
          diff = std::max(diff, std::abs(double(rc.frames.v[i0]) - double(rc.frames.v[i1])));
          ++counted;
        }
      }
    REQUIRE(counted > 0);
    return diff;
  };
  CHECK(probe(0) == 0.0);  // class 0 is static in mixed mode
  CHECK(probe(5) > 0.0);   // class 5 is dynamic
}

TEST_CASE("class naming and background partition") {
  SynthConfig cfg = tiny_config();
  CHECK(synth::class_name(0) == "square_linear");
  CHECK(synth::class_name(3) == "disc_circular");
  CHECK(synth::class_name(5) == "triangle_circular");
  for (int cls = 0; cls < 3; ++cls) CHECK(synth::class_background(cfg, cls) == "static");
  for (int cls = 3; cls < 6; ++cls) CHECK(synth::class_background(cfg, cls) == "dynamic");
  cfg.background_mode = "dynamic";
  CHECK(synth::class_background(cfg, 0) == "dynamic");
}

TEST_CASE("generate_dataset writes a loadable, valid dataset") {
  SynthConfig cfg = tiny_config();
  fs::path dir = fresh_dir("gen");
  DatasetManifest manifest = generate_dataset(cfg, dir);
  CHECK(manifest.clips.size() == 6u * (4 + 1 + 1));
  CHECK(manifest.classes.size() == 6);
  CHECK(fs::exists(dir / "dataset.json"));

  DatasetManifest reread = DatasetManifest::from_json(io::read_json(dir / "dataset.json"));
  CHECK(reread.clips.size() == manifest.clips.size());

  int checked = 0;
  for (const auto& entry : manifest.clips) {
    if (checked >= 8) break;
    Sample<float> s = load_sample(dir, entry, true);
    CHECK(s.clip.num_frames() == cfg.frames);
    CHECK(s.clip.height() == cfg.height);
    CHECK(s.clip.channels() == 3);
    CHECK(*s.label == entry.class_id);
    auto violations = validate_sample(s);
    for (const auto& v : violations) MESSAGE(v);
    CHECK(violations.empty());

    Sample<float> u = load_sample(dir, entry, false);
    CHECK_FALSE(u.labeled());
    CHECK_FALSE(u.annotations.has_value());
    ++checked;
  }
  fs::remove_all(dir);
}

TEST_CASE("regenerating with the same config is byte-deterministic") {
  SynthConfig cfg = tiny_config();
  fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
  generate_dataset(cfg, d1);
  generate_dataset(cfg, d2);
  std::ifstream a(d1 / "square_linear_train_0" / "frames.smtt", std::ios::binary);
  std::ifstream b(d2 / "square_linear_train_0" / "frames.smtt", std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK_FALSE(sa.empty());
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("split is stratified, disjoint, deterministic") {
  SynthConfig cfg = tiny_config();
  fs::path dir = fresh_dir("split");
  DatasetManifest manifest = generate_dataset(cfg, dir);

  SplitManifest s1 = split_labeled_unlabeled(manifest, 50, 7);
  SplitManifest s2 = split_labeled_unlabeled(manifest, 50, 7);
  CHECK(s1.labeled == s2.labeled);
  CHECK(s1.unlabeled == s2.unlabeled);

  CHECK(s1.labeled.size() == 6 * 2);
  CHECK(s1.unlabeled.size() == 6 * 2);
  CHECK(s1.validation.size() == 6);
  CHECK(s1.test.size() == 6);

  std::set<std::string> lab(s1.labeled.begin(), s1.labeled.end());
  for (const auto& id : s1.unlabeled) CHECK(lab.count(id) == 0);

  // per-class labeled counts
  std::map<int, int> per_class;
  std::map<std::string, int> cls_of;
  for (const auto& c : manifest.clips) cls_of[c.id] = c.class_id;
  for (const auto& id : s1.labeled) per_class[cls_of[id]]++;
  for (int cls = 0; cls < 6; ++cls) CHECK(per_class[cls] == 2);

  SplitManifest s3 = split_labeled_unlabeled(manifest, 50, 8);
  CHECK(s3.labeled != s1.labeled);

  CHECK_THROWS_AS(split_labeled_unlabeled(manifest, 0, 7), config_error);
  CHECK_THROWS_AS(split_labeled_unlabeled(manifest, 101, 7), config_error);
  // a percentage that would leave a class with zero labeled samples
  CHECK_THROWS_AS(split_labeled_unlabeled(manifest, 1, 7), config_error);
  fs::remove_all(dir);
}

TEST_CASE("tensor file round trip") {
  fs::path dir = fresh_dir("io");
  fs::create_directories(dir);
  Rng rng(1);
  Tensor<float> t({3, 4, 5});
  for (auto& x : t.v) x = static_cast<float>(rng.uniform(0, 1));
  io::write_f32(dir / "t.smtt", t);
  Tensor<float> r = io::read_f32(dir / "t.smtt");
  CHECK(r.shape == t.shape);
  CHECK(max_abs_diff(r, t) == 0.0);

  Tensor<uint8_t> m({4, 4});
  m.v = {0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1};
  io::write_u8(dir / "m.smtt", m);
  CHECK(io::read_u8(dir / "m.smtt").v == m.v);
  CHECK_THROWS(io::read_f32(dir / "m.smtt"));  // dtype mismatch
  fs::remove_all(dir);
}

TEST_CASE("rle mask round trip") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    Mask m({7, 9});
    for (auto& x : m.v) x = rng.bernoulli(0.4) ? 1 : 0;
    Mask r = rle_decode(rle_encode(m));
    CHECK(r.shape == m.shape);
    CHECK(r.v == m.v);
  }
  Mask zeros({3, 3}), ones({3, 3}, 1);
  CHECK(rle_decode(rle_encode(zeros)).v == zeros.v);
  CHECK(rle_decode(rle_encode(ones)).v == ones.v);
}

TEST_CASE("detection exchange round trip") {
  fs::path dir = fresh_dir("det");
  fs::create_directories(dir);
  DetectionTube t;
  t.sample_id = "clip_3";
  t.class_id = 4;
  t.score = 0.875;
  t.frames.resize(4);
  t.frames[1].present = true;
  t.frames[1].box = Box{2, 3, 9, 11};
  t.frames[1].mask = box_to_mask(*t.frames[1].box, 16, 16);
  t.frames[3].present = true;
  t.frames[3].box = Box{0, 0, 5, 5};

  write_detections(dir / "d.jsonl", {t});
  auto back = read_detections(dir / "d.jsonl");
  REQUIRE(back.size() == 1);
  CHECK(back[0].sample_id == "clip_3");
  CHECK(back[0].class_id == 4);
  CHECK(back[0].score == 0.875);
  REQUIRE(back[0].frames.size() == 4);
  CHECK_FALSE(back[0].frames[0].present);
  CHECK(*back[0].frames[1].box == *t.frames[1].box);
  CHECK(back[0].frames[1].mask->v == t.frames[1].mask->v);
  CHECK(*back[0].frames[3].box == *t.frames[3].box);
  CHECK_FALSE(back[0].frames[3].mask.has_value());
  fs::remove_all(dir);
}
