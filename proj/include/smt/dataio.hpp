#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smt/common.hpp"
#include "smt/metrics.hpp"
#include "smt/tensor.hpp"
#include "smt/types.hpp"

namespace smt {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- raw tensor files ----
// Little-endian container: "SMTT" | version u32 | dtype u8 (0=f32,1=u8) |
// ndim u32 | dims i32[ndim] | payload. No codec, loadable anywhere.

namespace io {

inline void write_f32(const fs::path& path, const Tensor<float>& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  os.write("SMTT", 4);
  uint32_t ver = 1, nd = static_cast<uint32_t>(t.shape.size());
  uint8_t dt = 0;
  os.write(reinterpret_cast<const char*>(&ver), 4);
  os.write(reinterpret_cast<const char*>(&dt), 1);
  os.write(reinterpret_cast<const char*>(&nd), 4);
  for (int d : t.shape) {
    int32_t dd = d;
    os.write(reinterpret_cast<const char*>(&dd), 4);
  }
  os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * 4));
}

inline void write_u8(const fs::path& path, const Tensor<uint8_t>& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  os.write("SMTT", 4);
  uint32_t ver = 1, nd = static_cast<uint32_t>(t.shape.size());
  uint8_t dt = 1;
  os.write(reinterpret_cast<const char*>(&ver), 4);
  os.write(reinterpret_cast<const char*>(&dt), 1);
  os.write(reinterpret_cast<const char*>(&nd), 4);
  for (int d : t.shape) {
    int32_t dd = d;
    os.write(reinterpret_cast<const char*>(&dd), 4);
  }
  os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel()));
}

inline std::vector<int> read_header(std::ifstream& is, const fs::path& path,
                                    uint8_t expect_dtype) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "SMTT")
    throw std::runtime_error("bad tensor file magic: " + path.string());
  uint32_t ver = 0, nd = 0;
  uint8_t dt = 0;
  is.read(reinterpret_cast<char*>(&ver), 4);
  is.read(reinterpret_cast<char*>(&dt), 1);
  is.read(reinterpret_cast<char*>(&nd), 4);
  if (dt != expect_dtype) throw std::runtime_error("unexpected dtype in " + path.string());
  std::vector<int> shape(nd);
  for (uint32_t i = 0; i < nd; ++i) {
    int32_t d = 0;
    is.read(reinterpret_cast<char*>(&d), 4);
    shape[i] = d;
  }
  return shape;
}

inline Tensor<float> read_f32(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  Tensor<float> t(read_header(is, path, 0));
  is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 4));
  if (!is) throw std::runtime_error("truncated tensor file: " + path.string());
  return t;
}

inline Tensor<uint8_t> read_u8(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  Tensor<uint8_t> t(read_header(is, path, 1));
  is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel()));
  if (!is) throw std::runtime_error("truncated tensor file: " + path.string());
  return t;
}

inline json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  json j;
  is >> j;
  return j;
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  os << j.dump(2) << "\n";
}

}  // namespace io

// ---- dataset and split manifests ----

struct ClassInfo {
  int id = 0;
  std::string name;
  std::string background;  // "static" | "dynamic"
};

struct ClipEntry {
  std::string id;
  int class_id = 0;
  std::string background;
  std::string split;  // "train" | "val" | "test"
  std::string path;   // directory relative to dataset root
};

struct DatasetManifest {
  int format = 1;
  uint64_t seed = 0;
  std::vector<ClassInfo> classes;
  std::vector<ClipEntry> clips;

  json to_json() const {
    json j;
    j["format"] = format;
    j["seed"] = seed;
    j["classes"] = json::array();
    for (const auto& c : classes)
      j["classes"].push_back({{"id", c.id}, {"name", c.name}, {"background", c.background}});
    j["clips"] = json::array();
    for (const auto& c : clips)
      j["clips"].push_back({{"id", c.id},
                            {"class", c.class_id},
                            {"background", c.background},
                            {"split", c.split},
                            {"path", c.path}});
    return j;
  }

  static DatasetManifest from_json(const json& j) {
    DatasetManifest m;
    m.format = j.at("format");
    if (m.format != 1) throw config_error("unsupported dataset manifest format");
    m.seed = j.value("seed", 0ull);
    for (const auto& c : j.at("classes"))
      m.classes.push_back({c.at("id"), c.at("name"), c.at("background")});
    for (const auto& c : j.at("clips"))
      m.clips.push_back({c.at("id"), c.at("class"), c.at("background"), c.at("split"),
                         c.at("path")});
    return m;
  }
};

struct SplitManifest {
  int format = 1;
  uint64_t seed = 0;
  double percent_labeled = 0;
  std::vector<std::string> labeled, unlabeled, validation, test;

  json to_json() const {
    return json{{"format", format},       {"seed", seed},
                {"percent_labeled", percent_labeled}, {"labeled", labeled},
                {"unlabeled", unlabeled}, {"validation", validation},
                {"test", test}};
  }

  static SplitManifest from_json(const json& j) {
    SplitManifest m;
    m.format = j.at("format");
    if (m.format != 1) throw config_error("unsupported split manifest format");
    m.seed = j.at("seed");
    m.percent_labeled = j.at("percent_labeled");
    m.labeled = j.at("labeled").get<std::vector<std::string>>();
    m.unlabeled = j.at("unlabeled").get<std::vector<std::string>>();
    m.validation = j.at("validation").get<std::vector<std::string>>();
    m.test = j.at("test").get<std::vector<std::string>>();
    return m;
  }
};

// ---- detection exchange (JSON lines, one record per video) ----

inline json rle_encode(const Mask& m) {
  // row-major alternating run lengths, starting with a zero run
  std::vector<int> counts;
  uint8_t cur = 0;
  int run = 0;
  for (uint8_t x : m.v) {
    uint8_t b = x ? 1 : 0;
    if (b == cur) {
      ++run;
    } else {
      counts.push_back(run);
      cur = b;
      run = 1;
    }
  }
  counts.push_back(run);
  return json{{"h", m.dim(0)}, {"w", m.dim(1)}, {"counts", counts}};
}

inline Mask rle_decode(const json& j) {
  Mask m({j.at("h").get<int>(), j.at("w").get<int>()});
  std::size_t pos = 0;
  uint8_t cur = 0;
  for (int run : j.at("counts")) {
    for (int i = 0; i < run && pos < m.numel(); ++i) m.v[pos++] = cur;
    cur = 1 - cur;
  }
  if (pos != m.numel()) throw std::runtime_error("rle_decode: run lengths do not cover mask");
  return m;
}

inline json tube_to_json(const DetectionTube& t) {
  json frames = json::array();
  for (std::size_t f = 0; f < t.frames.size(); ++f) {
    const auto& fa = t.frames[f];
    if (!fa.present) continue;
    json jf{{"index", f}};
    if (fa.box) jf["box"] = {fa.box->x0, fa.box->y0, fa.box->x1, fa.box->y1};
    if (fa.mask) jf["mask_rle"] = rle_encode(*fa.mask);
    frames.push_back(std::move(jf));
  }
  return json{{"sample_id", t.sample_id},
              {"class_id", t.class_id},
              {"score", t.score},
              {"num_frames", t.frames.size()},
              {"frames", std::move(frames)}};
}

inline DetectionTube tube_from_json(const json& j) {
  DetectionTube t;
  t.sample_id = j.at("sample_id");
  t.class_id = j.at("class_id");
  t.score = j.at("score");
  t.frames.resize(j.at("num_frames").get<std::size_t>());
  for (const auto& jf : j.at("frames")) {
    std::size_t idx = jf.at("index");
    FrameAnnotation& fa = t.frames.at(idx);
    fa.present = true;
    if (jf.contains("box")) {
      auto b = jf.at("box");
      fa.box = Box{b.at(0), b.at(1), b.at(2), b.at(3)};
    }
    if (jf.contains("mask_rle")) fa.mask = rle_decode(jf.at("mask_rle"));
  }
  return t;
}

inline void write_detections(const fs::path& path, const std::vector<DetectionTube>& tubes) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  for (const auto& t : tubes) os << tube_to_json(t).dump() << "\n";
}

inline std::vector<DetectionTube> read_detections(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::vector<DetectionTube> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(tube_from_json(json::parse(line)));
  }
  return out;
}

}  // namespace smt
