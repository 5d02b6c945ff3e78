#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "smt/synthdata.hpp"
#include "smt/trainer.hpp"

namespace smt {

// Flat key=value config with dotted namespaces ("train.beta=0.99"). Lines
// starting with '#' are comments. Command-line overrides are applied on top of
// the file, and any key nothing consumed is reported as an error so typos
// cannot silently fall back to defaults.
class KeyValues {
 public:
  static KeyValues parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file: " + path.string());
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw config_error(path.string() + ":" + std::to_string(lineno) +
                           ": expected key=value, got '" + t + "'");
      std::string key = trim(t.substr(0, eq));
      if (key.empty())
        throw config_error(path.string() + ":" + std::to_string(lineno) + ": empty key");
      kv.set(key, trim(t.substr(eq + 1)));
    }
    return kv;
  }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  // "key=value" strings from the command line
  void apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
      auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0)
        throw config_error("override must be key=value, got '" + o + "'");
      set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& def) {
    auto it = kv_.find(key);
    used_.insert(key);
    return it == kv_.end() ? def : it->second;
  }

  int64_t get_int(const std::string& key, int64_t def) {
    auto it = kv_.find(key);
    used_.insert(key);
    if (it == kv_.end()) return def;
    try {
      std::size_t pos = 0;
      int64_t v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw config_error("key " + key + ": expected integer, got '" + it->second + "'");
    }
  }

  double get_double(const std::string& key, double def) {
    auto it = kv_.find(key);
    used_.insert(key);
    if (it == kv_.end()) return def;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw config_error("key " + key + ": expected number, got '" + it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool def) {
    auto it = kv_.find(key);
    used_.insert(key);
    if (it == kv_.end()) return def;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw config_error("key " + key + ": expected true/false, got '" + it->second + "'");
  }

  // Every key must have been consumed by some get_* call.
  void check_all_consumed() const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) unknown.push_back(k);
    if (!unknown.empty()) {
      std::string msg = "unknown config key(s):";
      for (const auto& k : unknown) msg += " " + k;
      throw config_error(msg);
    }
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

inline std::filesystem::path cache_dir() {
  if (const char* env = std::getenv("STABLE_TEACHER_CACHE")) return env;
  return "data-cache";
}

inline SynthConfig synth_config_from(KeyValues& kv) {
  SynthConfig c;
  c.num_classes = static_cast<int>(kv.get_int("synth.num_classes", c.num_classes));
  c.clips_per_class = static_cast<int>(kv.get_int("synth.clips_per_class", c.clips_per_class));
  c.val_per_class = static_cast<int>(kv.get_int("synth.val_per_class", c.val_per_class));
  c.test_per_class = static_cast<int>(kv.get_int("synth.test_per_class", c.test_per_class));
  c.frames = static_cast<int>(kv.get_int("synth.frames", c.frames));
  c.height = static_cast<int>(kv.get_int("synth.height", c.height));
  c.width = static_cast<int>(kv.get_int("synth.width", c.width));
  c.channels = static_cast<int>(kv.get_int("synth.channels", c.channels));
  c.background_mode = kv.get_string("synth.background_mode", c.background_mode);
  c.noise = kv.get_double("synth.noise", c.noise);
  c.seed = static_cast<uint64_t>(kv.get_int("synth.seed", static_cast<int64_t>(c.seed)));
  return c;
}

inline TrainConfig train_config_from(KeyValues& kv) {
  TrainConfig c;
  c.mode = kv.get_string("train.mode", c.mode);
  c.dataset_dir = kv.get_string("train.dataset_dir", c.dataset_dir);
  c.split_path = kv.get_string("train.split_path", c.split_path);
  c.out_dir = kv.get_string("train.out_dir", c.out_dir);
  c.epochs = static_cast<int>(kv.get_int("train.epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.batch_size));
  c.beta = kv.get_double("train.beta", c.beta);
  c.lambda_max = kv.get_double("train.lambda_max", c.lambda_max);
  c.ramp_epochs = static_cast<int>(kv.get_int("train.ramp_epochs", c.ramp_epochs));
  c.lr = kv.get_double("train.lr", c.lr);
  c.eor_lr = kv.get_double("train.eor_lr", c.eor_lr);
  c.burn_in_epochs = static_cast<int>(kv.get_int("train.burn_in_epochs", c.burn_in_epochs));
  c.seed = static_cast<uint64_t>(kv.get_int("train.seed", static_cast<int64_t>(c.seed)));
  c.binarize_thresh = kv.get_double("train.binarize_thresh", c.binarize_thresh);
  c.eval_student = kv.get_bool("train.eval_student", c.eval_student);
  c.checkpoint_every =
      static_cast<int>(kv.get_int("train.checkpoint_every", c.checkpoint_every));

  c.detector.num_classes =
      static_cast<int>(kv.get_int("detector.num_classes", c.detector.num_classes));
  c.detector.clip_len = static_cast<int>(kv.get_int("detector.clip_len", c.detector.clip_len));
  c.detector.height = static_cast<int>(kv.get_int("detector.height", c.detector.height));
  c.detector.width = static_cast<int>(kv.get_int("detector.width", c.detector.width));
  c.detector.in_channels =
      static_cast<int>(kv.get_int("detector.in_channels", c.detector.in_channels));

  c.aug.enable_crop = kv.get_bool("aug.enable_crop", c.aug.enable_crop);
  c.aug.p_hflip = kv.get_double("aug.p_hflip", c.aug.p_hflip);
  c.aug.p_blur = kv.get_double("aug.p_blur", c.aug.p_blur);
  c.aug.p_grayscale = kv.get_double("aug.p_grayscale", c.aug.p_grayscale);
  return c;
}

}  // namespace smt
