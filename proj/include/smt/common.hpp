#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smt {

// Thrown for malformed configs and user input; maps to exit code 2 in the CLI.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t hash_str(std::string_view s) {
  // FNV-1a
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic generator with portable uniform/normal draws. std::*_distribution
// is implementation-defined, so the draw logic lives here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : g_(seed) {}

  uint64_t next_u64() { return g_(); }

  // [0,1)
  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive range
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    // rejection sampling to avoid modulo bias
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = g_();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % span);
  }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * M_PI * u2);
    has_cached_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::string state() const {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << g_ << ' ' << (has_cached_ ? 1 : 0) << ' ' << cached_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    int flag = 0;
    is >> g_ >> flag >> cached_;
    if (!is) throw std::runtime_error("Rng: bad serialized state");
    has_cached_ = flag != 0;
  }

 private:
  std::mt19937_64 g_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Derives an independent stream seed from a base seed and a label, so distinct
// consumers (per-sample augmentation, shuffling, init) never share draws.
inline uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index = 0) {
  uint64_t h = splitmix64(base ^ hash_str(label));
  return splitmix64(h ^ splitmix64(index));
}

template <typename T>
inline T clamp01(T x) {
  return x < T(0) ? T(0) : (x > T(1) ? T(1) : x);
}

}  // namespace smt
