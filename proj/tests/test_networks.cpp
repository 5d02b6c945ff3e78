#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "smt/common.hpp"
#include "smt/detector.hpp"
#include "smt/eor.hpp"
#include "smt/losses.hpp"

using namespace smt;

namespace {

DetectorConfig small_detector() {
  DetectorConfig cfg;
  cfg.num_classes = 3;
  cfg.clip_len = 4;
  cfg.height = 16;
  cfg.width = 16;
  cfg.in_channels = 1;
  cfg.channels = {2, 3, 4};
  cfg.seed = 5;
  return cfg;
}

template <typename Net>
double weighted_output(Net& net, const Tensor<double>& x, const std::vector<double>& wl,
                       const Tensor<double>& wm, bool cache) {
  ModelOutput<double> out = net.forward(x, cache);
  double s = 0;
  for (std::size_t i = 0; i < out.class_logits.size(); ++i) s += wl[i] * out.class_logits[i];
  for (std::size_t i = 0; i < out.loc_map.numel(); ++i) s += wm.v[i] * out.loc_map.v[i];
  return s;
}

void check_rel(double got, double want, double tol = 1e-3) {
  double denom = std::max({std::abs(got), std::abs(want), 1e-6});
  CHECK(std::abs(got - want) / denom < tol);
}

// central difference over a parameter slot, plus a smoothness probe: the check
// only applies where f is locally smooth (leaky-relu kinks within the step
// window make any finite difference meaningless)
struct FdProbe {
  double fd = 0;
  bool smooth = true;
};

FdProbe fd_probe(const std::function<double()>& f, double& xi, double h = 1e-4) {
  auto central = [&](double step) {
    double orig = xi;
    xi = orig + step;
    double fp = f();
    xi = orig - step;
    double fm = f();
    xi = orig;
    return (fp - fm) / (2 * step);
  };
  FdProbe out;
  out.fd = central(h);
  double finer = central(h / 10);
  double denom = std::max({std::abs(out.fd), std::abs(finer), 1e-6});
  out.smooth = std::abs(out.fd - finer) / denom < 1e-4;
  return out;
}

}  // namespace

TEST_CASE("detector config validation") {
  DetectorConfig cfg = small_detector();
  CHECK_NOTHROW(cfg.validate());
  cfg.num_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = small_detector();
  cfg.height = 20;  // not divisible by 8
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = small_detector();
  cfg.clip_len = 6;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = small_detector();
  cfg.in_channels = 2;
  CHECK_THROWS_AS(cfg.validate(), config_error);
}

TEST_CASE("detector forward shapes, range, determinism") {
  DetectorConfig cfg = small_detector();
  Detector<double> net(cfg);
  Rng rng(1);
  Tensor<double> x({1, 4, 16, 16});
  for (auto& v : x.v) v = rng.uniform(0, 1);

  ModelOutput<double> a = net.forward(x, false);
  CHECK(a.class_logits.size() == 3);
  CHECK(a.loc_map.shape == std::vector<int>{4, 16, 16});
  for (double v : a.loc_map.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (double v : a.class_logits) CHECK(std::isfinite(v));

  ModelOutput<double> b = net.forward(x, false);
  CHECK(max_abs_diff(a.loc_map, b.loc_map) == 0.0);
  CHECK(a.class_logits == b.class_logits);

  // identical config and seed give an identical network
  Detector<double> net2(cfg);
  ModelOutput<double> c = net2.forward(x, false);
  CHECK(max_abs_diff(a.loc_map, c.loc_map) == 0.0);

  Tensor<double> bad({1, 4, 16, 8});
  CHECK_THROWS(net.forward(bad, false));
}

TEST_CASE("detector backward matches central finite differences") {
  DetectorConfig cfg = small_detector();
  Detector<double> net(cfg);
  Rng rng(2);
  Tensor<double> x({1, 4, 16, 16});
  for (auto& v : x.v) v = rng.uniform(0, 1);
  std::vector<double> wl = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  Tensor<double> wm({4, 16, 16});
  for (auto& v : wm.v) v = rng.uniform(-1, 1);

  net.zero_grad();
  weighted_output(net, x, wl, wm, true);
  net.backward(wl, wm);

  auto params = net.params();
  int checked = 0;
  for (auto& p : params) {
    for (int probe = 0; probe < 4; ++probe) {
      std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, p.value->numel() - 1));
      FdProbe r = fd_probe([&] { return weighted_output(net, x, wl, wm, false); },
                           p.value->v[k]);
      if (!r.smooth) continue;
      check_rel(p.grad->v[k], r.fd);
      ++checked;
    }
  }
  CHECK(checked > 30);
}

TEST_CASE("eor parameter budget within 15 percent of 1.1M") {
  EoRNet<double> net(EoRConfig{});
  auto n = static_cast<double>(net.param_count());
  MESSAGE("eor params: ", net.param_count());
  CHECK(n > 1.1e6 * 0.85);
  CHECK(n < 1.1e6 * 1.15);
}

TEST_CASE("eor config validation") {
  EoRConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.depth = 3;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = EoRConfig{};
  cfg.channels = {8, 16, 32, 64};
  CHECK_THROWS_AS(EoRNet<double>{cfg}, config_error);
}

TEST_CASE("eor forward preserves shape and range, including padded sizes") {
  EoRConfig cfg;
  cfg.seed = 3;
  EoRNet<double> net(cfg);
  Rng rng(4);
  for (auto shape : {std::vector<int>{8, 16, 16}, std::vector<int>{4, 12, 20},
                     std::vector<int>{6, 10, 10}}) {
    Tensor<double> x(shape);
    for (auto& v : x.v) v = rng.uniform(0, 1);
    Tensor<double> y = net.forward(x, false);
    CHECK(y.shape == shape);
    for (double v : y.v) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  Tensor<double> bad({4, 16});
  CHECK_THROWS(net.forward(bad, false));
}

TEST_CASE("eor is class-agnostic: output depends only on the map") {
  EoRNet<double> net(EoRConfig{});
  Rng rng(5);
  Tensor<double> x({4, 16, 16});
  for (auto& v : x.v) v = rng.uniform(0, 1);
  // identical map fed under different "labels" is the same call twice
  Tensor<double> a = net.forward(x, false);
  Tensor<double> b = net.forward(x, false);
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("eor backward matches central finite differences") {
  EoRConfig cfg;
  cfg.seed = 6;
  EoRNet<double> net(cfg);
  Rng rng(7);
  // move every parameter (biases in particular) off zero: the zero-padded
  // input region otherwise puts pre-activations exactly on the leaky-relu kink
  for (auto& p : net.params())
    for (auto& v : p.value->v) v += rng.uniform(-0.05, 0.05);

  Tensor<double> x({4, 8, 8});
  for (auto& v : x.v) v = rng.uniform(0.1, 0.9);
  Tensor<double> w({4, 8, 8});
  for (auto& v : w.v) v = rng.uniform(-1, 1);

  auto f = [&](bool cache) {
    Tensor<double> y = net.forward(x, cache);
    double s = 0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += w.v[i] * y.v[i];
    return s;
  };

  net.zero_grad();
  f(true);
  net.backward(w);

  auto params = net.params();
  int checked = 0;
  for (auto& p : params) {
    for (int probe = 0; probe < 2; ++probe) {
      std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, p.value->numel() - 1));
      FdProbe r = fd_probe([&] { return f(false); }, p.value->v[k]);
      if (!r.smooth) continue;
      check_rel(p.grad->v[k], r.fd);
      ++checked;
    }
  }
  CHECK(checked > 12);
}

TEST_CASE("gradient stop: losses on the refinement output never reach base params") {
  DetectorConfig dcfg = small_detector();
  Detector<double> det(dcfg);
  EoRConfig ecfg;
  ecfg.seed = 8;
  EoRNet<double> eor(ecfg);

  Rng rng(9);
  Tensor<double> x({1, 4, 16, 16});
  for (auto& v : x.v) v = rng.uniform(0, 1);
  ModelOutput<double> out = det.forward(x, true);

  det.zero_grad();
  eor.zero_grad();

  // detached value copy of the localization map
  Tensor<double> detached = out.loc_map;
  Tensor<double> refined = eor.forward(detached, true);
  Tensor<double> target(refined.shape);
  for (auto& v : target.v) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
  Tensor<double> g(refined.shape);
  bce_mean_grad(refined, target, 1.0, g);
  eor.backward(g);  // returned input gradient intentionally unused

  for (auto& p : det.params())
    for (double gv : p.grad->v) CHECK(gv == 0.0);

  double eor_norm = 0;
  for (auto& p : eor.params())
    for (double gv : p.grad->v) eor_norm += gv * gv;
  CHECK(eor_norm > 0.0);
}

TEST_CASE("eor input gradient exists for the non-detached path") {
  EoRNet<double> net(EoRConfig{});
  Rng rng(10);
  Tensor<double> x({4, 8, 8});
  for (auto& v : x.v) v = rng.uniform(0.2, 0.8);
  Tensor<double> y = net.forward(x, true);
  Tensor<double> g(y.shape, 1.0);
  Tensor<double> gin = net.backward(g);
  CHECK(gin.shape == x.shape);
  double n = 0;
  for (double v : gin.v) n += v * v;
  CHECK(n > 0.0);
}
