#pragma once

#include <cassert>
#include <cmath>
#include <string>
#include <vector>

#include "smt/common.hpp"
#include "smt/tensor.hpp"

// Small volumetric-convolution substrate with hand-written backward passes.
// Feature maps are laid out {C,D,H,W}; weights {OC,IC,KD,KH,KW}. Everything is
// templated on the scalar so gradient checks can run in double while training
// runs in float.

namespace smt::nn {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

template <typename T>
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(int in_c, int out_c, int kd, int kh, int kw, int stride = 1)
      : in_c_(in_c), out_c_(out_c), kd_(kd), kh_(kh), kw_(kw), stride_(stride) {
    w = Tensor<T>({out_c, in_c, kd, kh, kw});
    b = Tensor<T>({out_c});
    gw = Tensor<T>(w.shape);
    gb = Tensor<T>(b.shape);
  }

  void init(Rng& rng) {
    double fan_in = static_cast<double>(in_c_) * kd_ * kh_ * kw_;
    double s = std::sqrt(2.0 / fan_in);
    for (auto& x : w.v) x = static_cast<T>(rng.normal() * s);
    b.fill(T(0));
  }

  std::size_t param_count() const { return w.numel() + b.numel(); }

  void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }

  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    assert(x.shape.size() == 4 && x.dim(0) == in_c_);
    if (cache) x_ = x;
    const int D = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int pd = kd_ / 2, ph = kh_ / 2, pw = kw_ / 2;
    const int Do = (D + stride_ - 1) / stride_;
    const int Ho = (H + stride_ - 1) / stride_;
    const int Wo = (W + stride_ - 1) / stride_;
    Tensor<T> y({out_c_, Do, Ho, Wo});
    const std::size_t ohw = static_cast<std::size_t>(Ho) * Wo;
    const std::size_t ihw = static_cast<std::size_t>(H) * W;
    for (int oc = 0; oc < out_c_; ++oc) {
      T* ybase = y.data() + static_cast<std::size_t>(oc) * Do * ohw;
      const T bias = b.v[oc];
      for (std::size_t i = 0; i < static_cast<std::size_t>(Do) * ohw; ++i) ybase[i] = bias;
      for (int ic = 0; ic < in_c_; ++ic) {
        const T* xbase = x.data() + static_cast<std::size_t>(ic) * D * ihw;
        const T* wbase =
            w.data() + ((static_cast<std::size_t>(oc) * in_c_ + ic) * kd_) * kh_ * kw_;
        for (int od = 0; od < Do; ++od) {
          const int id0 = od * stride_ - pd;
          for (int kd = 0; kd < kd_; ++kd) {
            const int id = id0 + kd;
            if (id < 0 || id >= D) continue;
            for (int oh = 0; oh < Ho; ++oh) {
              const int ih0 = oh * stride_ - ph;
              T* yrow = ybase + (static_cast<std::size_t>(od) * Ho + oh) * Wo;
              for (int kh = 0; kh < kh_; ++kh) {
                const int ih = ih0 + kh;
                if (ih < 0 || ih >= H) continue;
                const T* xrow = xbase + (static_cast<std::size_t>(id) * H + ih) * W;
                const T* wrow = wbase + (static_cast<std::size_t>(kd) * kh_ + kh) * kw_;
                for (int kw = 0; kw < kw_; ++kw) {
                  const T wv = wrow[kw];
                  const int off = kw - pw;
                  if (stride_ == 1) {
                    int lo = std::max(0, -off);
                    int hi = std::min(Wo, W - off);
                    const T* xr = xrow + off;
                    for (int ow = lo; ow < hi; ++ow) yrow[ow] += wv * xr[ow];
                  } else {
                    for (int ow = 0; ow < Wo; ++ow) {
                      const int iw = ow * stride_ + off;
                      if (iw >= 0 && iw < W) yrow[ow] += wv * xrow[iw];
                    }
                  }
                }
              }
            }
          }
        }
      }
    }
    return y;
  }

  // Accumulates gw/gb; returns gradient w.r.t. the cached input.
  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = x_;
    const int D = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Do = gy.dim(1), Ho = gy.dim(2), Wo = gy.dim(3);
    const int pd = kd_ / 2, ph = kh_ / 2, pw = kw_ / 2;
    Tensor<T> gx(x.shape);
    const std::size_t ohw = static_cast<std::size_t>(Ho) * Wo;
    const std::size_t ihw = static_cast<std::size_t>(H) * W;
    for (int oc = 0; oc < out_c_; ++oc) {
      const T* gybase = gy.data() + static_cast<std::size_t>(oc) * Do * ohw;
      double gbsum = 0.0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(Do) * ohw; ++i)
        gbsum += static_cast<double>(gybase[i]);
      gb.v[oc] += static_cast<T>(gbsum);
      for (int ic = 0; ic < in_c_; ++ic) {
        const T* xbase = x.data() + static_cast<std::size_t>(ic) * D * ihw;
        T* gxbase = gx.data() + static_cast<std::size_t>(ic) * D * ihw;
        const T* wbase =
            w.data() + ((static_cast<std::size_t>(oc) * in_c_ + ic) * kd_) * kh_ * kw_;
        T* gwbase =
            gw.data() + ((static_cast<std::size_t>(oc) * in_c_ + ic) * kd_) * kh_ * kw_;
        for (int od = 0; od < Do; ++od) {
          const int id0 = od * stride_ - pd;
          for (int kd = 0; kd < kd_; ++kd) {
            const int id = id0 + kd;
            if (id < 0 || id >= D) continue;
            for (int oh = 0; oh < Ho; ++oh) {
              const int ih0 = oh * stride_ - ph;
              const T* gyrow = gybase + (static_cast<std::size_t>(od) * Ho + oh) * Wo;
              for (int kh = 0; kh < kh_; ++kh) {
                const int ih = ih0 + kh;
                if (ih < 0 || ih >= H) continue;
                const T* xrow = xbase + (static_cast<std::size_t>(id) * H + ih) * W;
                T* gxrow = gxbase + (static_cast<std::size_t>(id) * H + ih) * W;
                const T* wrow = wbase + (static_cast<std::size_t>(kd) * kh_ + kh) * kw_;
                T* gwrow = gwbase + (static_cast<std::size_t>(kd) * kh_ + kh) * kw_;
                for (int kw = 0; kw < kw_; ++kw) {
                  const T wv = wrow[kw];
                  const int off = kw - pw;
                  double gwsum = 0.0;
                  if (stride_ == 1) {
                    int lo = std::max(0, -off);
                    int hi = std::min(Wo, W - off);
                    const T* xr = xrow + off;
                    T* gxr = gxrow + off;
                    for (int ow = lo; ow < hi; ++ow) {
                      gwsum += static_cast<double>(gyrow[ow]) * xr[ow];
                      gxr[ow] += wv * gyrow[ow];
                    }
                  } else {
                    for (int ow = 0; ow < Wo; ++ow) {
                      const int iw = ow * stride_ + off;
                      if (iw >= 0 && iw < W) {
                        gwsum += static_cast<double>(gyrow[ow]) * xrow[iw];
                        gxrow[iw] += wv * gyrow[ow];
                      }
                    }
                  }
                  gwrow[kw] += static_cast<T>(gwsum);
                }
              }
            }
          }
        }
      }
    }
    return gx;
  }

  Tensor<T> w, b, gw, gb;

 private:
  int in_c_ = 0, out_c_ = 0, kd_ = 0, kh_ = 0, kw_ = 0, stride_ = 1;
  Tensor<T> x_;
};

template <typename T>
class LeakyReLU {
 public:
  explicit LeakyReLU(T slope = T(0.1)) : slope_(slope) {}

  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i)
      y.v[i] = x.v[i] > T(0) ? x.v[i] : slope_ * x.v[i];
    if (cache) x_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.numel(); ++i)
      gx.v[i] = x_.v[i] > T(0) ? gy.v[i] : slope_ * gy.v[i];
    return gx;
  }

 private:
  T slope_;
  Tensor<T> x_;
};

template <typename T>
class Sigmoid {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i)
      y.v[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x.v[i]))));
    if (cache) y_ = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.numel(); ++i)
      gx.v[i] = gy.v[i] * y_.v[i] * (T(1) - y_.v[i]);
    return gx;
  }

 private:
  Tensor<T> y_;
};

// 2x2x2 average pooling, stride 2. Degenerate dims (size 1) are passed through.
template <typename T>
class AvgPool3d {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    const int C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Do = std::max(1, D / 2), Ho = std::max(1, H / 2), Wo = std::max(1, W / 2);
    const int sd = D >= 2 ? 2 : 1, sh = H >= 2 ? 2 : 1, sw = W >= 2 ? 2 : 1;
    if (cache) {
      in_shape_ = x.shape;
    }
    sd_ = sd; sh_ = sh; sw_ = sw;
    Tensor<T> y({C, Do, Ho, Wo});
    const T inv = T(1) / static_cast<T>(sd * sh * sw);
    for (int c = 0; c < C; ++c)
      for (int od = 0; od < Do; ++od)
        for (int oh = 0; oh < Ho; ++oh)
          for (int ow = 0; ow < Wo; ++ow) {
            double s = 0.0;
            for (int dd = 0; dd < sd; ++dd)
              for (int dh = 0; dh < sh; ++dh)
                for (int dw = 0; dw < sw; ++dw)
                  s += static_cast<double>(
                      x.v[((static_cast<std::size_t>(c) * D + od * sd + dd) * H +
                           oh * sh + dh) *
                              W +
                          ow * sw + dw]);
            y.v[((static_cast<std::size_t>(c) * Do + od) * Ho + oh) * Wo + ow] =
                static_cast<T>(s) * inv;
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int C = in_shape_[0], D = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
    const int Do = gy.dim(1), Ho = gy.dim(2), Wo = gy.dim(3);
    Tensor<T> gx(in_shape_);
    const T inv = T(1) / static_cast<T>(sd_ * sh_ * sw_);
    for (int c = 0; c < C; ++c)
      for (int od = 0; od < Do; ++od)
        for (int oh = 0; oh < Ho; ++oh)
          for (int ow = 0; ow < Wo; ++ow) {
            const T g =
                gy.v[((static_cast<std::size_t>(c) * Do + od) * Ho + oh) * Wo + ow] * inv;
            for (int dd = 0; dd < sd_; ++dd)
              for (int dh = 0; dh < sh_; ++dh)
                for (int dw = 0; dw < sw_; ++dw)
                  gx.v[((static_cast<std::size_t>(c) * D + od * sd_ + dd) * H + oh * sh_ +
                        dh) *
                           W +
                       ow * sw_ + dw] += g;
          }
    return gx;
  }

 private:
  std::vector<int> in_shape_;
  int sd_ = 2, sh_ = 2, sw_ = 2;
};

// Trilinear resize to an arbitrary target size (half-pixel centers). Backward
// scatters the interpolation weights.
template <typename T>
class Trilinear {
 public:
  Tensor<T> forward(const Tensor<T>& x, const std::vector<int>& out_dhw, bool cache) {
    if (cache) in_shape_ = x.shape;
    out_dhw_ = out_dhw;
    const int C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Do = out_dhw[0], Ho = out_dhw[1], Wo = out_dhw[2];
    Tensor<T> y({C, Do, Ho, Wo});
    auto axis = [](int n_in, int n_out, int o, int& i0, int& i1, double& w1) {
      double pos = (o + 0.5) * static_cast<double>(n_in) / n_out - 0.5;
      if (pos < 0) pos = 0;
      if (pos > n_in - 1) pos = n_in - 1;
      i0 = static_cast<int>(std::floor(pos));
      i1 = std::min(i0 + 1, n_in - 1);
      w1 = pos - i0;
    };
    for (int od = 0; od < Do; ++od) {
      int d0, d1; double wd;
      axis(D, Do, od, d0, d1, wd);
      for (int oh = 0; oh < Ho; ++oh) {
        int h0, h1; double wh;
        axis(H, Ho, oh, h0, h1, wh);
        for (int ow = 0; ow < Wo; ++ow) {
          int w0, w1i; double ww;
          axis(W, Wo, ow, w0, w1i, ww);
          for (int c = 0; c < C; ++c) {
            auto X = [&](int d, int h, int w) {
              return static_cast<double>(
                  x.v[((static_cast<std::size_t>(c) * D + d) * H + h) * W + w]);
            };
            double v = (1 - wd) * ((1 - wh) * ((1 - ww) * X(d0, h0, w0) + ww * X(d0, h0, w1i)) +
                                   wh * ((1 - ww) * X(d0, h1, w0) + ww * X(d0, h1, w1i))) +
                       wd * ((1 - wh) * ((1 - ww) * X(d1, h0, w0) + ww * X(d1, h0, w1i)) +
                             wh * ((1 - ww) * X(d1, h1, w0) + ww * X(d1, h1, w1i)));
            y.v[((static_cast<std::size_t>(c) * Do + od) * Ho + oh) * Wo + ow] =
                static_cast<T>(v);
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int C = in_shape_[0], D = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
    const int Do = out_dhw_[0], Ho = out_dhw_[1], Wo = out_dhw_[2];
    Tensor<T> gx(in_shape_);
    auto axis = [](int n_in, int n_out, int o, int& i0, int& i1, double& w1) {
      double pos = (o + 0.5) * static_cast<double>(n_in) / n_out - 0.5;
      if (pos < 0) pos = 0;
      if (pos > n_in - 1) pos = n_in - 1;
      i0 = static_cast<int>(std::floor(pos));
      i1 = std::min(i0 + 1, n_in - 1);
      w1 = pos - i0;
    };
    for (int od = 0; od < Do; ++od) {
      int d0, d1; double wd;
      axis(D, Do, od, d0, d1, wd);
      for (int oh = 0; oh < Ho; ++oh) {
        int h0, h1; double wh;
        axis(H, Ho, oh, h0, h1, wh);
        for (int ow = 0; ow < Wo; ++ow) {
          int w0, w1i; double ww;
          axis(W, Wo, ow, w0, w1i, ww);
          for (int c = 0; c < C; ++c) {
            const double g = static_cast<double>(
                gy.v[((static_cast<std::size_t>(c) * Do + od) * Ho + oh) * Wo + ow]);
            auto add = [&](int d, int h, int w, double wt) {
              gx.v[((static_cast<std::size_t>(c) * D + d) * H + h) * W + w] +=
                  static_cast<T>(g * wt);
            };
            add(d0, h0, w0, (1 - wd) * (1 - wh) * (1 - ww));
            add(d0, h0, w1i, (1 - wd) * (1 - wh) * ww);
            add(d0, h1, w0, (1 - wd) * wh * (1 - ww));
            add(d0, h1, w1i, (1 - wd) * wh * ww);
            add(d1, h0, w0, wd * (1 - wh) * (1 - ww));
            add(d1, h0, w1i, wd * (1 - wh) * ww);
            add(d1, h1, w0, wd * wh * (1 - ww));
            add(d1, h1, w1i, wd * wh * ww);
          }
        }
      }
    }
    return gx;
  }

 private:
  std::vector<int> in_shape_;
  std::vector<int> out_dhw_;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in_f, int out_f) : in_f_(in_f), out_f_(out_f) {
    w = Tensor<T>({out_f, in_f});
    b = Tensor<T>({out_f});
    gw = Tensor<T>(w.shape);
    gb = Tensor<T>(b.shape);
  }

  void init(Rng& rng) {
    double s = std::sqrt(2.0 / in_f_);
    for (auto& x : w.v) x = static_cast<T>(rng.normal() * s);
    b.fill(T(0));
  }

  std::size_t param_count() const { return w.numel() + b.numel(); }

  void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }

  std::vector<T> forward(const std::vector<T>& x, bool cache) {
    if (cache) x_ = x;
    std::vector<T> y(out_f_);
    for (int o = 0; o < out_f_; ++o) {
      double s = static_cast<double>(b.v[o]);
      const T* wr = w.data() + static_cast<std::size_t>(o) * in_f_;
      for (int i = 0; i < in_f_; ++i) s += static_cast<double>(wr[i]) * x[i];
      y[o] = static_cast<T>(s);
    }
    return y;
  }

  std::vector<T> backward(const std::vector<T>& gy) {
    std::vector<T> gx(in_f_, T(0));
    for (int o = 0; o < out_f_; ++o) {
      gb.v[o] += gy[o];
      const T* wr = w.data() + static_cast<std::size_t>(o) * in_f_;
      T* gwr = gw.data() + static_cast<std::size_t>(o) * in_f_;
      for (int i = 0; i < in_f_; ++i) {
        gwr[i] += gy[o] * x_[i];
        gx[i] += wr[i] * gy[o];
      }
    }
    return gx;
  }

  Tensor<T> w, b, gw, gb;

 private:
  int in_f_ = 0, out_f_ = 0;
  std::vector<T> x_;
};

// Mean over D,H,W per channel.
template <typename T>
class GlobalAvgPool {
 public:
  std::vector<T> forward(const Tensor<T>& x, bool cache) {
    if (cache) in_shape_ = x.shape;
    const int C = x.dim(0);
    const std::size_t n = x.numel() / C;
    std::vector<T> y(C);
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      const T* p = x.data() + static_cast<std::size_t>(c) * n;
      for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(p[i]);
      y[c] = static_cast<T>(s / static_cast<double>(n));
    }
    return y;
  }

  Tensor<T> backward(const std::vector<T>& gy) {
    Tensor<T> gx(in_shape_);
    const int C = in_shape_[0];
    const std::size_t n = gx.numel() / C;
    for (int c = 0; c < C; ++c) {
      const T g = gy[c] / static_cast<T>(n);
      T* p = gx.data() + static_cast<std::size_t>(c) * n;
      for (std::size_t i = 0; i < n; ++i) p[i] = g;
    }
    return gx;
  }

 private:
  std::vector<int> in_shape_;
};

// channel-axis concat of two {C,D,H,W} tensors
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  assert(a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3));
  Tensor<T> y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2), a.dim(3)});
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.numel());
  return y;
}

template <typename T>
void split_channels(const Tensor<T>& g, int c_a, Tensor<T>& ga, Tensor<T>& gb) {
  const int D = g.dim(1), H = g.dim(2), W = g.dim(3);
  ga = Tensor<T>({c_a, D, H, W});
  gb = Tensor<T>({g.dim(0) - c_a, D, H, W});
  std::copy(g.v.begin(), g.v.begin() + ga.numel(), ga.v.begin());
  std::copy(g.v.begin() + ga.numel(), g.v.end(), gb.v.begin());
}

}  // namespace smt::nn
