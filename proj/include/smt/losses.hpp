#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "smt/tensor.hpp"
#include "smt/types.hpp"

namespace smt {

// All reductions accumulate in double regardless of the storage scalar.

template <typename T>
double softmax_cross_entropy(const std::vector<T>& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw std::invalid_argument("cross_entropy: label out of range");
  double mx = -1e300;
  for (const T& x : logits) mx = std::max(mx, static_cast<double>(x));
  double z = 0.0;
  for (const T& x : logits) z += std::exp(static_cast<double>(x) - mx);
  return std::log(z) - (static_cast<double>(logits[label]) - mx);
}

// d CE / d logits = softmax(logits) - onehot(label), times `scale`.
template <typename T>
void softmax_cross_entropy_grad(const std::vector<T>& logits, int label, double scale,
                                std::vector<T>& grad) {
  auto p = ClassDistribution<T>::from_logits(logits);
  grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double g = static_cast<double>(p.probs[i]) - (static_cast<int>(i) == label ? 1.0 : 0.0);
    grad[i] = static_cast<T>(g * scale);
  }
}

inline constexpr double kBceEps = 1e-7;

// Mean per-pixel binary cross-entropy of a [0,1] prediction against a 0/1 target.
template <typename T>
double bce_mean(const Tensor<T>& pred, const Tensor<T>& target) {
  check_same_shape(pred, target, "bce_mean");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    double p = std::min(1.0 - kBceEps, std::max(kBceEps, static_cast<double>(pred.v[i])));
    double y = static_cast<double>(target.v[i]);
    s += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return s / static_cast<double>(pred.numel());
}

template <typename T>
void bce_mean_grad(const Tensor<T>& pred, const Tensor<T>& target, double scale,
                   Tensor<T>& grad) {
  const double n = static_cast<double>(pred.numel());
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    double p = std::min(1.0 - kBceEps, std::max(kBceEps, static_cast<double>(pred.v[i])));
    double y = static_cast<double>(target.v[i]);
    grad.v[i] += static_cast<T>(scale * ((p - y) / (p * (1.0 - p))) / n);
  }
}

// Jensen-Shannon divergence with natural log; bounded by ln 2. Zero-probability
// terms follow the 0*ln 0 = 0 convention.
template <typename T>
double jsd(const ClassDistribution<T>& p, const ClassDistribution<T>& q) {
  if (p.probs.size() != q.probs.size())
    throw std::invalid_argument("jsd: distribution size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    double pi = static_cast<double>(p.probs[i]);
    double qi = static_cast<double>(q.probs[i]);
    double mi = 0.5 * (pi + qi);
    if (pi > 0) s += 0.5 * pi * std::log(pi / mi);
    if (qi > 0) s += 0.5 * qi * std::log(qi / mi);
  }
  return std::max(0.0, s);
}

// d JSD(p, softmax(s)) / d s, p treated constant; adds scale * grad.
template <typename T>
void jsd_grad_wrt_logits(const ClassDistribution<T>& p, const std::vector<T>& s_logits,
                         double scale, std::vector<T>& grad) {
  auto q = ClassDistribution<T>::from_logits(s_logits);
  const std::size_t K = q.probs.size();
  // g_j = dJSD/dq_j = 0.5 ln(q_j / m_j)
  std::vector<double> g(K);
  double dot = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    double qj = std::max(1e-300, static_cast<double>(q.probs[j]));
    double mj = 0.5 * (static_cast<double>(p.probs[j]) + qj);
    g[j] = 0.5 * std::log(qj / mj);
    dot += g[j] * qj;
  }
  grad.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    grad[k] += static_cast<T>(scale * static_cast<double>(q.probs[k]) * (g[k] - dot));
}

// Mean squared error over all entries; the first argument is the (constant) target.
template <typename T>
double mse_mean(const Tensor<T>& target, const Tensor<T>& pred) {
  check_same_shape(target, pred, "mse_mean");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
    s += d * d;
  }
  return s / static_cast<double>(pred.numel());
}

template <typename T>
void mse_mean_grad(const Tensor<T>& target, const Tensor<T>& pred, double scale,
                   Tensor<T>& grad_pred) {
  const double n = static_cast<double>(pred.numel());
  for (std::size_t i = 0; i < pred.numel(); ++i)
    grad_pred.v[i] += static_cast<T>(
        scale * 2.0 * (static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i])) /
        n);
}

// Localization consistency MSE(t, s); teacher map is a constant target.
template <typename T>
double loc_consistency(const LocalizationMap<T>& t_map, const LocalizationMap<T>& s_map) {
  return mse_mean(t_map, s_map);
}

// Eq-style EoR consistency: MSE between the teacher-refined map and the raw
// student map.
template <typename T>
double eor_consistency(const LocalizationMap<T>& t_loc_eor, const LocalizationMap<T>& s_loc) {
  return mse_mean(t_loc_eor, s_loc);
}

// phi: out[f] = map[f+1] - map[f], shape {F-1,H,W}.
template <typename T>
Tensor<T> temporal_difference(const LocalizationMap<T>& map) {
  if (map.shape.size() != 3 || map.dim(0) < 2)
    throw std::invalid_argument("temporal_difference: need rank-3 map with F >= 2");
  const int F = map.dim(0), H = map.dim(1), W = map.dim(2);
  Tensor<T> out({F - 1, H, W});
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  for (int f = 0; f + 1 < F; ++f)
    for (std::size_t i = 0; i < hw; ++i)
      out.v[f * hw + i] = map.v[(f + 1) * hw + i] - map.v[f * hw + i];
  return out;
}

struct DopTerms {
  double dop_u = 0.0;
  double dop_eor = 0.0;
};

// DoP: MSE between temporal differences. Teacher-side arguments are constants.
template <typename T>
DopTerms dop_loss(const LocalizationMap<T>& t_loc, const LocalizationMap<T>& t_loc_eor,
                  const LocalizationMap<T>& s_loc) {
  Tensor<T> ps = temporal_difference(s_loc);
  DopTerms out;
  out.dop_u = mse_mean(temporal_difference(t_loc), ps);
  out.dop_eor = mse_mean(temporal_difference(t_loc_eor), ps);
  return out;
}

// Gradient of MSE(phi(t), phi(s)) w.r.t. s. Adjoint of phi is a -1/+1 stencil.
template <typename T>
void dop_grad_wrt_s(const LocalizationMap<T>& t_map, const LocalizationMap<T>& s_map,
                    double scale, Tensor<T>& grad_s) {
  Tensor<T> pt = temporal_difference(t_map);
  Tensor<T> ps = temporal_difference(s_map);
  const int F = s_map.dim(0), H = s_map.dim(1), W = s_map.dim(2);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const double n = static_cast<double>(pt.numel());
  for (int f = 0; f + 1 < F; ++f)
    for (std::size_t i = 0; i < hw; ++i) {
      double d = 2.0 * (static_cast<double>(ps.v[f * hw + i]) -
                        static_cast<double>(pt.v[f * hw + i])) /
                 n * scale;
      grad_s.v[(f + 1) * hw + i] += static_cast<T>(d);
      grad_s.v[f * hw + i] -= static_cast<T>(d);
    }
}

// Linear ramp of the unsupervised weight: lambda_max * min(1, epoch/ramp_epochs).
inline double lambda_schedule(double epoch, double lambda_max = 0.1,
                              double ramp_epochs = 15.0) {
  if (epoch < 0) throw std::invalid_argument("lambda_schedule: negative epoch");
  if (ramp_epochs <= 0) return lambda_max;
  return lambda_max * std::min(1.0, epoch / ramp_epochs);
}

struct LossBreakdown {
  double sup_cls = 0, sup_loc = 0, sup_eor = 0;
  double base_cls_cons = 0, base_loc_cons = 0, eor_cons = 0;
  double dop_u = 0, dop_eor = 0;
  double lambda_t = 0;
  double total = 0;

  static std::string csv_header() {
    return "sup_cls,sup_loc,sup_eor,base_cls_cons,base_loc_cons,eor_cons,dop_u,dop_eor,"
           "lambda_t,total";
  }

  std::string csv_row() const {
    auto f = [](double x) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.9g", x);
      return std::string(buf);
    };
    return f(sup_cls) + "," + f(sup_loc) + "," + f(sup_eor) + "," + f(base_cls_cons) + "," +
           f(base_loc_cons) + "," + f(eor_cons) + "," + f(dop_u) + "," + f(dop_eor) + "," +
           f(lambda_t) + "," + f(total);
  }
};

// total = sup + lambda * (unsupervised sum); errors name the offending component.
inline LossBreakdown total_loss(LossBreakdown b) {
  auto chk = [](double x, const char* name) {
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("total_loss: non-finite component ") + name);
  };
  chk(b.sup_cls, "sup_cls");
  chk(b.sup_loc, "sup_loc");
  chk(b.sup_eor, "sup_eor");
  chk(b.base_cls_cons, "base_cls_cons");
  chk(b.base_loc_cons, "base_loc_cons");
  chk(b.eor_cons, "eor_cons");
  chk(b.dop_u, "dop_u");
  chk(b.dop_eor, "dop_eor");
  b.total = b.sup_cls + b.sup_loc + b.sup_eor +
            b.lambda_t * (b.base_cls_cons + b.base_loc_cons + b.eor_cons + b.dop_u +
                          b.dop_eor);
  chk(b.total, "total");
  return b;
}

}  // namespace smt
