#pragma once

#include <cmath>
#include <vector>

#include "smt/nn.hpp"

namespace smt {

// Adam over a fixed list of named parameters. Moment buffers are addressed by
// list position, so the parameter ordering must be stable across a run (it is:
// both networks enumerate layers in construction order).
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<nn::NamedParam<T>> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i] = Tensor<T>(params_[i].value->shape);
      v_[i] = Tensor<T>(params_[i].value->shape);
    }
  }

  // Overrides the learning rate for a contiguous parameter-index range
  // (per-module learning rates; moments are unaffected).
  void set_lr_range(std::size_t begin, std::size_t end, double lr) {
    if (begin > end || end > params_.size())
      throw std::invalid_argument("Adam::set_lr_range: bad index range");
    if (lrs_.empty()) lrs_.assign(params_.size(), lr_);
    for (std::size_t i = begin; i < end; ++i) lrs_[i] = lr;
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const double lr = lrs_.empty() ? lr_ : lrs_[i];
      Tensor<T>& p = *params_[i].value;
      Tensor<T>& g = *params_[i].grad;
      for (std::size_t k = 0; k < p.numel(); ++k) {
        double gk = static_cast<double>(g.v[k]);
        double mk = b1_ * static_cast<double>(m_[i].v[k]) + (1 - b1_) * gk;
        double vk = b2_ * static_cast<double>(v_[i].v[k]) + (1 - b2_) * gk * gk;
        m_[i].v[k] = static_cast<T>(mk);
        v_[i].v[k] = static_cast<T>(vk);
        p.v[k] -= static_cast<T>(lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps_));
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.grad->fill(T(0));
  }

  int64_t steps_taken() const { return t_; }
  void set_steps_taken(int64_t t) { t_ = t; }
  std::vector<Tensor<T>>& moment1() { return m_; }
  std::vector<Tensor<T>>& moment2() { return v_; }
  const std::vector<nn::NamedParam<T>>& params() const { return params_; }

 private:
  std::vector<nn::NamedParam<T>> params_;
  std::vector<double> lrs_;  // empty: lr_ for all
  std::vector<Tensor<T>> m_, v_;
  double lr_ = 1e-4, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
};

// Eq-style EMA: p_t <- beta * p_t + (1 - beta) * p_s, elementwise.
template <typename T>
void ema_update(std::vector<nn::NamedParam<T>>& teacher,
                std::vector<nn::NamedParam<T>>& student, double beta) {
  if (teacher.size() != student.size())
    throw std::invalid_argument("ema_update: parameter list size mismatch");
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("ema_update: beta not in [0,1]");
  const T b = static_cast<T>(beta);
  const T ob = static_cast<T>(1.0 - beta);
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    Tensor<T>& pt = *teacher[i].value;
    Tensor<T>& ps = *student[i].value;
    check_same_shape(pt, ps, "ema_update");
    for (std::size_t k = 0; k < pt.numel(); ++k) pt.v[k] = b * pt.v[k] + ob * ps.v[k];
  }
}

}  // namespace smt
