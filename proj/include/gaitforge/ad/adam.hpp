#pragma once

#include <cmath>
#include <map>
#include <string>

#include "gaitforge/ad/array.hpp"
#include "gaitforge/ad/tape.hpp"

namespace gf::ad {

template <typename T>
struct AdamSlot {
  Array<T> m;
  Array<T> v;
};

// Standard Adam with bias correction. Returns false (and leaves params and
// moments for this call untouched) when the gradient has a non-finite entry;
// the caller logs the event.
template <typename T>
bool adam_step(Array<T>& param, const Array<T>& grad, AdamSlot<T>& slot, long t,
               double step_size, double beta1, double beta2, double eps) {
  check(param.shape == grad.shape, "adam_step: param/grad shape mismatch");
  if (slot.m.shape.empty()) {
    slot.m = Array<T>::zeros(param.shape);
    slot.v = Array<T>::zeros(param.shape);
  }
  check(slot.m.shape == param.shape, "adam_step: moment shape mismatch");
  for (const T g : grad.data)
    if (!std::isfinite(static_cast<double>(g))) return false;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (long i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad.data[i]);
    const double m = beta1 * static_cast<double>(slot.m.data[i]) + (1.0 - beta1) * g;
    const double v = beta2 * static_cast<double>(slot.v.data[i]) + (1.0 - beta2) * g * g;
    slot.m.data[i] = static_cast<T>(m);
    slot.v.data[i] = static_cast<T>(v);
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    param.data[i] -= static_cast<T>(step_size * mhat / (std::sqrt(vhat) + eps));
  }
  return true;
}

// Per-tape optimizer: one Adam slot per named parameter, optional global
// gradient-norm clip, shared step counter.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(double step_size, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8, double max_grad_norm = 0.0)
      : step_size_(step_size), beta1_(beta1), beta2_(beta2), eps_(eps),
        max_grad_norm_(max_grad_norm) {}

  // Applies one update from named grads; skips the whole update if any
  // gradient is non-finite. Returns true when applied.
  bool step(Tape<T>& tape, std::map<std::string, Array<T>>& grads) {
    double sq = 0.0;
    for (auto& [name, g] : grads) {
      for (const T v : g.data) {
        const double d = static_cast<double>(v);
        if (!std::isfinite(d)) {
          ++skipped_;
          return false;
        }
        sq += d * d;
      }
    }
    if (max_grad_norm_ > 0.0) {
      const double norm = std::sqrt(sq);
      if (norm > max_grad_norm_) {
        const T s = static_cast<T>(max_grad_norm_ / norm);
        for (auto& [name, g] : grads)
          for (T& v : g.data) v *= s;
      }
    }
    ++t_;
    for (auto& [name, g] : grads)
      adam_step(tape.param_value(name), g, slots_[name], t_, step_size_, beta1_, beta2_, eps_);
    return true;
  }

  void set_step_size(double s) { step_size_ = s; }
  double step_size() const { return step_size_; }
  long steps() const { return t_; }
  long skipped() const { return skipped_; }
  void reset() {
    slots_.clear();
    t_ = 0;
  }

  std::map<std::string, AdamSlot<T>>& slots() { return slots_; }
  long& step_counter() { return t_; }

 private:
  double step_size_, beta1_, beta2_, eps_, max_grad_norm_;
  std::map<std::string, AdamSlot<T>> slots_;
  long t_ = 0;
  long skipped_ = 0;
};

}  // namespace gf::ad
