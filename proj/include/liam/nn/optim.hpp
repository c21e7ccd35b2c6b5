#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "liam/nn/parameter_store.hpp"

namespace liam::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam step over every entry, then zeroes the gradients.
template <typename Scalar>
void adam_update(ParameterStore<Scalar>& store, double lr, const AdamOptions& opt = {}) {
  for (auto& entry : store) {
    if (!entry->grad.allFinite()) {
      throw NumericError("adam_update: non-finite gradient in parameter '" + entry->name + "'");
    }
  }
  for (auto& entry : store) {
    Parameter<Scalar>& p = *entry;
    p.step += 1;
    const auto b1 = static_cast<Scalar>(opt.beta1);
    const auto b2 = static_cast<Scalar>(opt.beta2);
    p.adam_m = b1 * p.adam_m + (Scalar(1) - b1) * p.grad;
    p.adam_v = b2 * p.adam_v + (Scalar(1) - b2) * p.grad.cwiseAbs2();
    if (lr != 0.0) {
      const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(p.step));
      const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(p.step));
      const auto step_size = static_cast<Scalar>(lr / c1);
      const auto v_scale = static_cast<Scalar>(1.0 / c2);
      const auto eps = static_cast<Scalar>(opt.eps);
      p.value.array() -= step_size * p.adam_m.array() / ((p.adam_v.array() * v_scale).sqrt() + eps);
    }
    p.zero_grad();
  }
}

/// Global L2 norm over the gradients of all given stores. When it exceeds
/// max_norm every gradient is rescaled by max_norm / norm. Returns the
/// pre-clip norm.
template <typename Scalar>
double clip_global_norm(const std::vector<ParameterStore<Scalar>*>& stores, double max_norm) {
  double sq = 0.0;
  for (const auto* store : stores) {
    for (const auto& entry : *store) sq += static_cast<double>(entry->grad.squaredNorm());
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const auto factor = static_cast<Scalar>(max_norm / norm);
    for (auto* store : stores) {
      for (auto& entry : *store) entry->grad *= factor;
    }
  }
  return norm;
}

template <typename Scalar>
double clip_global_norm(ParameterStore<Scalar>& store, double max_norm) {
  return clip_global_norm<Scalar>(std::vector<ParameterStore<Scalar>*>{&store}, max_norm);
}

}  // namespace liam::nn
