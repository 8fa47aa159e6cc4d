#ifndef XTASNET_ADAM_HPP
#define XTASNET_ADAM_HPP

#include <cmath>
#include <vector>

#include "xtasnet/common.hpp"

namespace xtasnet {

template <class S>
struct AdamConfig {
  S lr = S(1e-3);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  S clip_norm = S(5.0);  // <= 0 disables clipping
};

template <class S>
struct AdamState {
  std::vector<MatrixX<S>> m;
  std::vector<MatrixX<S>> v;
  long step = 0;

  void init(const std::vector<MatrixX<S>*>& params) {
    m.clear();
    v.clear();
    for (const MatrixX<S>* p : params) {
      m.push_back(MatrixX<S>::Zero(p->rows(), p->cols()));
      v.push_back(MatrixX<S>::Zero(p->rows(), p->cols()));
    }
    step = 0;
  }
};

// Returns the scale factor that caps the concatenated gradient norm.
template <class S>
S global_clip_factor(const std::vector<MatrixX<S>>& grads, S clip_norm) {
  if (clip_norm <= S(0)) return S(1);
  double sq = 0.0;
  for (const auto& g : grads) sq += static_cast<double>(g.squaredNorm());
  const double norm = std::sqrt(sq);
  if (norm <= static_cast<double>(clip_norm)) return S(1);
  return static_cast<S>(static_cast<double>(clip_norm) / norm);
}

// Standard Adam with bias correction; gradients are globally norm-clipped
// before the moment updates.
template <class S>
void adam_step(const std::vector<MatrixX<S>*>& params,
               const std::vector<MatrixX<S>>& grads, AdamState<S>& state,
               const AdamConfig<S>& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  const S factor = global_clip_factor(grads, cfg.clip_norm);
  state.step += 1;
  const S bc1 = S(1) - static_cast<S>(std::pow(cfg.beta1, state.step));
  const S bc2 = S(1) - static_cast<S>(std::pow(cfg.beta2, state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() ||
        params[i]->cols() != grads[i].cols())
      throw ShapeError("adam_step: gradient shape mismatch");
    const auto g = grads[i].array() * factor;
    state.m[i].array() = cfg.beta1 * state.m[i].array() + (S(1) - cfg.beta1) * g;
    state.v[i].array() =
        cfg.beta2 * state.v[i].array() + (S(1) - cfg.beta2) * g.square();
    params[i]->array() -= cfg.lr * (state.m[i].array() / bc1) /
                          ((state.v[i].array() / bc2).sqrt() + cfg.eps);
  }
}

}  // namespace xtasnet

#endif  // XTASNET_ADAM_HPP
