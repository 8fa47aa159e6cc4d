#ifndef XTASNET_NN_OPS_HPP
#define XTASNET_NN_OPS_HPP

#include <algorithm>
#include <utility>
#include <vector>

#include "xtasnet/dsp.hpp"
#include "xtasnet/ops.hpp"

// Convolutional and normalization primitives. Matrices are laid out
// time-major: row t is the frame/step at time t, columns are channels.
// Convolution weights are stored as (kernel * in_channels) x out_channels
// with tap-major rows, so conv reduces to an im2col gather and one GEMM.

namespace xtasnet::ad {

struct Conv1dGeometry {
  Index kernel = 1;
  Index stride = 1;
  Index dilation = 1;
  Index pad = 0;  // symmetric zero padding on the time axis

  void validate() const {
    if (kernel < 1 || stride < 1 || dilation < 1 || pad < 0)
      throw ContractError("Conv1dGeometry: bad hyperparameters");
  }

  Index out_len(Index in_len) const {
    const Index span = dilation * (kernel - 1) + 1;
    const Index padded = in_len + 2 * pad;
    if (padded < span) throw ShapeError("conv1d: input shorter than kernel");
    return (padded - span) / stride + 1;
  }
};

// Gathers dilated taps into rows: out(t, k*C + c) = x(t*stride + k*d - pad, c).
template <class S>
Var<S> im2col(const Var<S>& x, const Conv1dGeometry& geo) {
  geo.validate();
  Tape<S>& t = *x.tape();
  const Index T = x.rows(), C = x.cols();
  const Index To = geo.out_len(T);
  MatrixX<S> v = MatrixX<S>::Zero(To, geo.kernel * C);
  const MatrixX<S>& xv = x.value();
  for (Index k = 0; k < geo.kernel; ++k) {
    for (Index to = 0; to < To; ++to) {
      const Index src = to * geo.stride + k * geo.dilation - geo.pad;
      if (src >= 0 && src < T) v.block(to, k * C, 1, C) = xv.row(src);
    }
  }
  const int ix = x.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ix), [ix, oid, geo, T, C](Tape<S>& t) {
    const MatrixX<S>& g = t.grad(oid);
    auto& gx = t.grad_buffer(ix);
    for (Index k = 0; k < geo.kernel; ++k) {
      for (Index to = 0; to < g.rows(); ++to) {
        const Index src = to * geo.stride + k * geo.dilation - geo.pad;
        if (src >= 0 && src < T) gx.row(src) += g.block(to, k * C, 1, C);
      }
    }
  });
}

// Full 1-D convolution: weight (kernel * Cin) x Cout, optional bias 1 x Cout.
template <class S>
Var<S> conv1d(const Var<S>& x, const Var<S>& w, const Var<S>* bias,
              const Conv1dGeometry& geo) {
  if (w.rows() != geo.kernel * x.cols())
    throw ShapeError("conv1d: weight rows must equal kernel * in_channels");
  Var<S> y = matmul(im2col(x, geo), w);
  if (bias != nullptr) y = add_row_broadcast(y, *bias);
  return y;
}

// 1x1 convolution over channels; just a per-frame linear map.
template <class S>
Var<S> pointwise_conv1d(const Var<S>& x, const Var<S>& w, const Var<S>* bias) {
  if (w.rows() != x.cols())
    throw ShapeError("pointwise_conv1d: weight rows must equal channels");
  Var<S> y = matmul(x, w);
  if (bias != nullptr) y = add_row_broadcast(y, *bias);
  return y;
}

// Depthwise convolution, one kernel column per channel: weight kernel x C.
// Stride is fixed at 1; dilation and symmetric padding are supported.
template <class S>
Var<S> depthwise_conv1d(const Var<S>& x, const Var<S>& w, const Var<S>* bias,
                        Index dilation, Index pad) {
  Tape<S>& t = detail::same_tape(x, w);
  if (w.cols() != x.cols())
    throw ShapeError("depthwise_conv1d: weight cols must equal channels");
  Conv1dGeometry geo{w.rows(), 1, dilation, pad};
  geo.validate();
  const Index T = x.rows(), C = x.cols(), P = w.rows();
  const Index To = geo.out_len(T);

  MatrixX<S> v = MatrixX<S>::Zero(To, C);
  const MatrixX<S>& xv = x.value();
  const MatrixX<S>& wv = w.value();
  for (Index k = 0; k < P; ++k) {
    const Index off = k * dilation - pad;  // src = to + off
    const Index t0 = std::max<Index>(0, -off);
    const Index t1 = std::min<Index>(To, T - off);
    if (t1 > t0)
      v.middleRows(t0, t1 - t0).noalias() +=
          xv.middleRows(t0 + off, t1 - t0) * wv.row(k).asDiagonal();
  }
  const int ix = x.id(), iw = w.id(), oid = static_cast<int>(t.size());
  Var<S> y = t.make(
      std::move(v), t.needs_grad(ix) || t.needs_grad(iw),
      [ix, iw, oid, dilation, pad, T, To, P](Tape<S>& t) {
        const MatrixX<S>& g = t.grad(oid);
        const MatrixX<S>& xv = t.value(ix);
        const MatrixX<S>& wv = t.value(iw);
        for (Index k = 0; k < P; ++k) {
          const Index off = k * dilation - pad;
          const Index t0 = std::max<Index>(0, -off);
          const Index t1 = std::min<Index>(To, T - off);
          if (t1 <= t0) continue;
          const Index len = t1 - t0;
          if (t.needs_grad(ix))
            t.grad_buffer(ix).middleRows(t0 + off, len).noalias() +=
                g.middleRows(t0, len) * wv.row(k).asDiagonal();
          if (t.needs_grad(iw))
            t.grad_buffer(iw).row(k) += g.middleRows(t0, len)
                                            .cwiseProduct(xv.middleRows(t0 + off, len))
                                            .colwise()
                                            .sum();
        }
      });
  if (bias != nullptr) y = add_row_broadcast(y, *bias);
  return y;
}

// Transposed convolution: output length (T-1)*stride + kernel;
// out(t*stride + k) += x(t) * W_k with W_k = w rows [k*Cin, (k+1)*Cin).
template <class S>
Var<S> transposed_conv1d(const Var<S>& x, const Var<S>& w, const Var<S>* bias,
                         Index kernel, Index stride) {
  Tape<S>& t = detail::same_tape(x, w);
  if (kernel < 1 || stride < 1)
    throw ContractError("transposed_conv1d: bad hyperparameters");
  const Index T = x.rows(), Cin = x.cols();
  if (w.rows() != kernel * Cin)
    throw ShapeError("transposed_conv1d: weight rows must be kernel * Cin");
  const Index Cout = w.cols();
  const Index To = (T - 1) * stride + kernel;

  MatrixX<S> v = MatrixX<S>::Zero(To, Cout);
  for (Index k = 0; k < kernel; ++k) {
    const MatrixX<S> yk = x.value() * w.value().middleRows(k * Cin, Cin);
    v(Eigen::seqN(k, T, stride), Eigen::all) += yk;
  }
  const int ix = x.id(), iw = w.id(), oid = static_cast<int>(t.size());
  Var<S> y = t.make(
      std::move(v), t.needs_grad(ix) || t.needs_grad(iw),
      [ix, iw, oid, kernel, stride, T, Cin](Tape<S>& t) {
        const MatrixX<S>& g = t.grad(oid);
        for (Index k = 0; k < kernel; ++k) {
          const MatrixX<S> gk = g(Eigen::seqN(k, T, stride), Eigen::all);
          if (t.needs_grad(ix))
            t.grad_buffer(ix).noalias() +=
                gk * t.value(iw).middleRows(k * Cin, Cin).transpose();
          if (t.needs_grad(iw))
            t.grad_buffer(iw).middleRows(k * Cin, Cin).noalias() +=
                t.value(ix).transpose() * gk;
        }
      });
  if (bias != nullptr) y = add_row_broadcast(y, *bias);
  return y;
}

// Global layer norm: zero mean / unit variance over all entries (time and
// channels jointly), then a per-channel affine map.
template <class S>
Var<S> global_layer_norm(const Var<S>& x, const Var<S>& gamma,
                         const Var<S>& beta, S eps = S(kLayerNormEps)) {
  Tape<S>& t = detail::same_tape(x, gamma);
  detail::same_tape(x, beta);
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 ||
      beta.cols() != x.cols())
    throw ShapeError("global_layer_norm: affine params must be 1 x channels");

  const MatrixX<S>& xv = x.value();
  const S mu = xv.mean();
  const S var = (xv.array() - mu).square().mean();
  const S inv_std = S(1) / std::sqrt(var + eps);
  MatrixX<S> xhat = (xv.array() - mu) * inv_std;
  MatrixX<S> v =
      (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
      beta.value().row(0).array();

  const int ix = x.id(), ig = gamma.id(), ib = beta.id(),
            oid = static_cast<int>(t.size());
  const bool ng =
      t.needs_grad(ix) || t.needs_grad(ig) || t.needs_grad(ib);
  return t.make(
      std::move(v), ng,
      [ix, ig, ib, oid, inv_std, xhat = std::move(xhat)](Tape<S>& t) {
        const MatrixX<S>& g = t.grad(oid);
        if (t.needs_grad(ig))
          t.grad_buffer(ig) += g.cwiseProduct(xhat).colwise().sum();
        if (t.needs_grad(ib)) t.grad_buffer(ib) += g.colwise().sum();
        if (t.needs_grad(ix)) {
          MatrixX<S> dxhat =
              g.array().rowwise() * t.value(ig).row(0).array();
          const S m1 = dxhat.mean();
          const S m2 = dxhat.cwiseProduct(xhat).mean();
          t.grad_buffer(ix).array() +=
              inv_std * (dxhat.array() - m1 - xhat.array() * m2);
        }
      });
}

// Differentiable overlap-add with per-sample overlap-count normalization.
// Input is a K x L frame matrix; output is original_len x 1.
template <class S>
Var<S> overlap_add_frames(const Var<S>& frames, const FrameConfig& cfg,
                          Index original_len) {
  Tape<S>& t = *frames.tape();
  cfg.validate();
  SegmentMatrix<S> m{frames.value(), cfg, original_len};
  VectorX<S> out = overlap_add(m);
  const VectorX<S> counts =
      overlap_counts<S>(frames.rows(), cfg, original_len);
  const int ifr = frames.id(), oid = static_cast<int>(t.size());
  return t.make(
      MatrixX<S>(std::move(out)), t.needs_grad(ifr),
      [ifr, oid, cfg, original_len, counts = std::move(counts)](Tape<S>& t) {
        const MatrixX<S>& g = t.grad(oid);
        auto& gf = t.grad_buffer(ifr);
        for (Index f = 0; f < gf.rows(); ++f) {
          const Index start = f * cfg.hop;
          const Index n = std::min(cfg.frame_len, original_len - start);
          if (n > 0)
            gf.row(f).head(n) += (g.col(0).segment(start, n).array() /
                                  counts.segment(start, n).array())
                                     .matrix()
                                     .transpose();
        }
      });
}

}  // namespace xtasnet::ad

#endif  // XTASNET_NN_OPS_HPP
