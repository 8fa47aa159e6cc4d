#ifndef XTASNET_DSP_HPP
#define XTASNET_DSP_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "xtasnet/common.hpp"

namespace xtasnet {

// Mono audio signal. Amplitudes are nominally in [-1, 1].
struct Waveform {
  VectorX<float> samples;
  int sample_rate = 8000;

  Index length() const { return samples.size(); }
  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

inline void check_finite(const Waveform& w, const std::string& what) {
  if (w.samples.size() < 1) throw InvalidSignal(what + ": empty signal");
  if (!w.samples.allFinite())
    throw InvalidSignal(what + ": non-finite samples");
  if (w.sample_rate <= 0) throw InvalidSignal(what + ": bad sample rate");
}

struct FrameConfig {
  Index frame_len = 16;
  Index hop = 8;

  void validate() const {
    if (frame_len < 1 || hop < 1 || hop > frame_len)
      throw ContractError("FrameConfig: need 1 <= hop <= frame_len");
  }
};

// Signal tiled into K overlapping frames of frame_len samples; the last
// frame is zero padded. original_len makes the inverse exact.
template <class S>
struct SegmentMatrix {
  MatrixX<S> frames;  // K x L
  FrameConfig config;
  Index original_len = 0;

  Index frame_count() const { return frames.rows(); }
};

inline Index frame_count_for(Index len, const FrameConfig& cfg) {
  const Index over = std::max<Index>(len - cfg.frame_len, 0);
  return (over + cfg.hop - 1) / cfg.hop + 1;
}

template <class S>
SegmentMatrix<S> segment(const VectorX<S>& w, const FrameConfig& cfg) {
  cfg.validate();
  if (w.size() < 1) throw InvalidSignal("segment: empty signal");
  if (!w.allFinite()) throw InvalidSignal("segment: non-finite samples");

  const Index k = frame_count_for(w.size(), cfg);
  SegmentMatrix<S> out;
  out.config = cfg;
  out.original_len = w.size();
  out.frames.setZero(k, cfg.frame_len);
  for (Index f = 0; f < k; ++f) {
    const Index start = f * cfg.hop;
    const Index n = std::min(cfg.frame_len, w.size() - start);
    out.frames.row(f).head(n) = w.segment(start, n).transpose();
  }
  return out;
}

// Per-sample overlap counts for a framing; counts include zero-padded
// frame positions so that segment -> overlap_add is an exact identity.
template <class S>
VectorX<S> overlap_counts(Index frame_count, const FrameConfig& cfg,
                          Index out_len) {
  VectorX<S> counts = VectorX<S>::Zero(out_len);
  for (Index f = 0; f < frame_count; ++f) {
    const Index start = f * cfg.hop;
    const Index n = std::min(cfg.frame_len, out_len - start);
    if (n > 0) counts.segment(start, n).array() += S(1);
  }
  return counts;
}

// Exact left inverse of segment: sums contributing frame samples and
// divides by the per-sample overlap count, truncated to original_len.
template <class S>
VectorX<S> overlap_add(const SegmentMatrix<S>& m) {
  m.config.validate();
  if (m.frames.rows() < 1 || m.frames.cols() != m.config.frame_len)
    throw ShapeError("overlap_add: malformed segment matrix");
  if (m.original_len < 1 ||
      m.original_len > (m.frames.rows() - 1) * m.config.hop + m.config.frame_len)
    throw ShapeError("overlap_add: original_len inconsistent with frames");

  VectorX<S> out = VectorX<S>::Zero(m.original_len);
  for (Index f = 0; f < m.frames.rows(); ++f) {
    const Index start = f * m.config.hop;
    const Index n = std::min(m.config.frame_len, m.original_len - start);
    if (n > 0)
      out.segment(start, n) += m.frames.row(f).head(n).transpose();
  }
  const VectorX<S> counts =
      overlap_counts<S>(m.frames.rows(), m.config, m.original_len);
  out.array() /= counts.array();
  return out;
}

// 10*log10(sum of squares + eps); equals -120 dB for silent input.
template <class S>
double energy_db(const VectorX<S>& w) {
  if (!w.allFinite()) throw InvalidSignal("energy_db: non-finite samples");
  const double e = w.template cast<double>().squaredNorm();
  return 10.0 * std::log10(e + kEnergyEps);
}

inline double energy_db(const Waveform& w) { return energy_db(w.samples); }

}  // namespace xtasnet

#endif  // XTASNET_DSP_HPP
