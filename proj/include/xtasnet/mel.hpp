#ifndef XTASNET_MEL_HPP
#define XTASNET_MEL_HPP

#include <cmath>

#include "xtasnet/common.hpp"
#include "xtasnet/dsp.hpp"
#include "xtasnet/fft.hpp"

namespace xtasnet {

struct MelConfig {
  Index fft_size = 256;
  Index win_len = 200;  // 25 ms at 8 kHz
  Index win_hop = 80;   // 10 ms at 8 kHz
  Index n_mels = 40;
  double fmin = 0.0;
  double fmax = 4000.0;

  void validate(int sample_rate) const {
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
      throw ContractError("MelConfig: fft_size must be a power of two");
    if (win_len < 2 || win_len > fft_size)
      throw ContractError("MelConfig: need 2 <= win_len <= fft_size");
    if (win_hop < 1) throw ContractError("MelConfig: win_hop must be >= 1");
    if (n_mels < 1) throw ContractError("MelConfig: n_mels must be >= 1");
    if (!(fmin < fmax) || fmax > sample_rate / 2.0 + 1e-9)
      throw ContractError("MelConfig: need fmin < fmax <= sample_rate/2");
  }
};

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular filterbank, (fft_size/2 + 1) x n_mels. Triangles are placed
// uniformly on the mel scale and evaluated at the exact bin frequencies.
template <class S>
MatrixX<S> mel_filterbank(const MelConfig& cfg, int sample_rate) {
  const Index n_bins = cfg.fft_size / 2 + 1;
  const double mel_min = hz_to_mel(cfg.fmin);
  const double mel_max = hz_to_mel(cfg.fmax);

  VectorX<double> edges(cfg.n_mels + 2);
  for (Index i = 0; i < cfg.n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_min + (mel_max - mel_min) * i / (cfg.n_mels + 1));

  MatrixX<S> fb = MatrixX<S>::Zero(n_bins, cfg.n_mels);
  for (Index m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (Index k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.fft_size;
      double v = 0.0;
      if (f > left && f < center)
        v = (f - left) / (center - left);
      else if (f >= center && f < right)
        v = (right - f) / (right - center);
      fb(k, m) = static_cast<S>(v);
    }
  }
  return fb;
}

// Hann-windowed magnitude STFT followed by the mel filterbank and
// log(. + eps). Rows are analysis frames, columns mel bands.
template <class S>
MatrixX<S> log_mel(const VectorX<S>& w, const MelConfig& cfg,
                   int sample_rate) {
  cfg.validate(sample_rate);
  if (w.size() < cfg.win_len)
    throw InvalidSignal("log_mel: signal shorter than analysis window");
  if (!w.allFinite()) throw InvalidSignal("log_mel: non-finite samples");

  VectorX<S> window(cfg.win_len);
  for (Index n = 0; n < cfg.win_len; ++n)
    window[n] = static_cast<S>(
        0.5 * (1.0 - std::cos(2.0 * M_PI * n / (cfg.win_len - 1))));

  const MatrixX<S> fb = mel_filterbank<S>(cfg, sample_rate);
  const Index n_frames = (w.size() - cfg.win_len) / cfg.win_hop + 1;

  MatrixX<S> out(n_frames, cfg.n_mels);
  VectorX<S> frame(cfg.win_len);
  for (Index f = 0; f < n_frames; ++f) {
    frame = w.segment(f * cfg.win_hop, cfg.win_len).cwiseProduct(window);
    const VectorX<S> mag = magnitude_spectrum(frame, cfg.fft_size);
    out.row(f) =
        ((fb.transpose() * mag).array() + static_cast<S>(kEnergyEps))
            .log()
            .transpose();
  }
  return out;
}

}  // namespace xtasnet

#endif  // XTASNET_MEL_HPP
