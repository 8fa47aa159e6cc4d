#ifndef XTASNET_FFT_HPP
#define XTASNET_FFT_HPP

#include <cmath>
#include <complex>
#include <vector>

#include "xtasnet/common.hpp"

namespace xtasnet {

// In-place iterative radix-2 FFT. n must be a power of two.
template <class S>
void fft_radix2(std::vector<std::complex<S>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ContractError("fft_radix2: size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const S ang = S(-2) * static_cast<S>(M_PI) / static_cast<S>(len);
    const std::complex<S> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<S> w(1);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<S> u = a[i + k];
        const std::complex<S> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Magnitude spectrum of a real frame zero-padded to fft_size;
// returns fft_size/2 + 1 bins.
template <class S>
VectorX<S> magnitude_spectrum(const VectorX<S>& frame, Index fft_size) {
  std::vector<std::complex<S>> buf(static_cast<std::size_t>(fft_size));
  for (Index i = 0; i < fft_size; ++i)
    buf[static_cast<std::size_t>(i)] = i < frame.size() ? frame[i] : S(0);
  fft_radix2(buf);
  VectorX<S> mag(fft_size / 2 + 1);
  for (Index k = 0; k <= fft_size / 2; ++k)
    mag[k] = std::abs(buf[static_cast<std::size_t>(k)]);
  return mag;
}

}  // namespace xtasnet

#endif  // XTASNET_FFT_HPP
