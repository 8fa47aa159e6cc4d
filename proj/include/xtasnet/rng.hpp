#ifndef XTASNET_RNG_HPP
#define XTASNET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace xtasnet {

// Deterministic random source. All draws are derived from mt19937 words
// with fixed arithmetic so that a seed pins every dataset, initialization
// and shuffle bit-for-bit across runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_()) * (1.0 / 4294967296.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint32_t uniform_int(std::uint32_t n) {
    // Rejection sampling keeps the distribution exact.
    const std::uint32_t limit = 4294967295u - 4294967295u % n;
    std::uint32_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(static_cast<std::uint32_t>(i))]);
    }
  }

  // Derives an independent stream, e.g. one per speaker or per utterance.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937 gen_;
};

}  // namespace xtasnet

#endif  // XTASNET_RNG_HPP
