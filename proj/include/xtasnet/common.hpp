#ifndef XTASNET_COMMON_HPP
#define XTASNET_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace xtasnet {

template <class S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Raised when audio input violates a signal contract (NaN/Inf, too short,
// bad framing).
struct InvalidSignal : std::runtime_error {
  explicit InvalidSignal(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised on tensor/matrix dimension mismatches.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an operation's preconditions are violated by the caller.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised on file system failures; message carries the offending path.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(const std::string& msg, long step)
      : std::runtime_error(msg + " at step " + std::to_string(step)),
        step(step) {}
  long step;
};

// Floor inside energy logarithms; 10*log10(eps) = -120 dB.
inline constexpr double kEnergyEps = 1e-12;
inline constexpr double kEnergyFloorDb = -120.0;

// Denominator regularizer and clamp for the SI-SNR family.
inline constexpr double kSiSnrEps = 1e-8;
inline constexpr double kSiSnrClampDb = 60.0;

inline constexpr double kLayerNormEps = 1e-5;

}  // namespace xtasnet

#endif  // XTASNET_COMMON_HPP
