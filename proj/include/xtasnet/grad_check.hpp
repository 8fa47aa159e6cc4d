#ifndef XTASNET_GRAD_CHECK_HPP
#define XTASNET_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "xtasnet/layers.hpp"

namespace xtasnet {

// Builds a scalar loss from leaves bound to the given tensors.
using GradCheckBuild = std::function<ad::Var<double>(
    ad::Tape<double>&, const std::vector<ad::Var<double>>&)>;

// Compares reverse-mode gradients against central finite differences for
// every coordinate of every tensor. Returns the maximum relative error.
inline double grad_check_fn(std::vector<MatrixX<double>>& tensors,
                            const GradCheckBuild& build, double h = 1e-4) {
  const auto eval = [&]() {
    ad::Tape<double> tape;
    std::vector<ad::Var<double>> leaves;
    leaves.reserve(tensors.size());
    for (auto& m : tensors) leaves.push_back(tape.constant(m));
    return build(tape, leaves).scalar();
  };

  // One reverse sweep for the analytic gradients.
  std::vector<MatrixX<double>> analytic;
  {
    ad::Tape<double> tape;
    std::vector<ad::Var<double>> leaves;
    leaves.reserve(tensors.size());
    for (auto& m : tensors) leaves.push_back(tape.leaf(m));
    ad::Var<double> loss = build(tape, leaves);
    tape.backward(loss);
    for (const auto& leaf : leaves) {
      if (leaf.grad().size() == 0)
        analytic.push_back(
            MatrixX<double>::Zero(leaf.rows(), leaf.cols()));
      else
        analytic.push_back(leaf.grad());
    }
  }

  double max_rel = 0.0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    MatrixX<double>& m = tensors[i];
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        const double keep = m(r, c);
        m(r, c) = keep + h;
        const double up = eval();
        m(r, c) = keep - h;
        const double down = eval();
        m(r, c) = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[i](r, c);
        const double rel = std::abs(a - numeric) /
                           std::max({std::abs(a), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  return max_rel;
}

// Randomized check of one layer kind: random parameters and input, loss =
// sum of outputs weighted by a fixed random matrix. Inputs to the kinked
// activations are kept away from zero so the finite differences stay on
// one side of the kink.
inline double grad_check(const LayerSpec& spec, std::uint64_t seed = 7,
                         Index time_steps = 11) {
  spec.validate();
  Rng rng(seed);
  Layer<double> layer(spec);
  layer.init(rng);

  const Index in_ch = spec.in_channels > 0 ? spec.in_channels : 5;
  MatrixX<double> input(time_steps, in_ch);
  const bool kinked =
      spec.kind == LayerKind::kRelu || spec.kind == LayerKind::kPrelu;
  for (Index r = 0; r < input.rows(); ++r)
    for (Index c = 0; c < input.cols(); ++c) {
      double v = rng.uniform(-1.0, 1.0);
      if (kinked) v = (v < 0 ? -1.0 : 1.0) * (0.1 + std::abs(v));
      input(r, c) = v;
    }

  std::vector<MatrixX<double>> tensors;
  tensors.push_back(input);
  for (const auto& p : layer.params) tensors.push_back(p);

  // Fixed mixing weights make the scalar loss sensitive to every output.
  Layer<double> probe(spec);
  const GradCheckBuild build = [&](ad::Tape<double>& tape,
                                   const std::vector<ad::Var<double>>& leaves) {
    std::vector<ad::Var<double>> params(leaves.begin() + 1, leaves.end());
    ad::Var<double> out = probe.apply(params, leaves[0]);
    Rng wrng(seed + 1);
    MatrixX<double> w(out.rows(), out.cols());
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = wrng.uniform(-1.0, 1.0);
    return ad::vsum(ad::mul(out, tape.constant(std::move(w))));
  };
  return grad_check_fn(tensors, build);
}

}  // namespace xtasnet

#endif  // XTASNET_GRAD_CHECK_HPP
