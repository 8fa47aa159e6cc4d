#ifndef XTASNET_LAYERS_HPP
#define XTASNET_LAYERS_HPP

#include <string>
#include <vector>

#include "xtasnet/nn_ops.hpp"
#include "xtasnet/rng.hpp"

namespace xtasnet {

enum class LayerKind {
  kConv1d,
  kTransposedConv1d,
  kDepthwiseConv1d,
  kPointwiseConv1d,
  kPrelu,
  kRelu,
  kSigmoid,
  kGlobalLayerNorm,
  kLinear,
};

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kTransposedConv1d: return "transposed_conv1d";
    case LayerKind::kDepthwiseConv1d: return "depthwise_conv1d";
    case LayerKind::kPointwiseConv1d: return "pointwise_conv1d";
    case LayerKind::kPrelu: return "prelu";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kGlobalLayerNorm: return "global_layer_norm";
    case LayerKind::kLinear: return "linear";
  }
  return "unknown";
}

inline const std::vector<LayerKind>& all_layer_kinds() {
  static const std::vector<LayerKind> kinds = {
      LayerKind::kConv1d,          LayerKind::kTransposedConv1d,
      LayerKind::kDepthwiseConv1d, LayerKind::kPointwiseConv1d,
      LayerKind::kPrelu,           LayerKind::kRelu,
      LayerKind::kSigmoid,         LayerKind::kGlobalLayerNorm,
      LayerKind::kLinear,
  };
  return kinds;
}

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  Index in_channels = 0;
  Index out_channels = 0;
  Index kernel = 1;
  Index stride = 1;
  Index dilation = 1;
  Index pad = 0;
  bool bias = true;

  static LayerSpec conv1d(Index in, Index out, Index kernel, Index stride = 1,
                          Index dilation = 1, Index pad = 0, bool bias = true) {
    return {LayerKind::kConv1d, in, out, kernel, stride, dilation, pad, bias};
  }
  static LayerSpec transposed_conv1d(Index in, Index out, Index kernel,
                                     Index stride, bool bias = true) {
    return {LayerKind::kTransposedConv1d, in, out, kernel, stride, 1, 0, bias};
  }
  static LayerSpec depthwise_conv1d(Index channels, Index kernel,
                                    Index dilation = 1, Index pad = 0,
                                    bool bias = true) {
    return {LayerKind::kDepthwiseConv1d, channels, channels, kernel,
            1,        dilation,          pad,      bias};
  }
  static LayerSpec pointwise_conv1d(Index in, Index out, bool bias = true) {
    return {LayerKind::kPointwiseConv1d, in, out, 1, 1, 1, 0, bias};
  }
  static LayerSpec prelu() { return {LayerKind::kPrelu}; }
  static LayerSpec relu() { return {LayerKind::kRelu}; }
  static LayerSpec sigmoid() { return {LayerKind::kSigmoid}; }
  static LayerSpec global_layer_norm(Index channels) {
    return {LayerKind::kGlobalLayerNorm, channels, channels};
  }
  static LayerSpec linear(Index in, Index out, bool bias = true) {
    return {LayerKind::kLinear, in, out, 1, 1, 1, 0, bias};
  }

  void validate() const {
    switch (kind) {
      case LayerKind::kConv1d:
      case LayerKind::kTransposedConv1d:
        if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 ||
            dilation < 1 || pad < 0)
          throw ContractError("LayerSpec: bad convolution hyperparameters");
        break;
      case LayerKind::kDepthwiseConv1d:
        if (in_channels < 1 || in_channels != out_channels || kernel < 1 ||
            dilation < 1 || pad < 0)
          throw ContractError("LayerSpec: bad depthwise hyperparameters");
        if (stride != 1)
          throw ContractError("LayerSpec: depthwise convolution is stride 1");
        break;
      case LayerKind::kPointwiseConv1d:
      case LayerKind::kLinear:
        if (in_channels < 1 || out_channels < 1)
          throw ContractError("LayerSpec: bad channel counts");
        break;
      case LayerKind::kGlobalLayerNorm:
        if (in_channels < 1)
          throw ContractError("LayerSpec: norm needs a channel count");
        break;
      case LayerKind::kPrelu:
      case LayerKind::kRelu:
      case LayerKind::kSigmoid:
        break;
    }
  }
};

// A layer bundles a spec with its parameter tensors. Forward passes bind
// the tensors onto a tape and chain the corresponding ops.
template <class S>
struct Layer {
  LayerSpec spec;
  std::vector<std::string> param_names;
  std::vector<MatrixX<S>> params;

  explicit Layer(const LayerSpec& sp) : spec(sp) {
    spec.validate();
    switch (spec.kind) {
      case LayerKind::kConv1d:
      case LayerKind::kTransposedConv1d:
        add_param("weight", spec.kernel * spec.in_channels, spec.out_channels);
        if (spec.bias) add_param("bias", 1, spec.out_channels);
        break;
      case LayerKind::kDepthwiseConv1d:
        add_param("weight", spec.kernel, spec.in_channels);
        if (spec.bias) add_param("bias", 1, spec.in_channels);
        break;
      case LayerKind::kPointwiseConv1d:
      case LayerKind::kLinear:
        add_param("weight", spec.in_channels, spec.out_channels);
        if (spec.bias) add_param("bias", 1, spec.out_channels);
        break;
      case LayerKind::kPrelu:
        add_param("slope", 1, 1);
        break;
      case LayerKind::kGlobalLayerNorm:
        add_param("gamma", 1, spec.in_channels);
        add_param("beta", 1, spec.in_channels);
        break;
      case LayerKind::kRelu:
      case LayerKind::kSigmoid:
        break;
    }
  }

  // Weights uniform in +-sqrt(1/fan_in), biases zero, PReLU slope 0.25,
  // norm gains one.
  void init(Rng& rng) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      MatrixX<S>& p = params[i];
      const std::string& name = param_names[i];
      if (name == "bias" || name == "beta") {
        p.setZero();
      } else if (name == "gamma") {
        p.setOnes();
      } else if (name == "slope") {
        p.setConstant(S(0.25));
      } else {
        const double bound = std::sqrt(1.0 / fan_in());
        for (Index r = 0; r < p.rows(); ++r)
          for (Index c = 0; c < p.cols(); ++c)
            p(r, c) = static_cast<S>(rng.uniform(-bound, bound));
      }
    }
  }

  double fan_in() const {
    switch (spec.kind) {
      case LayerKind::kConv1d:
      case LayerKind::kTransposedConv1d:
        return static_cast<double>(spec.kernel * spec.in_channels);
      case LayerKind::kDepthwiseConv1d:
        return static_cast<double>(spec.kernel);
      default:
        return static_cast<double>(std::max<Index>(spec.in_channels, 1));
    }
  }

  std::vector<ad::Var<S>> bind(ad::Tape<S>& tape, bool trainable) const {
    std::vector<ad::Var<S>> vars;
    vars.reserve(params.size());
    for (const auto& p : params)
      vars.push_back(trainable ? tape.leaf(p) : tape.constant(p));
    return vars;
  }

  ad::Var<S> apply(const std::vector<ad::Var<S>>& p,
                   const ad::Var<S>& x) const {
    const ad::Var<S>* bias =
        spec.bias && p.size() > 1 ? &p[1] : nullptr;
    switch (spec.kind) {
      case LayerKind::kConv1d:
        return ad::conv1d(x, p[0], bias,
                          {spec.kernel, spec.stride, spec.dilation, spec.pad});
      case LayerKind::kTransposedConv1d:
        return ad::transposed_conv1d(x, p[0], bias, spec.kernel, spec.stride);
      case LayerKind::kDepthwiseConv1d:
        return ad::depthwise_conv1d(x, p[0], bias, spec.dilation, spec.pad);
      case LayerKind::kPointwiseConv1d:
      case LayerKind::kLinear:
        return ad::pointwise_conv1d(x, p[0], bias);
      case LayerKind::kPrelu:
        return ad::prelu(x, p[0]);
      case LayerKind::kRelu:
        return ad::relu(x);
      case LayerKind::kSigmoid:
        return ad::sigmoid(x);
      case LayerKind::kGlobalLayerNorm:
        return ad::global_layer_norm(x, p[0], p[1]);
    }
    throw ContractError("Layer::apply: unknown kind");
  }

  // One-shot convenience: bind then apply.
  ad::Var<S> forward(ad::Tape<S>& tape, const ad::Var<S>& x,
                     bool trainable = false) const {
    return apply(bind(tape, trainable), x);
  }

 private:
  void add_param(const char* name, Index rows, Index cols) {
    param_names.emplace_back(name);
    params.push_back(MatrixX<S>::Zero(rows, cols));
  }
};

}  // namespace xtasnet

#endif  // XTASNET_LAYERS_HPP
