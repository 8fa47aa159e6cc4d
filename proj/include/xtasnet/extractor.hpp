#ifndef XTASNET_EXTRACTOR_HPP
#define XTASNET_EXTRACTOR_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "xtasnet/layers.hpp"
#include "xtasnet/speaker_encoder.hpp"

namespace xtasnet {

struct ModelConfig {
  Index L = 16;   // frame length (samples); hop is L/2
  Index N = 128;  // latent dimension
  Index B = 64;   // bottleneck channels
  Index H = 128;  // TCN hidden channels
  Index P = 3;    // TCN kernel
  Index X = 4;    // blocks per repeat (dilations 1, 2, ..., 2^(X-1))
  Index R = 2;    // repeats
  Index D = 64;   // voiceprint dimension

  void validate() const {
    if (L < 2 || L % 2 != 0)
      throw ContractError("ModelConfig: L must be even and >= 2");
    if (N < 1 || B < 1 || H < 1 || X < 1 || R < 1 || D < 1)
      throw ContractError("ModelConfig: dimensions must be positive");
    if (P < 1 || P % 2 == 0)
      throw ContractError("ModelConfig: P must be odd");
  }

  FrameConfig frame_config() const { return {L, L / 2}; }
};

// One dilated depthwise-separable block with residual and skip outputs.
template <class S>
struct TcnBlock {
  Layer<S> pw_in;
  Layer<S> prelu1;
  Layer<S> norm1;
  Layer<S> dw;
  Layer<S> prelu2;
  Layer<S> norm2;
  Layer<S> pw_res;
  Layer<S> pw_skip;

  TcnBlock(const ModelConfig& cfg, Index dilation)
      : pw_in(LayerSpec::pointwise_conv1d(cfg.B, cfg.H)),
        prelu1(LayerSpec::prelu()),
        norm1(LayerSpec::global_layer_norm(cfg.H)),
        dw(LayerSpec::depthwise_conv1d(cfg.H, cfg.P, dilation,
                                       dilation * (cfg.P - 1) / 2)),
        prelu2(LayerSpec::prelu()),
        norm2(LayerSpec::global_layer_norm(cfg.H)),
        pw_res(LayerSpec::pointwise_conv1d(cfg.H, cfg.B)),
        pw_skip(LayerSpec::pointwise_conv1d(cfg.H, cfg.B)) {}

  std::vector<Layer<S>*> layers() {
    return {&pw_in, &prelu1, &norm1, &dw, &prelu2, &norm2, &pw_res, &pw_skip};
  }
};

// Time-domain masking network: learnable frame encoder, voiceprint
// conditioning, TCN mask estimation with a target and a distortion head,
// and a shared learnable decoder.
template <class S>
class Extractor {
 public:
  explicit Extractor(const ModelConfig& cfg)
      : cfg_(cfg),
        encoder_(LayerSpec::linear(cfg.L, cfg.N, /*bias=*/false)),
        bottleneck_(LayerSpec::pointwise_conv1d(cfg.N + cfg.D, cfg.B)),
        mask_prelu_(LayerSpec::prelu()),
        mask_out_(LayerSpec::pointwise_conv1d(cfg.B, 2 * cfg.N)),
        decoder_(LayerSpec::linear(cfg.N, cfg.L, /*bias=*/false)) {
    cfg_.validate();
    for (Index r = 0; r < cfg_.R; ++r)
      for (Index x = 0; x < cfg_.X; ++x)
        blocks_.emplace_back(cfg_, Index(1) << x);
  }

  const ModelConfig& config() const { return cfg_; }

  void init(Rng& rng) {
    encoder_.init(rng);
    bottleneck_.init(rng);
    for (auto& blk : blocks_)
      for (Layer<S>* l : blk.layers()) l->init(rng);
    mask_prelu_.init(rng);
    mask_out_.init(rng);
    decoder_.init(rng);
  }

  struct NamedTensor {
    std::string name;
    std::string kind;
    MatrixX<S>* tensor;
  };

  std::vector<NamedTensor> named_tensors() {
    std::vector<NamedTensor> out;
    auto push = [&out](const std::string& prefix, Layer<S>& layer) {
      for (std::size_t p = 0; p < layer.params.size(); ++p)
        out.push_back({prefix + "." + layer.param_names[p],
                       layer_kind_name(layer.spec.kind), &layer.params[p]});
    };
    push("encoder", encoder_);
    push("bottleneck", bottleneck_);
    static const char* kSub[] = {"pw_in",  "prelu1", "norm1",  "dw",
                                 "prelu2", "norm2",  "pw_res", "pw_skip"};
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      auto layers = blocks_[b].layers();
      for (std::size_t l = 0; l < layers.size(); ++l)
        push("tcn." + std::to_string(b) + "." + kSub[l], *layers[l]);
    }
    push("mask_prelu", mask_prelu_);
    push("mask_out", mask_out_);
    push("decoder", decoder_);
    return out;
  }

  std::vector<ad::Var<S>> bind(ad::Tape<S>& tape, bool trainable) {
    std::vector<ad::Var<S>> vars;
    for (auto& nt : named_tensors())
      vars.push_back(trainable ? tape.leaf(*nt.tensor)
                               : tape.constant(*nt.tensor));
    return vars;
  }

  // --- staged tape forward -------------------------------------------------

  struct Bound {
    // Slices of the bind() order, regrouped per stage.
    std::vector<ad::Var<S>> all;
  };

  ad::Var<S> encode_stage(const std::vector<ad::Var<S>>& bound,
                          const ad::Var<S>& frames) const {
    return ad::relu(encoder_.apply({bound[0]}, frames));
  }

  // Appends the voiceprint row to every latent row.
  static ad::Var<S> condition_stage(ad::Tape<S>& tape, const ad::Var<S>& latent,
                                    const VectorX<S>& voiceprint) {
    ad::Var<S> row = tape.constant(MatrixX<S>(voiceprint.transpose()));
    return ad::concat_cols(latent, ad::broadcast_row(row, latent.rows()));
  }

  struct MaskVars {
    ad::Var<S> target;
    ad::Var<S> distortion;
  };

  MaskVars mask_stage(const std::vector<ad::Var<S>>& bound,
                      const ad::Var<S>& conditioned) const {
    std::size_t cursor = 1;  // encoder holds slot 0
    auto take = [&bound, &cursor](const Layer<S>& layer) {
      std::vector<ad::Var<S>> p(bound.begin() + cursor,
                                bound.begin() + cursor + layer.params.size());
      cursor += layer.params.size();
      return p;
    };

    ad::Var<S> x = bottleneck_.apply(take(bottleneck_), conditioned);
    ad::Var<S> skip_sum;
    for (const auto& blk : blocks_) {
      ad::Var<S> h = blk.pw_in.apply(take(blk.pw_in), x);
      h = blk.prelu1.apply(take(blk.prelu1), h);
      h = blk.norm1.apply(take(blk.norm1), h);
      h = blk.dw.apply(take(blk.dw), h);
      h = blk.prelu2.apply(take(blk.prelu2), h);
      h = blk.norm2.apply(take(blk.norm2), h);
      ad::Var<S> res = blk.pw_res.apply(take(blk.pw_res), h);
      ad::Var<S> skip = blk.pw_skip.apply(take(blk.pw_skip), h);
      x = ad::add(x, res);
      skip_sum = skip_sum.valid() ? ad::add(skip_sum, skip) : skip;
    }
    ad::Var<S> y = mask_prelu_.apply(take(mask_prelu_), skip_sum);
    y = ad::sigmoid(mask_out_.apply(take(mask_out_), y));
    return {ad::slice_cols(y, 0, cfg_.N), ad::slice_cols(y, cfg_.N, cfg_.N)};
  }

  ad::Var<S> decode_stage(const std::vector<ad::Var<S>>& bound,
                          const ad::Var<S>& masked_latent,
                          Index original_len) const {
    const std::size_t last = bound.size() - 1;
    ad::Var<S> frames = decoder_.apply({bound[last]}, masked_latent);
    return ad::overlap_add_frames(frames, cfg_.frame_config(), original_len);
  }

  struct Outputs {
    ad::Var<S> target;           // original_len x 1
    ad::Var<S> distortion;       // original_len x 1
    ad::Var<S> target_mask;      // K x N
    ad::Var<S> distortion_mask;  // K x N
  };

  Outputs forward(ad::Tape<S>& tape, const std::vector<ad::Var<S>>& bound,
                  const VectorX<S>& mixture,
                  const VectorX<S>& voiceprint) const {
    if (mixture.size() < cfg_.L)
      throw InvalidSignal("extractor: mixture shorter than one frame");
    if (voiceprint.size() != cfg_.D)
      throw ShapeError("extractor: voiceprint dimension mismatch");
    SegmentMatrix<S> seg = segment(mixture, cfg_.frame_config());
    ad::Var<S> frames = tape.constant(std::move(seg.frames));
    ad::Var<S> latent = encode_stage(bound, frames);
    ad::Var<S> conditioned = condition_stage(tape, latent, voiceprint);
    MaskVars masks = mask_stage(bound, conditioned);
    ad::Var<S> target =
        decode_stage(bound, ad::mul(masks.target, latent), seg.original_len);
    ad::Var<S> distortion = decode_stage(
        bound, ad::mul(masks.distortion, latent), seg.original_len);
    return {target, distortion, masks.target, masks.distortion};
  }

 private:
  ModelConfig cfg_;
  Layer<S> encoder_;
  Layer<S> bottleneck_;
  std::vector<TcnBlock<S>> blocks_;
  Layer<S> mask_prelu_;
  Layer<S> mask_out_;
  Layer<S> decoder_;
};

// ---------------------------------------------------------------------------
// Inference-path operations.
// ---------------------------------------------------------------------------

// Latent representation of a mixture, one row per frame.
template <class S>
MatrixX<S> encode(Extractor<S>& model, const VectorX<S>& mixture) {
  if (mixture.size() < model.config().L)
    throw InvalidSignal("encode: input shorter than one frame");
  if (!mixture.allFinite()) throw InvalidSignal("encode: non-finite input");
  ad::Tape<S> tape;
  auto bound = model.bind(tape, false);
  SegmentMatrix<S> seg = segment(mixture, model.config().frame_config());
  return model.encode_stage(bound, tape.constant(std::move(seg.frames)))
      .value();
}

// Appends the same voiceprint row to every latent row.
template <class S>
MatrixX<S> condition(const MatrixX<S>& latent, const VectorX<S>& voiceprint) {
  MatrixX<S> out(latent.rows(), latent.cols() + voiceprint.size());
  out.leftCols(latent.cols()) = latent;
  out.rightCols(voiceprint.size()).rowwise() = voiceprint.transpose();
  return out;
}

template <class S>
struct MaskPair {
  MatrixX<S> target_mask;
  MatrixX<S> distortion_mask;
};

template <class S>
MaskPair<S> estimate_masks(Extractor<S>& model, const MatrixX<S>& conditioned) {
  if (conditioned.cols() != model.config().N + model.config().D)
    throw ShapeError("estimate_masks: conditioned width must be N + D");
  ad::Tape<S> tape;
  auto bound = model.bind(tape, false);
  auto masks = model.mask_stage(bound, tape.constant(conditioned));
  return {masks.target.value(), masks.distortion.value()};
}

template <class S>
VectorX<S> decode(Extractor<S>& model, const MatrixX<S>& masked_latent,
                  Index original_len) {
  if (masked_latent.cols() != model.config().N)
    throw ShapeError("decode: latent width must be N");
  ad::Tape<S> tape;
  auto bound = model.bind(tape, false);
  return model
      .decode_stage(bound, tape.constant(masked_latent), original_len)
      .value()
      .col(0);
}

// Runs the full pipeline and returns the target and distortion estimates,
// both exactly as long as the mixture.
inline std::pair<Waveform, Waveform> extract(Extractor<float>& model,
                                             const Waveform& mixture,
                                             const Voiceprint& voiceprint) {
  check_finite(mixture, "extract");
  if (std::abs(static_cast<double>(voiceprint.norm()) - 1.0) > 1e-3)
    throw ContractError("extract: voiceprint must be unit norm");
  ad::Tape<float> tape;
  auto bound = model.bind(tape, false);
  auto out = model.forward(tape, bound, mixture.samples, voiceprint);
  Waveform target{out.target.value().col(0), mixture.sample_rate};
  Waveform distortion{out.distortion.value().col(0), mixture.sample_rate};
  return {std::move(target), std::move(distortion)};
}

}  // namespace xtasnet

#endif  // XTASNET_EXTRACTOR_HPP
