#ifndef XTASNET_SPEAKER_ENCODER_HPP
#define XTASNET_SPEAKER_ENCODER_HPP

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "xtasnet/layers.hpp"
#include "xtasnet/mel.hpp"
#include "xtasnet/objectives.hpp"

namespace xtasnet {

// Unit-norm speaker embedding.
using Voiceprint = VectorX<float>;

struct SpeakerEncoderConfig {
  int sample_rate = 8000;
  MelConfig mel;
  Index channels = 64;
  Index kernel = 5;
  Index n_layers = 3;
  Index embed_dim = 64;
  double min_seconds = 1.0;

  void validate() const {
    mel.validate(sample_rate);
    if (channels < 1 || kernel < 1 || kernel % 2 == 0 || n_layers < 1 ||
        embed_dim < 1)
      throw ContractError("SpeakerEncoderConfig: bad hyperparameters");
  }
};

// Log-mel frontend, a temporal convolution stack, mean pooling over
// frames and a linear projection onto the unit sphere.
template <class S>
class SpeakerEncoder {
 public:
  explicit SpeakerEncoder(const SpeakerEncoderConfig& cfg)
      : cfg_(cfg),
        proj_(LayerSpec::linear(cfg.channels, cfg.embed_dim)) {
    cfg_.validate();
    Index in = cfg_.mel.n_mels;
    for (Index l = 0; l < cfg_.n_layers; ++l) {
      layers_.emplace_back(LayerSpec::conv1d(in, cfg_.channels, cfg_.kernel, 1,
                                             1, (cfg_.kernel - 1) / 2));
      in = cfg_.channels;
    }
  }

  const SpeakerEncoderConfig& config() const { return cfg_; }

  void init(Rng& rng) {
    for (auto& l : layers_) l.init(rng);
    proj_.init(rng);
  }

  struct NamedTensor {
    std::string name;
    std::string kind;
    MatrixX<S>* tensor;
  };

  std::vector<NamedTensor> named_tensors() {
    std::vector<NamedTensor> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      for (std::size_t p = 0; p < layers_[l].params.size(); ++p)
        out.push_back({"conv." + std::to_string(l) + "." +
                           layers_[l].param_names[p],
                       layer_kind_name(layers_[l].spec.kind),
                       &layers_[l].params[p]});
    }
    for (std::size_t p = 0; p < proj_.params.size(); ++p)
      out.push_back({"proj." + proj_.param_names[p],
                     layer_kind_name(proj_.spec.kind), &proj_.params[p]});
    return out;
  }

  // Binds all parameters onto a tape in named_tensors() order.
  std::vector<ad::Var<S>> bind(ad::Tape<S>& tape, bool trainable) {
    std::vector<ad::Var<S>> vars;
    for (auto& nt : named_tensors())
      vars.push_back(trainable ? tape.leaf(*nt.tensor)
                               : tape.constant(*nt.tensor));
    return vars;
  }

  // Forward from a log-mel feature matrix (frames x n_mels) to a 1 x D
  // unit-norm embedding row.
  ad::Var<S> embed_features(ad::Tape<S>& tape,
                            const std::vector<ad::Var<S>>& bound,
                            const ad::Var<S>& features) const {
    (void)tape;
    std::size_t cursor = 0;
    ad::Var<S> x = features;
    for (const auto& layer : layers_) {
      const std::size_t n = layer.params.size();
      std::vector<ad::Var<S>> p(bound.begin() + cursor,
                                bound.begin() + cursor + n);
      cursor += n;
      x = ad::relu(layer.apply(p, x));
    }
    std::vector<ad::Var<S>> p(bound.begin() + cursor, bound.end());
    x = proj_.apply(p, ad::rows_mean(x));
    return ad::row_l2_normalize(x);
  }

  MatrixX<S> features_of(const VectorX<S>& samples) const {
    return log_mel(samples, cfg_.mel, cfg_.sample_rate);
  }

  // Inference-path embedding of a raw waveform.
  VectorX<S> embed_samples(const VectorX<S>& samples) {
    if (samples.size() <
        static_cast<Index>(cfg_.min_seconds * cfg_.sample_rate))
      throw InvalidSignal("embed: reference shorter than " +
                          std::to_string(cfg_.min_seconds) + " s");
    ad::Tape<S> tape;
    ad::Var<S> feat = tape.constant(features_of(samples));
    ad::Var<S> e = embed_features(tape, bind(tape, false), feat);
    return e.value().row(0).transpose();
  }

 private:
  SpeakerEncoderConfig cfg_;
  std::vector<Layer<S>> layers_;
  Layer<S> proj_;
};

inline Voiceprint embed(SpeakerEncoder<float>& model, const Waveform& w) {
  check_finite(w, "embed");
  if (w.sample_rate != model.config().sample_rate)
    throw InvalidSignal("embed: sample rate mismatch");
  return model.embed_samples(w.samples);
}

// ---------------------------------------------------------------------------
// GE2E objective.
// ---------------------------------------------------------------------------

// Scaled-cosine similarity parameters; the scale stays strictly positive.
template <class S>
struct Ge2eHead {
  MatrixX<S> w{MatrixX<S>::Constant(1, 1, S(10))};
  MatrixX<S> b{MatrixX<S>::Constant(1, 1, S(-5))};

  void clamp_scale() { w(0, 0) = std::max(w(0, 0), S(1e-6)); }
};

// Softmax contrastive loss over speaker centroids. embeddings holds
// n_spk * n_utt unit-norm rows grouped by speaker. The similarity against
// the own speaker's centroid excludes the utterance itself; similarities
// against other speakers use the full centroid.
template <class S>
ad::Var<S> ge2e_loss_var(ad::Tape<S>& tape, const ad::Var<S>& embeddings,
                         Index n_spk, Index n_utt, const ad::Var<S>& w,
                         const ad::Var<S>& b) {
  if (n_spk < 2) throw ContractError("ge2e_loss: need at least 2 speakers");
  if (n_utt < 2)
    throw ContractError("ge2e_loss: need at least 2 utterances per speaker");
  const Index rows = n_spk * n_utt;
  if (embeddings.rows() != rows)
    throw ShapeError("ge2e_loss: embedding row count mismatch");
  if (w.value()(0, 0) <= S(0))
    throw ContractError("ge2e_loss: similarity scale must be positive");

  // Fixed averaging maps: full centroids per speaker and leave-one-out
  // centroids per utterance.
  MatrixX<S> full = MatrixX<S>::Zero(n_spk, rows);
  for (Index k = 0; k < n_spk; ++k)
    full.row(k).segment(k * n_utt, n_utt).setConstant(S(1) / S(n_utt));
  MatrixX<S> excl = MatrixX<S>::Zero(rows, rows);
  std::vector<int> own(rows);
  MatrixX<S> other_mask = MatrixX<S>::Ones(rows, n_spk);
  for (Index j = 0; j < rows; ++j) {
    const Index k = j / n_utt;
    own[j] = static_cast<int>(k);
    other_mask(j, k) = S(0);
    for (Index u = 0; u < n_utt; ++u) {
      const Index o = k * n_utt + u;
      if (o != j) excl(j, o) = S(1) / S(n_utt - 1);
    }
  }

  ad::Var<S> cen_full = ad::matmul(tape.constant(std::move(full)), embeddings);
  ad::Var<S> cen_excl = ad::matmul(tape.constant(std::move(excl)), embeddings);

  // Embedding rows are unit norm, so cosine = dot / centroid norm.
  ad::Var<S> cos_full =
      ad::div_colwise_by_row(ad::matmul_nt(embeddings, cen_full),
                             ad::transpose(ad::row_norm(cen_full)));
  ad::Var<S> cos_own = ad::div(ad::row_dot(embeddings, cen_excl),
                               ad::row_norm(cen_excl));

  ad::Var<S> sim_full =
      ad::add_scalar_var(ad::mul_scalar_var(cos_full, w), b);
  ad::Var<S> sim_own = ad::add_scalar_var(ad::mul_scalar_var(cos_own, w), b);
  ad::Var<S> sim =
      ad::add(ad::mul(sim_full, tape.constant(std::move(other_mask))),
              ad::scatter_col_entries(sim_own, own, n_spk));
  return ad::softmax_xent_rows(sim, own);
}

// Convenience evaluation of the GE2E loss on fixed embeddings.
template <class S>
S ge2e_loss(const MatrixX<S>& embeddings, Index n_spk, Index n_utt, S w, S b) {
  ad::Tape<S> tape;
  ad::Var<S> e = tape.constant(embeddings);
  ad::Var<S> wv = tape.constant(MatrixX<S>::Constant(1, 1, w));
  ad::Var<S> bv = tape.constant(MatrixX<S>::Constant(1, 1, b));
  return ge2e_loss_var(tape, e, n_spk, n_utt, wv, bv).scalar();
}

// ---------------------------------------------------------------------------
// Verification quality gate.
// ---------------------------------------------------------------------------

// Equal error rate from similarity scores via a threshold sweep; returns
// the midpoint of FAR and FRR at their crossing.
inline double eer_from_scores(std::vector<std::pair<double, bool>> scored) {
  Index n_pos = 0, n_neg = 0;
  for (const auto& [score, same] : scored) (same ? n_pos : n_neg) += 1;
  if (n_pos < 10 || n_neg < 10)
    throw ContractError(
        "verification_eer: need at least 10 positive and 10 negative trials");
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Sweep the threshold across every score boundary. Below threshold is
  // rejected: FRR counts positives below, FAR counts negatives at/above.
  double best_gap = 2.0, best_eer = 0.5;
  Index pos_below = 0, neg_below = 0;
  for (std::size_t i = 0; i <= scored.size(); ++i) {
    const double far =
        static_cast<double>(n_neg - neg_below) / static_cast<double>(n_neg);
    const double frr =
        static_cast<double>(pos_below) / static_cast<double>(n_pos);
    const double gap = std::abs(far - frr);
    if (gap < best_gap) {
      best_gap = gap;
      best_eer = (far + frr) / 2.0;
    }
    if (i < scored.size()) (scored[i].second ? pos_below : neg_below) += 1;
  }
  return best_eer;
}

struct VerificationTrial {
  Waveform utt_a;
  Waveform utt_b;
  bool same_speaker = false;
};

inline double verification_eer(SpeakerEncoder<float>& model,
                               const std::vector<VerificationTrial>& trials) {
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(trials.size());
  for (const auto& t : trials) {
    const Voiceprint a = embed(model, t.utt_a);
    const Voiceprint b = embed(model, t.utt_b);
    scored.emplace_back(static_cast<double>(a.dot(b)), t.same_speaker);
  }
  return eer_from_scores(std::move(scored));
}

}  // namespace xtasnet

#endif  // XTASNET_SPEAKER_ENCODER_HPP
