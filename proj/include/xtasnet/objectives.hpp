#ifndef XTASNET_OBJECTIVES_HPP
#define XTASNET_OBJECTIVES_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "xtasnet/dsp.hpp"
#include "xtasnet/ops.hpp"

namespace xtasnet {

// ---------------------------------------------------------------------------
// Evaluation metrics (64-bit, pure functions).
// ---------------------------------------------------------------------------

// Scale-invariant signal-to-noise ratio in dB. Both signals are zero-mean
// centered; the target projection s_t = (<est,s>/|s|^2) s defines the
// retained component. Clamped to +-60 dB.
inline double si_snr(const VectorX<double>& est, const VectorX<double>& target) {
  if (est.size() != target.size())
    throw ShapeError("si_snr: length mismatch");
  const VectorX<double> e = est.array() - est.mean();
  const VectorX<double> s = target.array() - target.mean();
  const double s_energy = s.squaredNorm();
  if (s_energy == 0.0)
    throw ContractError(
        "si_snr: target is identically zero; use the silent-target energy path");
  const double alpha = e.dot(s) / s_energy;
  const VectorX<double> s_t = alpha * s;
  const VectorX<double> err = e - s_t;
  const double ratio = s_t.squaredNorm() / (err.squaredNorm() + kSiSnrEps);
  const double db = 10.0 * std::log10(ratio + 1e-300);
  return std::clamp(db, -kSiSnrClampDb, kSiSnrClampDb);
}

// Plain (scale-variant) signal-to-error ratio on zero-mean signals,
// clamped to +-60 dB.
inline double sdr(const VectorX<double>& est, const VectorX<double>& target) {
  if (est.size() != target.size()) throw ShapeError("sdr: length mismatch");
  const VectorX<double> e = est.array() - est.mean();
  const VectorX<double> s = target.array() - target.mean();
  const double s_energy = s.squaredNorm();
  if (s_energy == 0.0)
    throw ContractError("sdr: target is identically zero");
  const double ratio = s_energy / ((s - e).squaredNorm() + kSiSnrEps);
  const double db = 10.0 * std::log10(ratio + 1e-300);
  return std::clamp(db, -kSiSnrClampDb, kSiSnrClampDb);
}

inline double si_snri(const VectorX<double>& mixture,
                      const VectorX<double>& est,
                      const VectorX<double>& target) {
  return si_snr(est, target) - si_snr(mixture, target);
}

inline double sdri(const VectorX<double>& mixture, const VectorX<double>& est,
                   const VectorX<double>& target) {
  return sdr(est, target) - sdr(mixture, target);
}

// Per-utterance evaluation result. si_snri/sdri are meaningful only when
// the target speaker is present; output_energy only drives the absence
// metrics.
struct EvalRecord {
  std::string utt_id;
  double si_snri = 0.0;
  double sdri = 0.0;
  double output_energy = 0.0;  // dB
  bool target_present = true;
};

// Negative SI-SNRi rate over present-target records.
inline double nsr(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw ContractError("nsr: no records");
  Index negative = 0;
  for (const auto& r : records) {
    if (!r.target_present)
      throw ContractError("nsr: expects present-target records only");
    if (r.si_snri < 0.0) ++negative;
  }
  return static_cast<double>(negative) / static_cast<double>(records.size());
}

// Negative energy rate over absent-target records; the silence decision
// boundary sits at 0 dB.
inline double ner(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw ContractError("ner: no records");
  Index silent = 0;
  for (const auto& r : records) {
    if (r.target_present)
      throw ContractError("ner: expects absent-target records only");
    if (r.output_energy < 0.0) ++silent;
  }
  return static_cast<double>(silent) / static_cast<double>(records.size());
}

// Mean SI-SNRi restricted to records with non-negative SI-SNRi, i.e. the
// outputs judged to be on the correct speaker.
inline double sisi_snri(const std::vector<EvalRecord>& records) {
  double sum = 0.0;
  Index n = 0;
  for (const auto& r : records) {
    if (r.target_present && r.si_snri >= 0.0) {
      sum += r.si_snri;
      ++n;
    }
  }
  if (n == 0)
    throw ContractError("sisi_snri: no records with non-negative SI-SNRi");
  return sum / static_cast<double>(n);
}

struct MetricsReport {
  std::optional<double> mean_si_snri;
  std::optional<double> mean_sdri;
  std::optional<double> nsr;
  std::optional<double> ner;
  std::optional<double> sisi_snri;
  Index count = 0;
};

inline MetricsReport make_report(const std::vector<EvalRecord>& records) {
  MetricsReport rep;
  rep.count = static_cast<Index>(records.size());
  std::vector<EvalRecord> present, absent;
  for (const auto& r : records)
    (r.target_present ? present : absent).push_back(r);
  if (!present.empty()) {
    double si = 0.0, sd = 0.0;
    for (const auto& r : present) {
      si += r.si_snri;
      sd += r.sdri;
    }
    rep.mean_si_snri = si / static_cast<double>(present.size());
    rep.mean_sdri = sd / static_cast<double>(present.size());
    rep.nsr = nsr(present);
    bool any_nonneg = false;
    for (const auto& r : present) any_nonneg = any_nonneg || r.si_snri >= 0.0;
    if (any_nonneg) rep.sisi_snri = sisi_snri(present);
  }
  if (!absent.empty()) rep.ner = ner(absent);
  return rep;
}

// ---------------------------------------------------------------------------
// Differentiable training losses.
// ---------------------------------------------------------------------------

template <class S>
ad::Var<S> si_snr_var(ad::Tape<S>& tape, const ad::Var<S>& est,
                      const VectorX<S>& target) {
  if (est.cols() != 1 || est.rows() != target.size())
    throw ShapeError("si_snr_var: estimate/target length mismatch");
  VectorX<S> s = target.array() - target.mean();
  const S s_energy = s.squaredNorm();
  if (s_energy == S(0))
    throw ContractError(
        "si_snr_var: target is identically zero; use silent_loss_var");

  ad::Var<S> mean_e = ad::vmean(est);
  ad::Var<S> e = ad::add_scalar_var(est, ad::neg(mean_e));
  ad::Var<S> s_const = tape.constant(MatrixX<S>(s));
  ad::Var<S> alpha =
      ad::scale(ad::vsum(ad::mul(e, s_const)), S(1) / s_energy);
  ad::Var<S> s_t = ad::mul_scalar_var(s_const, alpha);
  ad::Var<S> err = ad::sub(e, s_t);
  ad::Var<S> num = ad::vsum(ad::mul(s_t, s_t));
  ad::Var<S> den = ad::add_const(ad::vsum(ad::mul(err, err)), S(kSiSnrEps));
  ad::Var<S> db = ad::scale(ad::vlog(ad::div(num, den)),
                            S(10.0 / std::log(10.0)));
  return ad::clamp(db, S(-kSiSnrClampDb), S(kSiSnrClampDb));
}

template <class S>
ad::Var<S> extraction_loss_var(ad::Tape<S>& tape, const ad::Var<S>& est,
                               const VectorX<S>& target) {
  return ad::neg(si_snr_var(tape, est, target));
}

// Output energy in dB; minimizing it drives the estimate toward silence.
template <class S>
ad::Var<S> silent_loss_var(ad::Tape<S>& tape, const ad::Var<S>& est) {
  (void)tape;
  ad::Var<S> energy =
      ad::add_const(ad::vsum(ad::mul(est, est)), S(kEnergyEps));
  return ad::scale(ad::vlog(energy), S(10.0 / std::log(10.0)));
}

// Joint reconstruction loss over both heads. A single-speaker tuple has a
// silent distortion ground truth, in which case the distortion head is
// pushed toward silence instead of toward a zero-norm SI-SNR reference.
template <class S>
ad::Var<S> lod_loss_var(ad::Tape<S>& tape, const ad::Var<S>& target_est,
                        const VectorX<S>& target,
                        const ad::Var<S>& distortion_est,
                        const VectorX<S>& distortion) {
  const S d_energy =
      (distortion.array() - distortion.mean()).matrix().squaredNorm();
  if (d_energy == S(0))
    return ad::add(extraction_loss_var(tape, target_est, target),
                   silent_loss_var(tape, distortion_est));
  return ad::neg(ad::add(si_snr_var(tape, target_est, target),
                         si_snr_var(tape, distortion_est, distortion)));
}

struct LossMode {
  bool lod = true;
  bool spit = true;
};

// Per-batch counts of which loss terms fired; used by the training log.
struct LossTerms {
  long target = 0;
  long distortion = 0;
  long silent = 0;
};

// Dispatch per training tuple: present tuples use the reconstruction
// losses, absent tuples only constrain the target head toward silence.
template <class S>
ad::Var<S> training_loss_var(ad::Tape<S>& tape, const ad::Var<S>& target_est,
                             const ad::Var<S>& distortion_est,
                             const VectorX<S>& target,
                             const VectorX<S>& distortion, bool target_present,
                             const LossMode& mode, LossTerms* terms = nullptr) {
  if (!target_present) {
    if (terms != nullptr) terms->silent += 1;
    return silent_loss_var(tape, target_est);
  }
  if (mode.lod) {
    if (terms != nullptr) {
      terms->target += 1;
      terms->distortion += 1;
    }
    return lod_loss_var(tape, target_est, target, distortion_est, distortion);
  }
  if (terms != nullptr) terms->target += 1;
  return extraction_loss_var(tape, target_est, target);
}

}  // namespace xtasnet

#endif  // XTASNET_OBJECTIVES_HPP
