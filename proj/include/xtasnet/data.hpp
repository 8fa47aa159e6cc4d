#ifndef XTASNET_DATA_HPP
#define XTASNET_DATA_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xtasnet/dsp.hpp"

namespace xtasnet {

// Synthetic speaker identity: a harmonic source with a per-speaker
// fundamental, spectral envelope and amplitude-modulation rate.
struct SpeakerProfile {
  std::string id;
  double f0 = 120.0;  // Hz, within [80, 400]
  std::vector<double> harmonics;
  double am_rate = 4.0;  // Hz
  std::uint64_t seed = 0;

  void validate() const {
    if (f0 < 80.0 || f0 > 400.0)
      throw ContractError("SpeakerProfile: f0 outside [80, 400] Hz");
    if (harmonics.empty())
      throw ContractError("SpeakerProfile: empty harmonic envelope");
  }
};

// Deterministic inventory of n distinct speakers; fundamentals are spaced
// at least 20 Hz apart.
std::vector<SpeakerProfile> make_speaker_inventory(int n, std::uint64_t seed);

// Harmonic utterance with seeded phases, amplitude modulation and pauses;
// peak-normalized to 0.5. Deterministic in (profile, utterance_seed).
Waveform synth_utterance(const SpeakerProfile& profile, double duration_s,
                         int sample_rate, std::uint64_t utterance_seed);

// The unit of training: a mixture, a reference utterance of the target
// speaker, the target source and the summed distortion sources.
struct TrainTuple {
  Waveform mixture;
  Waveform reference;
  Waveform target;
  Waveform distortion;
  bool target_present = true;
  std::string speaker_id;
  int mixture_index = 0;
};

struct MixtureGroup {
  Waveform mixture;
  struct Entry {
    std::string speaker_id;
    Waveform reference;
    Waveform source;
    Waveform distortion;
  };
  std::vector<Entry> entries;
};

// Sums the utterances into a mixture and derives each speaker's
// distortion signal m_i = x - s_i.
MixtureGroup build_mixture(
    const std::vector<std::pair<std::string, Waveform>>& utterances,
    const std::vector<std::pair<std::string, Waveform>>& references);

// One training tuple per present speaker, all sharing the mixture.
std::vector<TrainTuple> expand_alternating(const MixtureGroup& group,
                                           int mixture_index = 0);

// Appends round(p * #mixtures) absent-speaker tuples: the reference comes
// from a pool speaker not present in the chosen mixture, the target is
// silence and the distortion is the mixture itself.
std::vector<TrainTuple> augment_spit(
    std::vector<TrainTuple> tuples,
    const std::vector<std::pair<std::string, Waveform>>& speaker_pool,
    double p, std::uint64_t seed);

// WAV + CSV manifest round trip. Columns: mixture_path, reference_path,
// target_path, distortion_path, target_present, speaker_id. Absent tuples
// have an empty target_path.
void write_manifest(const std::vector<TrainTuple>& tuples,
                    const std::string& dir);
std::vector<TrainTuple> read_manifest(const std::string& dir);

// Full synthetic dataset: mixtures of speakers_per_mixture distinct
// speakers, alternating expansion, then SPIT augmentation.
struct MixConfig {
  int n_speakers = 16;
  int n_mixtures = 20;
  int speakers_per_mixture = 2;
  double duration_s = 3.0;
  int sample_rate = 8000;
  double spit_p = 0.1;
  std::uint64_t seed = 1;
};

std::vector<TrainTuple> make_dataset(const MixConfig& cfg);

}  // namespace xtasnet

#endif  // XTASNET_DATA_HPP
