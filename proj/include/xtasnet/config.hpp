#ifndef XTASNET_CONFIG_HPP
#define XTASNET_CONFIG_HPP

#include <json.hpp>
#include <string>

#include "xtasnet/data.hpp"
#include "xtasnet/extractor.hpp"
#include "xtasnet/objectives.hpp"
#include "xtasnet/speaker_encoder.hpp"

// JSON bindings for every user-facing configuration struct. Parsing is
// lenient: absent fields keep their defaults, so config files may be
// partial.

namespace xtasnet {

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.L = j.value("L", c.L);
  c.N = j.value("N", c.N);
  c.B = j.value("B", c.B);
  c.H = j.value("H", c.H);
  c.P = j.value("P", c.P);
  c.X = j.value("X", c.X);
  c.R = j.value("R", c.R);
  c.D = j.value("D", c.D);
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"L", c.L}, {"N", c.N}, {"B", c.B}, {"H", c.H},
       {"P", c.P}, {"X", c.X}, {"R", c.R}, {"D", c.D}};
}

inline void from_json(const nlohmann::json& j, LossMode& m) {
  m.lod = j.value("lod", m.lod);
  m.spit = j.value("spit", m.spit);
}

inline void to_json(nlohmann::json& j, const LossMode& m) {
  j = {{"lod", m.lod}, {"spit", m.spit}};
}

inline void from_json(const nlohmann::json& j, MelConfig& c) {
  c.fft_size = j.value("fft_size", c.fft_size);
  c.win_len = j.value("win_len", c.win_len);
  c.win_hop = j.value("win_hop", c.win_hop);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.fmin = j.value("fmin", c.fmin);
  c.fmax = j.value("fmax", c.fmax);
}

inline void to_json(nlohmann::json& j, const MelConfig& c) {
  j = {{"fft_size", c.fft_size}, {"win_len", c.win_len},
       {"win_hop", c.win_hop},   {"n_mels", c.n_mels},
       {"fmin", c.fmin},         {"fmax", c.fmax}};
}

inline void from_json(const nlohmann::json& j, SpeakerEncoderConfig& c) {
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  if (j.contains("mel")) c.mel = j.at("mel").get<MelConfig>();
  c.channels = j.value("channels", c.channels);
  c.kernel = j.value("kernel", c.kernel);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.min_seconds = j.value("min_seconds", c.min_seconds);
}

inline void to_json(nlohmann::json& j, const SpeakerEncoderConfig& c) {
  j = {{"sample_rate", c.sample_rate}, {"mel", c.mel},
       {"channels", c.channels},       {"kernel", c.kernel},
       {"n_layers", c.n_layers},       {"embed_dim", c.embed_dim},
       {"min_seconds", c.min_seconds}};
}

inline void from_json(const nlohmann::json& j, MixConfig& c) {
  c.n_speakers = j.value("n_speakers", c.n_speakers);
  c.n_mixtures = j.value("n_mixtures", c.n_mixtures);
  c.speakers_per_mixture =
      j.value("speakers_per_mixture", c.speakers_per_mixture);
  c.duration_s = j.value("duration_s", c.duration_s);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.spit_p = j.value("spit_p", c.spit_p);
  c.seed = j.value("seed", c.seed);
}

inline void to_json(nlohmann::json& j, const MixConfig& c) {
  j = {{"n_speakers", c.n_speakers},
       {"n_mixtures", c.n_mixtures},
       {"speakers_per_mixture", c.speakers_per_mixture},
       {"duration_s", c.duration_s},
       {"sample_rate", c.sample_rate},
       {"spit_p", c.spit_p},
       {"seed", c.seed}};
}

}  // namespace xtasnet

#endif  // XTASNET_CONFIG_HPP
