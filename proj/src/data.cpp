#include "xtasnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "xtasnet/rng.hpp"
#include "xtasnet/wav_io.hpp"

namespace fs = std::filesystem;

namespace xtasnet {

std::vector<SpeakerProfile> make_speaker_inventory(int n, std::uint64_t seed) {
  if (n < 1 || n > 16)
    throw ContractError(
        "make_speaker_inventory: supports 1..16 speakers at 20 Hz spacing");
  std::vector<SpeakerProfile> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    Rng rng(Rng::derive(seed, 1000 + static_cast<std::uint64_t>(k)));
    SpeakerProfile p;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "spk%02d", k);
    p.id = buf;
    p.f0 = 84.0 + 21.0 * k;  // 84 .. 399 Hz, 21 Hz apart
    p.seed = Rng::derive(seed, 2000 + static_cast<std::uint64_t>(k));
    p.am_rate = rng.uniform(2.0, 8.0);
    p.harmonics.push_back(1.0);  // fundamental dominates
    const double rolloff = rng.uniform(0.45, 0.75);
    double w = 1.0;
    for (int h = 1; h < 8; ++h) {
      w *= rolloff;
      p.harmonics.push_back(w * rng.uniform(0.4, 1.0));
    }
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

Waveform synth_utterance(const SpeakerProfile& profile, double duration_s,
                         int sample_rate, std::uint64_t utterance_seed) {
  profile.validate();
  if (duration_s < 1.0)
    throw ContractError("synth_utterance: duration must be at least 1 s");
  Rng rng(Rng::derive(profile.seed, utterance_seed));

  const Index n = static_cast<Index>(std::llround(duration_s * sample_rate));
  VectorX<double> x = VectorX<double>::Zero(n);

  // Harmonic stack with seeded phases.
  for (std::size_t h = 0; h < profile.harmonics.size(); ++h) {
    const double freq = profile.f0 * static_cast<double>(h + 1);
    if (freq >= sample_rate / 2.0) break;
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double wgt = profile.harmonics[h];
    const double step = 2.0 * M_PI * freq / sample_rate;
    for (Index t = 0; t < n; ++t)
      x[t] += wgt * std::sin(step * static_cast<double>(t) + phase);
  }

  // Slow amplitude modulation.
  const double am_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double am_step = 2.0 * M_PI * profile.am_rate / sample_rate;
  for (Index t = 0; t < n; ++t)
    x[t] *= 0.65 + 0.35 * std::sin(am_step * static_cast<double>(t) + am_phase);

  // Speech-like pauses: ~250 ms chunks, occasionally attenuated, with
  // 10 ms raised-cosine ramps to keep the spectrum clean.
  const Index chunk = sample_rate / 4;
  const Index ramp = sample_rate / 100;
  for (Index start = 0; start < n; start += chunk) {
    const bool voiced = rng.uniform() < 0.85;
    if (voiced) continue;
    const Index stop = std::min(n, start + chunk);
    for (Index t = start; t < stop; ++t) {
      double g = 0.05;
      if (t - start < ramp)
        g = 1.0 - 0.95 * 0.5 *
                      (1.0 - std::cos(M_PI * static_cast<double>(t - start) /
                                      static_cast<double>(ramp)));
      else if (stop - 1 - t < ramp && stop == start + chunk)
        g = 1.0 - 0.95 * 0.5 *
                      (1.0 - std::cos(M_PI * static_cast<double>(stop - 1 - t) /
                                      static_cast<double>(ramp)));
      x[t] *= g;
    }
  }

  const double peak = x.cwiseAbs().maxCoeff();
  if (peak > 0.0) x *= 0.5 / peak;

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples = x.cast<float>();
  return w;
}

MixtureGroup build_mixture(
    const std::vector<std::pair<std::string, Waveform>>& utterances,
    const std::vector<std::pair<std::string, Waveform>>& references) {
  if (utterances.empty())
    throw ContractError("build_mixture: need at least one utterance");
  const Index len = utterances.front().second.length();
  std::set<std::string> seen;
  for (const auto& [id, w] : utterances) {
    check_finite(w, "build_mixture utterance " + id);
    if (w.length() != len)
      throw ContractError("build_mixture: utterance lengths differ");
    if (!seen.insert(id).second)
      throw ContractError("build_mixture: duplicate speaker id " + id);
  }

  MixtureGroup g;
  g.mixture.sample_rate = utterances.front().second.sample_rate;
  g.mixture.samples = VectorX<float>::Zero(len);
  for (const auto& [id, w] : utterances) g.mixture.samples += w.samples;

  for (const auto& [id, w] : utterances) {
    const auto ref = std::find_if(references.begin(), references.end(),
                                  [&](const auto& r) { return r.first == id; });
    if (ref == references.end())
      throw ContractError("build_mixture: no reference for speaker " + id);
    MixtureGroup::Entry e;
    e.speaker_id = id;
    e.reference = ref->second;
    e.source = w;
    e.distortion.sample_rate = g.mixture.sample_rate;
    e.distortion.samples = g.mixture.samples - w.samples;
    g.entries.push_back(std::move(e));
  }
  return g;
}

std::vector<TrainTuple> expand_alternating(const MixtureGroup& group,
                                           int mixture_index) {
  std::vector<TrainTuple> out;
  out.reserve(group.entries.size());
  for (const auto& e : group.entries) {
    TrainTuple t;
    t.mixture = group.mixture;
    t.reference = e.reference;
    t.target = e.source;
    t.distortion = e.distortion;
    t.target_present = true;
    t.speaker_id = e.speaker_id;
    t.mixture_index = mixture_index;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TrainTuple> augment_spit(
    std::vector<TrainTuple> tuples,
    const std::vector<std::pair<std::string, Waveform>>& speaker_pool,
    double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0)
    throw ContractError("augment_spit: p must lie in [0, 1]");
  if (p == 0.0) return tuples;
  if (speaker_pool.empty())
    throw ContractError("augment_spit: empty speaker pool with p > 0");

  // Group present speakers per mixture.
  std::map<int, std::set<std::string>> present;
  std::map<int, const Waveform*> mixture_of;
  for (const auto& t : tuples) {
    present[t.mixture_index].insert(t.speaker_id);
    mixture_of[t.mixture_index] = &t.mixture;
  }
  const long n_mixtures = static_cast<long>(present.size());
  const long n_absent = std::lround(p * static_cast<double>(n_mixtures));
  if (n_absent == 0) return tuples;

  std::vector<int> order;
  for (const auto& [idx, ids] : present) order.push_back(idx);
  Rng rng(Rng::derive(seed, 0xab5e17));
  rng.shuffle(order);

  long appended = 0;
  for (int idx : order) {
    if (appended == n_absent) break;
    std::vector<const std::pair<std::string, Waveform>*> candidates;
    for (const auto& entry : speaker_pool)
      if (present[idx].count(entry.first) == 0) candidates.push_back(&entry);
    if (candidates.empty()) continue;
    const auto* pick =
        candidates[rng.uniform_int(static_cast<std::uint32_t>(candidates.size()))];

    TrainTuple t;
    t.mixture = *mixture_of[idx];
    t.reference = pick->second;
    t.target.sample_rate = t.mixture.sample_rate;
    t.target.samples = VectorX<float>::Zero(t.mixture.length());
    t.distortion = t.mixture;
    t.target_present = false;
    t.speaker_id = pick->first;
    t.mixture_index = idx;
    tuples.push_back(std::move(t));
    ++appended;
  }
  if (appended < n_absent)
    throw ContractError(
        "augment_spit: no absent speaker available for enough mixtures");
  return tuples;
}

namespace {

std::uint64_t content_hash(const Waveform& w) {
  std::uint64_t h = 1469598103934665603ull;
  for (Index i = 0; i < w.length(); ++i) {
    std::uint32_t bits;
    const float v = w.samples[i];
    std::memcpy(&bits, &v, sizeof(bits));
    h = (h ^ bits) * 1099511628211ull;
  }
  return h;
}

// Writes each distinct waveform once; repeated content reuses the path.
class WavStore {
 public:
  explicit WavStore(const fs::path& root) : root_(root) {}

  std::string put(const std::string& stem, const Waveform& w) {
    const std::uint64_t key = content_hash(w);
    auto it = paths_.find(key);
    if (it != paths_.end()) return it->second;
    std::string rel = "wav/" + stem + ".wav";
    write_wav((root_ / rel).string(), w);
    paths_.emplace(key, rel);
    return rel;
  }

 private:
  fs::path root_;
  std::map<std::uint64_t, std::string> paths_;
};

}  // namespace

void write_manifest(const std::vector<TrainTuple>& tuples,
                    const std::string& dir) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "wav", ec);
  if (ec) throw IoError("cannot create manifest directory: " + dir);

  WavStore store(root);
  std::ostringstream csv;
  csv << "mixture_path,reference_path,target_path,distortion_path,"
         "target_present,speaker_id\n";
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const TrainTuple& t = tuples[i];
    char stem[64];
    std::snprintf(stem, sizeof(stem), "mix%04d", t.mixture_index);
    const std::string mix_path = store.put(stem, t.mixture);
    std::snprintf(stem, sizeof(stem), "ref_%s_%04zu", t.speaker_id.c_str(), i);
    const std::string ref_path = store.put(stem, t.reference);
    std::string tgt_path;
    if (t.target_present) {
      std::snprintf(stem, sizeof(stem), "tgt%04zu_%s", i, t.speaker_id.c_str());
      tgt_path = store.put(stem, t.target);
    }
    std::snprintf(stem, sizeof(stem), "dst%04zu_%s", i, t.speaker_id.c_str());
    const std::string dst_path = store.put(stem, t.distortion);
    csv << mix_path << ',' << ref_path << ',' << tgt_path << ',' << dst_path
        << ',' << (t.target_present ? 1 : 0) << ',' << t.speaker_id << '\n';
  }
  std::ofstream out(root / "manifest.csv", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest.csv under " + dir);
  out << csv.str();
}

std::vector<TrainTuple> read_manifest(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.csv");
  if (!in)
    throw IoError("cannot open manifest: " + (root / "manifest.csv").string());

  std::map<std::string, Waveform> cache;
  auto load = [&](const std::string& rel) -> const Waveform& {
    auto it = cache.find(rel);
    if (it == cache.end())
      it = cache.emplace(rel, read_wav((root / rel).string())).first;
    return it->second;
  };

  std::vector<TrainTuple> tuples;
  std::map<std::string, int> mixture_index;  // first-appearance order
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    while (cols.size() < 6) cols.emplace_back();
    TrainTuple t;
    t.mixture = load(cols[0]);
    t.reference = load(cols[1]);
    t.distortion = load(cols[3]);
    t.target_present = cols[4] == "1";
    if (t.target_present) {
      t.target = load(cols[2]);
    } else {
      t.target.sample_rate = t.mixture.sample_rate;
      t.target.samples = VectorX<float>::Zero(t.mixture.length());
    }
    t.speaker_id = cols[5];
    auto [it, fresh] = mixture_index.emplace(
        cols[0], static_cast<int>(mixture_index.size()));
    t.mixture_index = it->second;
    tuples.push_back(std::move(t));
  }
  return tuples;
}

std::vector<TrainTuple> make_dataset(const MixConfig& cfg) {
  if (cfg.speakers_per_mixture < 1 ||
      cfg.speakers_per_mixture > cfg.n_speakers)
    throw ContractError("make_dataset: bad speakers_per_mixture");
  const auto profiles = make_speaker_inventory(cfg.n_speakers, cfg.seed);

  // One dedicated reference utterance per speaker; never mixed.
  std::vector<std::pair<std::string, Waveform>> pool;
  for (std::size_t k = 0; k < profiles.size(); ++k)
    pool.emplace_back(profiles[k].id,
                      synth_utterance(profiles[k], cfg.duration_s,
                                      cfg.sample_rate, Rng::derive(cfg.seed, 1)));

  Rng rng(Rng::derive(cfg.seed, 0x310c));
  std::vector<TrainTuple> tuples;
  for (int m = 0; m < cfg.n_mixtures; ++m) {
    std::vector<int> idx(profiles.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    rng.shuffle(idx);
    std::vector<std::pair<std::string, Waveform>> utts, refs;
    for (int s = 0; s < cfg.speakers_per_mixture; ++s) {
      const SpeakerProfile& p = profiles[static_cast<std::size_t>(idx[s])];
      const std::uint64_t utt_seed =
          Rng::derive(cfg.seed, 0x5000 + 64ull * static_cast<std::uint64_t>(m) +
                                    static_cast<std::uint64_t>(s));
      utts.emplace_back(p.id, synth_utterance(p, cfg.duration_s,
                                              cfg.sample_rate, utt_seed));
      refs.emplace_back(p.id, pool[static_cast<std::size_t>(idx[s])].second);
    }
    auto expanded = expand_alternating(build_mixture(utts, refs), m);
    tuples.insert(tuples.end(), expanded.begin(), expanded.end());
  }
  return augment_spit(std::move(tuples), pool, cfg.spit_p,
                      Rng::derive(cfg.seed, 0x5917));
}

}  // namespace xtasnet
