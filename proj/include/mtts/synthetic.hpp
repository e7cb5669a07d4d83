// Copyright 2026  mtts authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MTTS_SYNTHETIC_HPP_
#define MTTS_SYNTHETIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mtts/corpus.hpp"
#include "mtts/errors.hpp"
#include "mtts/inventory.hpp"
#include "mtts/rng.hpp"

namespace mtts {

// Synthetic decodable corpus: each phoneme owns a constant spectral template
// held for a fixed number of frames; each speaker applies a per-channel
// affine transform plus a duration rate. The construction is invertible, so
// an exact transcriber exists and stands in for an external ASR when scoring
// intelligibility.

struct PhonemeTemplate {
  std::vector<double> values;  // length M
  std::size_t duration = 3;    // frames before speaker rate
};

struct VoiceTransform {
  std::vector<double> gain;  // per channel, all nonzero for invertibility
  std::vector<double> bias;  // per channel
  double rate = 1.0;         // duration multiplier, > 0
};

struct SyntheticSpeaker {
  std::size_t id = 0;
  std::string language_id;
  VoiceTransform voice;
};

struct SyntheticSpec {
  PhonemeInventory inventory;
  std::vector<LanguageDef> languages;
  std::map<std::size_t, PhonemeTemplate> templates;  // keyed by phoneme index
  std::vector<SyntheticSpeaker> speakers;
  std::size_t mel_channels = 16;
  double noise_amplitude = 0.0;    // epsilon, uniform per-element noise
  std::size_t silence_pad_max = 0; // optional leading/trailing silence jitter
  std::size_t min_run = 2;         // transcriber drops shorter runs
  std::uint64_t seed = 0;

  const SyntheticSpeaker& speaker(std::size_t id) const {
    for (const auto& s : speakers)
      if (s.id == id) return s;
    throw ValidationError("speaker " + std::to_string(id) +
                          " not defined in synthetic spec");
  }

  const LanguageDef& language(const std::string& id) const {
    for (const auto& l : languages)
      if (l.language_id == id) return l;
    throw ValidationError("language " + id + " not defined in synthetic spec");
  }

  std::size_t frames_for(std::size_t phoneme, const SyntheticSpeaker& spk) const {
    const auto& tpl = templates.at(phoneme);
    return static_cast<std::size_t>(
        std::llround(double(tpl.duration) * spk.voice.rate));
  }

  void validate() const {
    if (mel_channels < 1) throw ValidationError("mel_channels must be >= 1");
    for (const auto& l : languages) {
      l.validate(inventory);
      for (auto p : l.phoneme_subset)
        if (!templates.count(p))
          throw ValidationError("language " + l.language_id + ": phoneme " +
                                std::to_string(p) + " has no template");
    }
    for (const auto& [idx, tpl] : templates) {
      if (idx >= inventory.size())
        throw ValidationError("template for unknown phoneme index " +
                              std::to_string(idx));
      if (tpl.values.size() != mel_channels)
        throw ValidationError("template " + std::to_string(idx) + " has " +
                              std::to_string(tpl.values.size()) +
                              " channels, expected " +
                              std::to_string(mel_channels));
      if (tpl.duration < 2)
        throw ValidationError("template duration must be >= 2 frames");
    }
    for (const auto& s : speakers) {
      language(s.language_id);
      if (s.voice.gain.size() != mel_channels ||
          s.voice.bias.size() != mel_channels)
        throw ValidationError("speaker " + std::to_string(s.id) +
                              ": transform channel count mismatch");
      if (!(s.voice.rate > 0))
        throw ValidationError("speaker " + std::to_string(s.id) +
                              ": rate must be > 0");
      // decodability needs every emitted run to survive min_run pruning
      for (auto p : language(s.language_id).phoneme_subset)
        if (frames_for(p, s) < min_run)
          throw ValidationError(
              "speaker " + std::to_string(s.id) + ": phoneme " +
              std::to_string(p) + " emits fewer than min_run frames");
    }
    // templates must sit at least 4*epsilon apart in max-norm so the
    // transcriber stays exact under noise
    std::vector<std::size_t> keys;
    for (const auto& [idx, tpl] : templates) keys.push_back(idx);
    for (std::size_t a = 0; a < keys.size(); ++a)
      for (std::size_t b = a + 1; b < keys.size(); ++b) {
        double dinf = 0;
        const auto& ta = templates.at(keys[a]).values;
        const auto& tb = templates.at(keys[b]).values;
        for (std::size_t c = 0; c < mel_channels; ++c)
          dinf = std::max(dinf, std::abs(ta[c] - tb[c]));
        if (dinf < 4.0 * noise_amplitude)
          throw ValidationError(
              "templates " + std::to_string(keys[a]) + " and " +
              std::to_string(keys[b]) + " closer than 4*noise_amplitude");
      }
  }
};

// ---- generation ----

namespace detail {

// Random phoneme sequence without immediate repeats (a repeated phoneme
// would merge into one run and the transcriber could not recover it).
inline std::vector<std::size_t> random_sequence(const LanguageDef& lang,
                                                std::size_t len, Rng& rng) {
  std::vector<std::size_t> pool(lang.phoneme_subset.begin(),
                                lang.phoneme_subset.end());
  if (pool.empty())
    throw ValidationError("language " + lang.language_id + " has no phonemes");
  if (pool.size() < 2 && len > 1)
    throw ValidationError("language " + lang.language_id +
                          " needs >= 2 phonemes to draw sequences");
  std::vector<std::size_t> seq;
  seq.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    std::size_t p;
    do {
      p = pool[rng.uniform_index(pool.size())];
    } while (!seq.empty() && p == seq.back());
    seq.push_back(p);
  }
  return seq;
}

}  // namespace detail

// Renders one utterance for (sequence, speaker): the speaker-transformed
// template repeated round(d * rate) frames per phoneme, plus uniform noise
// of amplitude epsilon and optional silence padding.
inline Tensor<float> render_mel(const SyntheticSpec& spec,
                                const std::vector<std::size_t>& phonemes,
                                std::size_t speaker_id, Rng& rng) {
  const auto& spk = spec.speaker(speaker_id);
  const std::size_t m = spec.mel_channels;
  const std::size_t lead =
      spec.silence_pad_max ? rng.uniform_index(spec.silence_pad_max + 1) : 0;
  const std::size_t trail =
      spec.silence_pad_max ? rng.uniform_index(spec.silence_pad_max + 1) : 0;
  std::size_t total = lead + trail;
  for (auto p : phonemes) total += spec.frames_for(p, spk);
  Tensor<float> mel({std::max<std::size_t>(total, 1), m});
  std::size_t row = 0;
  auto emit = [&](const std::vector<double>* tpl, std::size_t frames) {
    for (std::size_t f = 0; f < frames; ++f, ++row)
      for (std::size_t c = 0; c < m; ++c) {
        double v = tpl ? spk.voice.gain[c] * (*tpl)[c] + spk.voice.bias[c] : 0.0;
        if (spec.noise_amplitude > 0)
          v += rng.uniform(-spec.noise_amplitude, spec.noise_amplitude);
        mel.at(row, c) = static_cast<float>(v);
      }
  };
  emit(nullptr, lead);
  for (auto p : phonemes)
    emit(&spec.templates.at(p).values, spec.frames_for(p, spk));
  emit(nullptr, trail);
  return mel;
}

// Generates `utts_per_speaker` utterances for each listed speaker, with
// phoneme counts drawn from len_range. Deterministic per (seed, utterance
// index), independent of generation order.
inline Corpus generate_corpus(const SyntheticSpec& spec,
                              const std::vector<std::size_t>& speaker_ids,
                              std::size_t utts_per_speaker,
                              std::pair<std::size_t, std::size_t> len_range,
                              std::uint64_t seed) {
  spec.validate();
  if (len_range.first < 1 || len_range.second < len_range.first)
    throw ValidationError("bad utterance length range");
  Corpus corpus;
  corpus.inventory = spec.inventory;
  corpus.languages = spec.languages;
  corpus.mel_channels = spec.mel_channels;
  std::uint64_t utt_index = 0;
  for (auto sid : speaker_ids) {
    const auto& spk = spec.speaker(sid);  // throws if language undefined
    const auto& lang = spec.language(spk.language_id);
    corpus.speaker_language[sid] = spk.language_id;
    for (std::size_t k = 0; k < utts_per_speaker; ++k, ++utt_index) {
      Rng rng = Rng::substream(seed, utt_index);
      const std::size_t len =
          static_cast<std::size_t>(rng.uniform_int(len_range.first, len_range.second));
      Utterance u;
      u.speaker_id = sid;
      u.phonemes = detail::random_sequence(lang, len, rng);
      u.mel = render_mel(spec, u.phonemes, sid, rng);
      corpus.utterances.push_back(std::move(u));
    }
  }
  return corpus;
}

// ---- oracle transcriber (stand-in for the external ASR) ----

// Recovers the phoneme sequence from a mel: per frame, undo the speaker
// transform and take the nearest template in Euclidean distance, then
// collapse consecutive runs and drop runs shorter than min_run. Frames
// nearer to silence (the zero vector) than to any template are discarded
// when silence padding is enabled.
inline std::vector<std::size_t> oracle_transcribe(const Tensor<float>& mel,
                                                  const SyntheticSpec& spec,
                                                  std::size_t speaker_id) {
  const auto& spk = spec.speaker(speaker_id);
  const std::size_t m = spec.mel_channels;
  if (spec.templates.empty())
    throw ValidationError("synthetic spec has no templates");
  if (mel.ndim() != 2 || mel.shape[1] != m)
    throw ValidationError("mel shape " + shape_str(mel.shape) +
                          " does not match spec channels " + std::to_string(m));
  for (std::size_t c = 0; c < m; ++c)
    if (spk.voice.gain[c] == 0.0)
      throw ValidationError("non-invertible transform: zero gain in channel " +
                            std::to_string(c));

  constexpr std::size_t kSilence = static_cast<std::size_t>(-1);
  std::vector<std::size_t> labels;
  labels.reserve(mel.shape[0]);
  std::vector<double> inv(m);
  for (std::size_t t = 0; t < mel.shape[0]; ++t) {
    for (std::size_t c = 0; c < m; ++c)
      inv[c] = (double(mel.at(t, c)) - spk.voice.bias[c]) / spk.voice.gain[c];
    std::size_t best = kSilence;
    double best_d = std::numeric_limits<double>::infinity();
    if (spec.silence_pad_max > 0) {
      double d = 0;
      for (std::size_t c = 0; c < m; ++c) d += inv[c] * inv[c];
      best_d = d;
    }
    for (const auto& [idx, tpl] : spec.templates) {
      double d = 0;
      for (std::size_t c = 0; c < m; ++c) {
        const double diff = inv[c] - tpl.values[c];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = idx;
      }
    }
    labels.push_back(best);
  }

  // collapse runs, dropping sub-min_run glitches and silence
  std::vector<std::size_t> out;
  std::size_t i = 0;
  while (i < labels.size()) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    if (labels[i] != kSilence && j - i >= spec.min_run)
      out.push_back(labels[i]);
    i = j;
  }
  return out;
}

// ---- spec construction and JSON ----

// Knobs for drawing a decodable spec at desk scale. Templates are sampled
// in [-1, 1]^M under rejection until every pair is separated in both norms;
// voice transforms stay mild so speaker identity perturbs rather than
// scrambles the spectral layout.
struct AutoSpecParams {
  std::vector<std::string> symbols;                     // whole inventory
  std::vector<std::pair<std::string, std::vector<std::size_t>>> languages;
  std::vector<std::pair<std::size_t, std::string>> speakers;  // id, language
  std::size_t inventory_capacity = 256;
  std::size_t mel_channels = 16;
  std::size_t duration = 3;
  double min_separation_inf = 0.5;
  double min_separation_l2 = 1.2;
  double gain_jitter = 0.08;   // gains in [1 - j, 1 + j]
  double bias_jitter = 0.08;   // biases in [-j, j]
  double rate_min = 1.0;
  double rate_max = 1.0;
  double noise_amplitude = 0.02;
  std::size_t silence_pad_max = 0;
  std::uint64_t seed = 1;
};

inline SyntheticSpec make_synthetic_spec(const AutoSpecParams& p) {
  SyntheticSpec spec;
  spec.inventory = PhonemeInventory::build(p.symbols, p.inventory_capacity);
  for (const auto& [id, subset] : p.languages) {
    LanguageDef l;
    l.language_id = id;
    l.phoneme_subset.insert(subset.begin(), subset.end());
    spec.languages.push_back(std::move(l));
  }
  spec.mel_channels = p.mel_channels;
  spec.noise_amplitude = p.noise_amplitude;
  spec.silence_pad_max = p.silence_pad_max;
  spec.seed = p.seed;

  std::set<std::size_t> used;
  for (const auto& l : spec.languages)
    used.insert(l.phoneme_subset.begin(), l.phoneme_subset.end());

  Rng rng(p.seed);
  std::vector<std::vector<double>> accepted;
  for (auto idx : used) {
    std::vector<double> cand(p.mel_channels);
    for (int attempt = 0; attempt < 10000; ++attempt) {
      for (auto& v : cand) v = rng.uniform(-1.0, 1.0);
      bool ok = true;
      for (const auto& other : accepted) {
        double dinf = 0, d2 = 0;
        for (std::size_t c = 0; c < p.mel_channels; ++c) {
          const double d = cand[c] - other[c];
          dinf = std::max(dinf, std::abs(d));
          d2 += d * d;
        }
        if (dinf < p.min_separation_inf || std::sqrt(d2) < p.min_separation_l2) {
          ok = false;
          break;
        }
      }
      if (ok) break;
      if (attempt == 9999)
        throw ValidationError(
            "could not draw separated templates; lower separation or "
            "phoneme count");
    }
    accepted.push_back(cand);
    spec.templates[idx] = PhonemeTemplate{cand, p.duration};
  }

  for (const auto& [id, lang] : p.speakers) {
    SyntheticSpeaker s;
    s.id = id;
    s.language_id = lang;
    s.voice.gain.resize(p.mel_channels);
    s.voice.bias.resize(p.mel_channels);
    for (std::size_t c = 0; c < p.mel_channels; ++c) {
      s.voice.gain[c] = 1.0 + rng.uniform(-p.gain_jitter, p.gain_jitter);
      s.voice.bias[c] = rng.uniform(-p.bias_jitter, p.bias_jitter);
    }
    s.voice.rate = p.rate_min == p.rate_max
                       ? p.rate_min
                       : rng.uniform(p.rate_min, p.rate_max);
    spec.speakers.push_back(std::move(s));
  }
  spec.validate();
  return spec;
}

inline nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json j;
  j["format"] = "mtts-synthetic-spec";
  j["version"] = 1;
  j["mel_channels"] = spec.mel_channels;
  j["noise_amplitude"] = spec.noise_amplitude;
  j["silence_pad_max"] = spec.silence_pad_max;
  j["min_run"] = spec.min_run;
  j["seed"] = spec.seed;
  j["inventory"] = detail::inventory_to_json(spec.inventory);
  j["languages"] = detail::languages_to_json(spec.languages);
  auto tpls = nlohmann::json::array();
  for (const auto& [idx, tpl] : spec.templates)
    tpls.push_back({{"phoneme", idx},
                    {"values", tpl.values},
                    {"duration", tpl.duration}});
  j["templates"] = tpls;
  auto spks = nlohmann::json::array();
  for (const auto& s : spec.speakers)
    spks.push_back({{"id", s.id},
                    {"language", s.language_id},
                    {"gain", s.voice.gain},
                    {"bias", s.voice.bias},
                    {"rate", s.voice.rate}});
  j["speakers"] = spks;
  return j;
}

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mtts-synthetic-spec")
      throw IoError("not a synthetic spec file");
    SyntheticSpec spec;
    spec.mel_channels = j.at("mel_channels").get<std::size_t>();
    spec.noise_amplitude = j.at("noise_amplitude").get<double>();
    spec.silence_pad_max = j.value("silence_pad_max", std::size_t{0});
    spec.min_run = j.value("min_run", std::size_t{2});
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.inventory = detail::inventory_from_json(j.at("inventory"));
    spec.languages = detail::languages_from_json(j.at("languages"));
    for (const auto& jt : j.at("templates")) {
      PhonemeTemplate tpl;
      tpl.values = jt.at("values").get<std::vector<double>>();
      tpl.duration = jt.at("duration").get<std::size_t>();
      spec.templates[jt.at("phoneme").get<std::size_t>()] = std::move(tpl);
    }
    for (const auto& js : j.at("speakers")) {
      SyntheticSpeaker s;
      s.id = js.at("id").get<std::size_t>();
      s.language_id = js.at("language").get<std::string>();
      s.voice.gain = js.at("gain").get<std::vector<double>>();
      s.voice.bias = js.at("bias").get<std::vector<double>>();
      s.voice.rate = js.at("rate").get<double>();
      spec.speakers.push_back(std::move(s));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed synthetic spec: ") + e.what());
  }
}

}  // namespace mtts

#endif  // MTTS_SYNTHETIC_HPP_
