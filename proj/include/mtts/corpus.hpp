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

#ifndef MTTS_CORPUS_HPP_
#define MTTS_CORPUS_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtts/errors.hpp"
#include "mtts/inventory.hpp"
#include "mtts/io.hpp"
#include "mtts/tensor.hpp"

namespace mtts {

// One training/eval item: phoneme id sequence X, speaker id S, target
// mel-spectrogram Y ({T_out, M}, dB-scaled log-mel by convention).
struct Utterance {
  std::vector<std::size_t> phonemes;
  std::size_t speaker_id = 0;
  Tensor<float> mel;
};

struct Corpus {
  PhonemeInventory inventory;
  std::vector<LanguageDef> languages;
  std::map<std::size_t, std::string> speaker_language;  // id -> language
  std::size_t mel_channels = 0;
  std::vector<Utterance> utterances;
  nlohmann::json generator_info;  // resolved generation settings, if any

  const LanguageDef& language(const std::string& id) const {
    for (const auto& l : languages)
      if (l.language_id == id) return l;
    throw ValidationError("unknown language id: " + id);
  }

  std::vector<std::size_t> speaker_ids() const {
    std::vector<std::size_t> out;
    for (const auto& [id, lang] : speaker_language) out.push_back(id);
    return out;
  }

  void validate() const {
    for (const auto& l : languages) l.validate(inventory);
    for (std::size_t u = 0; u < utterances.size(); ++u) {
      const auto& utt = utterances[u];
      if (!speaker_language.count(utt.speaker_id))
        throw ValidationError("utterance " + std::to_string(u) +
                              ": speaker " + std::to_string(utt.speaker_id) +
                              " not declared in corpus");
      if (utt.mel.ndim() != 2 || utt.mel.shape[1] != mel_channels)
        throw ValidationError("utterance " + std::to_string(u) +
                              ": mel shape " + shape_str(utt.mel.shape) +
                              " does not match corpus channels " +
                              std::to_string(mel_channels));
      if (utt.mel.shape[0] < 1)
        throw ValidationError("utterance " + std::to_string(u) + ": empty mel");
      for (auto p : utt.phonemes)
        if (p >= inventory.size())
          throw ValidationError("utterance " + std::to_string(u) +
                                ": phoneme index " + std::to_string(p) +
                                " not in inventory");
    }
  }
};

// ---- MELB mel blob: magic "MELB", u32le T, u32le M, T*M f32le row-major ----

inline std::string encode_mel(const Tensor<float>& mel) {
  if (mel.ndim() != 2)
    throw ValidationError("mel must be 2-d, got " + shape_str(mel.shape));
  std::string out;
  out.reserve(12 + mel.numel() * 4);
  out += "MELB";
  put_u32le(out, static_cast<std::uint32_t>(mel.shape[0]));
  put_u32le(out, static_cast<std::uint32_t>(mel.shape[1]));
  for (float v : mel.data) put_f32le(out, v);
  return out;
}

inline Tensor<float> decode_mel(const std::string& bytes,
                                const std::string& what) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "MELB") != 0)
    throw IoError("malformed header in mel blob: " + what);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t t = get_u32le(p + 4);
  const std::uint32_t m = get_u32le(p + 8);
  const std::size_t need = 12 + std::size_t(t) * m * 4;
  if (bytes.size() != need)
    throw IoError("truncated-tensor: " + what + " holds " +
                  std::to_string(bytes.size()) + " bytes, expected " +
                  std::to_string(need));
  Tensor<float> mel({t, m});
  for (std::size_t i = 0; i < mel.numel(); ++i)
    mel.data[i] = get_f32le(p + 12 + i * 4);
  return mel;
}

inline void write_mel(const std::filesystem::path& path,
                      const Tensor<float>& mel) {
  write_file_bytes(path, encode_mel(mel));
}

inline Tensor<float> read_mel(const std::filesystem::path& path) {
  return decode_mel(read_file_bytes(path), path.string());
}

// ---- corpus directory: manifest.json + one .mel blob per utterance ----

namespace detail {

inline nlohmann::json inventory_to_json(const PhonemeInventory& inv) {
  nlohmann::json j;
  j["capacity"] = inv.capacity();
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < inv.size(); ++i) arr.push_back(inv.symbol(i));
  j["symbols"] = arr;
  return j;
}

inline PhonemeInventory inventory_from_json(const nlohmann::json& j) {
  std::vector<std::string> symbols;
  for (const auto& s : j.at("symbols")) symbols.push_back(s.get<std::string>());
  return PhonemeInventory::build(symbols, j.at("capacity").get<std::size_t>());
}

inline nlohmann::json languages_to_json(const std::vector<LanguageDef>& langs) {
  auto arr = nlohmann::json::array();
  for (const auto& l : langs) {
    nlohmann::json jl;
    jl["id"] = l.language_id;
    jl["phonemes"] = std::vector<std::size_t>(l.phoneme_subset.begin(),
                                              l.phoneme_subset.end());
    arr.push_back(jl);
  }
  return arr;
}

inline std::vector<LanguageDef> languages_from_json(const nlohmann::json& j) {
  std::vector<LanguageDef> out;
  for (const auto& jl : j) {
    LanguageDef l;
    l.language_id = jl.at("id").get<std::string>();
    for (const auto& p : jl.at("phonemes"))
      l.phoneme_subset.insert(p.get<std::size_t>());
    out.push_back(std::move(l));
  }
  return out;
}

inline std::string utt_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt_%05zu.mel", index);
  return buf;
}

}  // namespace detail

inline void write_corpus(const Corpus& corpus,
                         const std::filesystem::path& dir) {
  corpus.validate();
  ensure_directory(dir);
  nlohmann::json manifest;
  manifest["format"] = "mtts-corpus";
  manifest["version"] = kCorpusFormatVersion;
  manifest["tool"] = kToolVersion;
  manifest["mel_channels"] = corpus.mel_channels;
  manifest["inventory"] = detail::inventory_to_json(corpus.inventory);
  manifest["languages"] = detail::languages_to_json(corpus.languages);
  auto speakers = nlohmann::json::array();
  for (const auto& [id, lang] : corpus.speaker_language)
    speakers.push_back({{"id", id}, {"language", lang}});
  manifest["speakers"] = speakers;
  if (!corpus.generator_info.is_null())
    manifest["generator"] = corpus.generator_info;
  auto utts = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    const auto& u = corpus.utterances[i];
    const std::string name = detail::utt_file_name(i);
    const std::string bytes = encode_mel(u.mel);
    write_file_bytes(dir / name, bytes);
    nlohmann::json ju;
    ju["mel_file"] = name;
    ju["speaker"] = u.speaker_id;
    ju["phonemes"] = u.phonemes;
    ju["mel_fnv64"] = hash_hex(fnv1a64(bytes.data(), bytes.size()));
    utts.push_back(ju);
  }
  manifest["utterances"] = utts;
  // escaped-unicode dump keeps the manifest pure ASCII
  write_file_bytes(dir / "manifest.json", manifest.dump(2, ' ', true));
}

inline Corpus read_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file_bytes(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed header: cannot parse " + manifest_path.string() +
                  ": " + e.what());
  }
  try {
    if (manifest.at("format").get<std::string>() != "mtts-corpus")
      throw IoError("malformed header: not a corpus manifest: " +
                    manifest_path.string());
    if (manifest.at("version").get<int>() != kCorpusFormatVersion)
      throw IoError("corpus version mismatch in " + manifest_path.string());
    Corpus corpus;
    corpus.mel_channels = manifest.at("mel_channels").get<std::size_t>();
    corpus.inventory = detail::inventory_from_json(manifest.at("inventory"));
    corpus.languages = detail::languages_from_json(manifest.at("languages"));
    for (const auto& js : manifest.at("speakers"))
      corpus.speaker_language[js.at("id").get<std::size_t>()] =
          js.at("language").get<std::string>();
    if (manifest.contains("generator"))
      corpus.generator_info = manifest.at("generator");
    for (const auto& ju : manifest.at("utterances")) {
      Utterance u;
      u.speaker_id = ju.at("speaker").get<std::size_t>();
      for (const auto& p : ju.at("phonemes"))
        u.phonemes.push_back(p.get<std::size_t>());
      const std::string name = ju.at("mel_file").get<std::string>();
      const std::string bytes = read_file_bytes(dir / name);
      const std::string expect = ju.at("mel_fnv64").get<std::string>();
      const std::string got = hash_hex(fnv1a64(bytes.data(), bytes.size()));
      if (got != expect)
        throw IoError("checksum mismatch for " + (dir / name).string() +
                      ": manifest says " + expect + ", file hashes to " + got);
      u.mel = decode_mel(bytes, (dir / name).string());
      corpus.utterances.push_back(std::move(u));
    }
    corpus.validate();
    return corpus;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed corpus manifest " + manifest_path.string() +
                  ": " + e.what());
  }
}

}  // namespace mtts

#endif  // MTTS_CORPUS_HPP_
