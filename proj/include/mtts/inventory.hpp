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

#ifndef MTTS_INVENTORY_HPP_
#define MTTS_INVENTORY_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtts/errors.hpp"

namespace mtts {

// ---- minimal UTF-8 <-> codepoint helpers ----

inline std::vector<char32_t> utf8_decode(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len;
    char32_t cp;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
      cp = b0 & 0x1f;
    } else if ((b0 >> 4) == 0xe) {
      len = 3;
      cp = b0 & 0x0f;
    } else if ((b0 >> 3) == 0x1e) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw ValidationError("invalid UTF-8 byte at offset " + std::to_string(i));
    }
    if (i + len > s.size())
      throw ValidationError("truncated UTF-8 sequence at offset " +
                            std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b >> 6) != 0x2)
        throw ValidationError("invalid UTF-8 continuation at offset " +
                              std::to_string(i + k));
      cp = (cp << 6) | (b & 0x3f);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline std::string utf8_encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }
  return out;
}

// Universal fixed-size IPA symbol table. Indices are assigned in insertion
// order and stay stable forever; the capacity is the full embedding-table
// row count, allocated up front so later languages train into rows that
// already exist.
class PhonemeInventory {
 public:
  PhonemeInventory() : capacity_(0) {}

  static PhonemeInventory build(const std::vector<std::string>& symbols,
                                std::size_t capacity) {
    if (symbols.size() > capacity)
      throw ValidationError("inventory capacity " + std::to_string(capacity) +
                            " exceeded by " + std::to_string(symbols.size()) +
                            " symbols");
    PhonemeInventory inv;
    inv.capacity_ = capacity;
    for (const auto& s : symbols) inv.append(s);
    return inv;
  }

  // Registers one more symbol into the next free slot.
  std::size_t append(const std::string& symbol) {
    if (symbol.empty()) throw ValidationError("empty phoneme symbol");
    if (index_.count(symbol))
      throw ValidationError("duplicate phoneme symbol: " + symbol);
    if (symbols_.size() >= capacity_)
      throw ValidationError("inventory capacity " + std::to_string(capacity_) +
                            " exceeded");
    const std::size_t idx = symbols_.size();
    symbols_.push_back(symbol);
    index_[symbol] = idx;
    auto cps = utf8_decode(symbol);
    max_symbol_cps_ = std::max(max_symbol_cps_, cps.size());
    by_codepoints_[std::move(cps)] = idx;
    return idx;
  }

  std::size_t size() const { return symbols_.size(); }
  std::size_t capacity() const { return capacity_; }

  const std::string& symbol(std::size_t index) const {
    if (index >= symbols_.size())
      throw ValidationError("phoneme index " + std::to_string(index) +
                            " out of range");
    return symbols_[index];
  }

  bool contains(const std::string& symbol) const {
    return index_.count(symbol) > 0;
  }

  std::size_t index_of(const std::string& symbol) const {
    auto it = index_.find(symbol);
    if (it == index_.end())
      throw ValidationError("unknown phoneme symbol: " + symbol);
    return it->second;
  }

  // Greedy longest-match tokenization over registered symbols, measured in
  // codepoints. Multi-codepoint symbols (affricates, diacritic clusters) are
  // matched as wholes before any of their prefixes.
  std::vector<std::size_t> encode_text(std::string_view ipa_text) const {
    const auto cps = utf8_decode(ipa_text);
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < cps.size()) {
      const std::size_t max_len = std::min(max_symbol_cps_, cps.size() - pos);
      bool matched = false;
      for (std::size_t len = max_len; len >= 1; --len) {
        std::vector<char32_t> probe(cps.begin() + pos, cps.begin() + pos + len);
        auto it = by_codepoints_.find(probe);
        if (it != by_codepoints_.end()) {
          out.push_back(it->second);
          pos += len;
          matched = true;
          break;
        }
      }
      if (!matched)
        throw ValidationError(
            "unknown-symbol: codepoint U+" + hex_cp(cps[pos]) +
            " at position " + std::to_string(pos));
    }
    return out;
  }

  std::string decode(const std::vector<std::size_t>& indices) const {
    std::string out;
    for (auto i : indices) out += symbol(i);
    return out;
  }

  bool operator==(const PhonemeInventory& o) const {
    return capacity_ == o.capacity_ && symbols_ == o.symbols_;
  }

 private:
  static std::string hex_cp(char32_t cp) {
    static const char* digits = "0123456789ABCDEF";
    std::string s;
    for (int shift = 28; shift >= 0; shift -= 4) {
      const auto d = (static_cast<std::uint32_t>(cp) >> shift) & 0xf;
      if (!s.empty() || d || shift < 16) s.push_back(digits[d]);
    }
    return s;
  }

  std::size_t capacity_;
  std::vector<std::string> symbols_;
  std::map<std::string, std::size_t> index_;
  std::map<std::vector<char32_t>, std::size_t> by_codepoints_;
  std::size_t max_symbol_cps_ = 0;
};

// A language is just a named subset of inventory indices; subsets of
// different languages may overlap.
struct LanguageDef {
  std::string language_id;
  std::set<std::size_t> phoneme_subset;

  void validate(const PhonemeInventory& inv) const {
    if (language_id.empty()) throw ValidationError("empty language id");
    for (auto i : phoneme_subset)
      if (i >= inv.size())
        throw ValidationError("language " + language_id + ": phoneme index " +
                              std::to_string(i) + " not in inventory");
  }
};

// Partition of a new language's phonemes against everything already known:
// `novel` are indices no prior language uses, `shared` the rest.
inline std::pair<std::set<std::size_t>, std::set<std::size_t>> coverage_diff(
    const LanguageDef& lang_new, const std::vector<LanguageDef>& langs_known) {
  std::set<std::size_t> known_union;
  for (const auto& l : langs_known)
    known_union.insert(l.phoneme_subset.begin(), l.phoneme_subset.end());
  std::set<std::size_t> shared, novel;
  for (auto i : lang_new.phoneme_subset) {
    if (known_union.count(i))
      shared.insert(i);
    else
      novel.insert(i);
  }
  return {shared, novel};
}

enum class SpeakerStatus : std::uint8_t { kTrainable = 0, kFrozen = 1 };

struct SpeakerEntry {
  std::size_t id;
  std::string language_id;
  SpeakerStatus status = SpeakerStatus::kTrainable;
};

// Registry of known speakers. Ids are dense in [0, count). Freezing is
// monotone: once an entry is frozen it never becomes trainable again.
class SpeakerRegistry {
 public:
  SpeakerRegistry() : capacity_(0) {}
  explicit SpeakerRegistry(std::size_t capacity) : capacity_(capacity) {}

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<SpeakerEntry>& entries() const { return entries_; }

  const SpeakerEntry& entry(std::size_t id) const {
    if (id >= entries_.size())
      throw ValidationError("unknown speaker id " + std::to_string(id));
    return entries_[id];
  }

  bool contains(std::size_t id) const { return id < entries_.size(); }

  void freeze(std::size_t id) {
    if (id >= entries_.size())
      throw ValidationError("unknown speaker id " + std::to_string(id));
    entries_[id].status = SpeakerStatus::kFrozen;
  }

  std::vector<std::size_t> frozen_ids() const {
    std::vector<std::size_t> out;
    for (const auto& e : entries_)
      if (e.status == SpeakerStatus::kFrozen) out.push_back(e.id);
    return out;
  }

  void push_entry(SpeakerEntry e) {
    // used by deserialization; ids must arrive dense and in order
    if (e.id != entries_.size())
      throw ValidationError("speaker ids must be dense; got " +
                            std::to_string(e.id) + " at position " +
                            std::to_string(entries_.size()));
    if (entries_.size() >= capacity_)
      throw ValidationError("speaker capacity " + std::to_string(capacity_) +
                            " exceeded");
    entries_.push_back(std::move(e));
  }

  bool operator==(const SpeakerRegistry& o) const {
    if (capacity_ != o.capacity_ || entries_.size() != o.entries_.size())
      return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].id != o.entries_[i].id ||
          entries_[i].language_id != o.entries_[i].language_id ||
          entries_[i].status != o.entries_[i].status)
        return false;
    }
    return true;
  }

 private:
  std::size_t capacity_;
  std::vector<SpeakerEntry> entries_;
};

// Appends n trainable speakers for a language; existing entries (and their
// statuses) are untouched. Returns the updated registry and the new ids.
inline std::pair<SpeakerRegistry, std::vector<std::size_t>> add_speakers(
    const SpeakerRegistry& reg, std::size_t n, const std::string& language_id) {
  if (reg.size() + n > reg.capacity())
    throw ValidationError("speaker capacity " + std::to_string(reg.capacity()) +
                          " exceeded: have " + std::to_string(reg.size()) +
                          ", adding " + std::to_string(n));
  SpeakerRegistry out = reg;
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t id = out.size();
    out.push_entry(SpeakerEntry{id, language_id, SpeakerStatus::kTrainable});
    ids.push_back(id);
  }
  return {out, ids};
}

}  // namespace mtts

#endif  // MTTS_INVENTORY_HPP_
