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

#ifndef MTTS_EVALUATE_HPP_
#define MTTS_EVALUATE_HPP_

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtts/checkpoint.hpp"
#include "mtts/corpus.hpp"
#include "mtts/metrics.hpp"
#include "mtts/synthesis.hpp"
#include "mtts/synthetic.hpp"

namespace mtts {

// Objective evaluation of one checkpoint over a probe corpus: free-running
// synthesis scored by the oracle transcriber at phoneme-token level (a
// PER-style WER/MER, not word-level ASR output), plus teacher-forced MCD
// against the probe mels. Scores aggregate edit counts over the whole set,
// grouped by language.

struct LanguageScore {
  std::string language_id;
  EditCounts counts;
  double mcd_sum = 0.0;
  std::size_t n_utts = 0;

  double wer() const {
    const auto n = counts.substitutions + counts.deletions + counts.matches;
    return n ? double(counts.errors()) / double(n) : 0.0;
  }
  double mer() const {
    const auto d = counts.errors() + counts.matches;
    return d ? double(counts.errors()) / double(d) : 0.0;
  }
  double mcd_mean() const { return n_utts ? mcd_sum / double(n_utts) : 0.0; }
};

struct UtteranceScore {
  std::size_t index = 0;
  std::size_t speaker_id = 0;
  std::string language_id;
  double wer = 0.0;
  double mer = 0.0;
  double mcd_db = 0.0;
  bool stopped = true;
};

struct EvalReport {
  std::string scenario_label;
  std::uint64_t iters = 0;
  std::vector<LanguageScore> per_language;  // language first-seen order
  std::vector<UtteranceScore> per_utterance;
  std::size_t n_utts = 0;

  double mcd_db() const {
    double s = 0;
    std::size_t n = 0;
    for (const auto& l : per_language) {
      s += l.mcd_sum;
      n += l.n_utts;
    }
    return n ? s / double(n) : 0.0;
  }
  EditCounts total_counts() const {
    EditCounts t;
    for (const auto& l : per_language) {
      t.substitutions += l.counts.substitutions;
      t.deletions += l.counts.deletions;
      t.insertions += l.counts.insertions;
      t.matches += l.counts.matches;
    }
    return t;
  }
  double wer() const {
    const auto t = total_counts();
    const auto n = t.substitutions + t.deletions + t.matches;
    return n ? double(t.errors()) / double(n) : 0.0;
  }
  double mer() const {
    const auto t = total_counts();
    const auto d = t.errors() + t.matches;
    return d ? double(t.errors()) / double(d) : 0.0;
  }
};

inline EvalReport evaluate_scenario(const Checkpoint& ckpt,
                                    const Corpus& probe,
                                    const SyntheticSpec& spec,
                                    std::size_t max_frames = 2000) {
  probe.validate();
  EvalReport report;
  report.scenario_label = ckpt.scenario_label;
  report.iters = ckpt.steps_this_stage;
  std::map<std::string, std::size_t> lang_slot;

  for (std::size_t i = 0; i < probe.utterances.size(); ++i) {
    const auto& u = probe.utterances[i];
    const std::string& lang = probe.speaker_language.at(u.speaker_id);
    if (!lang_slot.count(lang)) {
      lang_slot[lang] = report.per_language.size();
      report.per_language.push_back(LanguageScore{lang, {}, 0.0, 0});
    }
    LanguageScore& ls = report.per_language[lang_slot[lang]];

    auto syn = synthesize_ids(ckpt, u.phonemes, u.speaker_id, max_frames);
    const auto hyp = oracle_transcribe(syn.mel, spec, u.speaker_id);
    const EditCounts counts = edit_align(u.phonemes, hyp);
    ls.counts.substitutions += counts.substitutions;
    ls.counts.deletions += counts.deletions;
    ls.counts.insertions += counts.insertions;
    ls.counts.matches += counts.matches;

    // teacher-forced MCD against the probe reference
    double utt_mcd = 0;
    {
      Graph<float> g;
      auto gp = insert_params(g, ckpt.params, false);
      auto memory = encode(g, gp, ckpt.config, u.phonemes);
      auto cond = condition_on_speaker(g, gp, memory, u.speaker_id);
      DecodeRequest<float> req;
      req.mode = DecodeMode::kTeacherForced;
      req.target = &u.mel;
      auto out = decode(g, gp, ckpt.config, cond, req);
      const std::size_t order =
          std::min<std::size_t>(12, ckpt.config.mel_channels - 1);
      utt_mcd = mcd(u.mel, g.value(out.y_post), order);
    }
    ls.mcd_sum += utt_mcd;
    ls.n_utts += 1;

    UtteranceScore us;
    us.index = i;
    us.speaker_id = u.speaker_id;
    us.language_id = lang;
    us.wer = wer(u.phonemes, hyp);
    us.mer = u.phonemes.empty() && hyp.empty() ? 0.0 : mer(u.phonemes, hyp);
    us.mcd_db = utt_mcd;
    us.stopped = syn.stopped;
    report.per_utterance.push_back(us);
    report.n_utts += 1;
  }
  return report;
}

namespace detail {

inline std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace detail

// CSV in the columns scenario, iters, mcd_db, wer, mer, n_utts. A run that
// spans several adapted languages gets slash-separated per-language cells in
// the wer/mer columns (language order = first appearance in the probe set);
// mcd stays a single aggregate.
inline std::string report_to_csv(const EvalReport& r) {
  std::string out = "scenario,iters,mcd_db,wer,mer,n_utts\n";
  out += r.scenario_label + "," + std::to_string(r.iters) + ",";
  out += detail::fmt_rate(r.mcd_db());
  std::string wer_cell, mer_cell;
  if (r.per_language.size() <= 1) {
    wer_cell = detail::fmt_rate(r.wer());
    mer_cell = detail::fmt_rate(r.mer());
  } else {
    for (const auto& l : r.per_language) {
      wer_cell += (wer_cell.empty() ? "" : "/") + detail::fmt_rate(l.wer());
      mer_cell += (mer_cell.empty() ? "" : "/") + detail::fmt_rate(l.mer());
    }
  }
  out += "," + wer_cell + "," + mer_cell + "," + std::to_string(r.n_utts) + "\n";
  return out;
}

// Structured summary carrying everything the CSV compresses away, plus the
// resolved configuration of the checkpoint under evaluation.
inline nlohmann::json report_to_json(const EvalReport& r,
                                     const Checkpoint& ckpt) {
  nlohmann::json j;
  j["tool"] = kToolVersion;
  j["scenario"] = r.scenario_label;
  j["iters"] = r.iters;
  j["n_utts"] = r.n_utts;
  j["mcd_db"] = r.mcd_db();
  j["wer"] = r.wer();
  j["mer"] = r.mer();
  j["token_level"] = "phoneme";  // oracle transcriber output, not words
  j["mcd_alignment"] = "teacher-forced";
  auto langs = nlohmann::json::array();
  for (const auto& l : r.per_language)
    langs.push_back({{"language", l.language_id},
                     {"wer", l.wer()},
                     {"mer", l.mer()},
                     {"mcd_db", l.mcd_mean()},
                     {"n_utts", l.n_utts}});
  j["per_language"] = langs;
  auto utts = nlohmann::json::array();
  for (const auto& u : r.per_utterance)
    utts.push_back({{"index", u.index},
                    {"speaker", u.speaker_id},
                    {"language", u.language_id},
                    {"wer", u.wer},
                    {"mer", u.mer},
                    {"mcd_db", u.mcd_db},
                    {"stopped", u.stopped}});
  j["per_utterance"] = utts;
  j["config"] = {{"model", detail::model_config_to_json(ckpt.config)},
                 {"optim", detail::optim_to_json(ckpt.optim)}};
  return j;
}

}  // namespace mtts

#endif  // MTTS_EVALUATE_HPP_
