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

#ifndef MTTS_TRAIN_HPP_
#define MTTS_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mtts/checkpoint.hpp"
#include "mtts/corpus.hpp"
#include "mtts/errors.hpp"
#include "mtts/metrics.hpp"
#include "mtts/model.hpp"
#include "mtts/optimizer.hpp"

namespace mtts {

inline constexpr std::size_t kDefaultPhonemeCapacity = 256;  // P_max
inline constexpr std::size_t kDefaultSpeakerCapacity = 64;   // S_max

struct TrainSettings {
  std::size_t log_interval = 50;
  std::size_t mcd_interval = 250;
  std::size_t mcd_probe_utts = 8;
};

enum class AdaptKind { kMono, kCross };

// One adaptation request: which speakers join, in which language, and how
// long to fine-tune. Mono-lingual adaptation requires the new language's
// phonemes to be covered by what the source model has already trained on.
struct AdaptScenario {
  AdaptKind kind = AdaptKind::kMono;
  std::vector<std::pair<std::size_t, std::string>> new_speakers;  // id, lang
  std::size_t steps = 1000;
  std::optional<double> lr_override;
  bool mix_old_data = false;
};

namespace detail {

// Teacher-forced mel loss (stop term excluded) over a fixed utterance set;
// this is the quantity logged and compared across training.
inline double eval_mel_loss(const ModelParams<float>& params,
                            const ModelConfig& cfg,
                            const std::vector<const Utterance*>& utts) {
  double total = 0;
  for (const auto* u : utts) {
    Graph<float> g;
    auto gp = insert_params(g, params, false);
    auto memory = encode(g, gp, cfg, u->phonemes);
    auto cond = condition_on_speaker(g, gp, memory, u->speaker_id);
    DecodeRequest<float> req;
    req.mode = DecodeMode::kTeacherForced;
    req.target = &u->mel;
    auto out = decode(g, gp, cfg, cond, req);
    const auto& pre = g.value(out.y_pre);
    const auto& post = g.value(out.y_post);
    double acc = 0;
    for (std::size_t i = 0; i < u->mel.numel(); ++i) {
      const double dpre = double(u->mel.data[i]) - double(pre.data[i]);
      const double dpost = double(u->mel.data[i]) - double(post.data[i]);
      acc += dpre * dpre + dpost * dpost;
    }
    total += acc / double(u->mel.numel());
  }
  return total / double(utts.size());
}

inline double eval_probe_mcd(const ModelParams<float>& params,
                             const ModelConfig& cfg,
                             const std::vector<const Utterance*>& utts) {
  double total = 0;
  for (const auto* u : utts) {
    Graph<float> g;
    auto gp = insert_params(g, params, false);
    auto memory = encode(g, gp, cfg, u->phonemes);
    auto cond = condition_on_speaker(g, gp, memory, u->speaker_id);
    DecodeRequest<float> req;
    req.mode = DecodeMode::kTeacherForced;
    req.target = &u->mel;
    auto out = decode(g, gp, cfg, cond, req);
    const std::size_t order = std::min<std::size_t>(12, cfg.mel_channels - 1);
    total += mcd(u->mel, g.value(out.y_post), order);
  }
  return total / double(utts.size());
}

// Core optimization loop shared by pretraining and adaptation. Single
// threaded on purpose: bit-identical trajectories for a given seed are a
// contract, not an accident.
inline void run_training(Checkpoint& ckpt, const std::vector<Utterance>& data,
                         const FreezePlan& plan, const AdamHyper& hyper,
                         std::size_t steps, std::uint64_t seed,
                         const TrainSettings& settings) {
  if (data.empty()) throw ValidationError("training corpus is empty");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  ckpt.adam.validate_plan(plan);

  const ModelConfig& cfg = ckpt.config;
  Rng rng(seed ^ 0x7261696e);

  // fixed probe subset: loss and MCD snapshots are comparable across steps
  std::vector<const Utterance*> probe;
  for (std::size_t i = 0; i < std::min(settings.mcd_probe_utts, data.size());
       ++i)
    probe.push_back(&data[i]);

  std::vector<std::string> names;
  std::vector<Tensor<float>*> param_ptrs;
  for (auto& it : ckpt.params.items) {
    names.push_back(it.name);
    param_ptrs.push_back(&it.value);
  }

  auto log_point = [&](std::uint64_t step, bool with_mcd) {
    TrainLogEntry e;
    e.step = step;
    e.loss = eval_mel_loss(ckpt.params, cfg, probe);
    if (with_mcd) e.mcd = eval_probe_mcd(ckpt.params, cfg, probe);
    ckpt.log.push_back(e);
  };
  log_point(ckpt.total_steps, true);

  std::vector<Tensor<float>> grads;
  for (auto& it : ckpt.params.items)
    grads.emplace_back(Tensor<float>::zeros(it.value.shape));

  const std::size_t batch = std::max<std::size_t>(1, ckpt.optim.batch_size);
  for (std::size_t step = 1; step <= steps; ++step) {
    for (auto& gt : grads)
      std::fill(gt.data.begin(), gt.data.end(), 0.0f);
    for (std::size_t b = 0; b < batch; ++b) {
      const Utterance& u = data[rng.uniform_index(data.size())];
      Graph<float> g;
      auto gp = insert_params(g, ckpt.params, true);
      auto memory = encode(g, gp, cfg, u.phonemes);
      auto cond = condition_on_speaker(g, gp, memory, u.speaker_id);
      DecodeRequest<float> req;
      req.mode = DecodeMode::kTeacherForced;
      req.target = &u.mel;
      req.dropout_seed = rng.next_u64();
      auto out = decode(g, gp, cfg, cond, req);
      auto stop_targets =
          stop_targets_for<float>(u.mel.shape[0], cfg.reduction_factor);
      auto loss = build_loss(g, out, u.mel, stop_targets, cfg.stop_loss_weight,
                             cfg.stop_pos_weight);
      if (!std::isfinite(double(g.value(loss).data[0])))
        throw NumericError("non-finite training loss at step " +
                           std::to_string(ckpt.total_steps + step));
      g.backward(loss);
      for (std::size_t i = 0; i < gp.ids.size(); ++i) {
        const auto& gt = g.grad(gp.ids[i]);
        for (std::size_t k = 0; k < gt.numel(); ++k)
          grads[i].data[k] += gt.data[k];
      }
    }
    const float inv_batch = 1.0f / float(batch);
    for (auto& gt : grads)
      for (auto& v : gt.data) v *= inv_batch;

    if (ckpt.optim.grad_clip_norm > 0) {
      double norm_sq = 0;
      for (const auto& gt : grads)
        for (float v : gt.data) norm_sq += double(v) * double(v);
      const double norm = std::sqrt(norm_sq);
      if (norm > ckpt.optim.grad_clip_norm) {
        const float scale = float(ckpt.optim.grad_clip_norm / norm);
        for (auto& gt : grads)
          for (auto& v : gt.data) v *= scale;
      }
    }

    std::vector<const Tensor<float>*> grad_ptrs;
    for (const auto& gt : grads) grad_ptrs.push_back(&gt);
    AdamHyper step_hyper = hyper;
    step_hyper.learning_rate =
        ckpt.optim.scheduled_lr(hyper.learning_rate, step, steps);
    ckpt.adam.step(names, param_ptrs, grad_ptrs, plan, step_hyper);

    const std::uint64_t global = ckpt.total_steps + step;
    const bool last = step == steps;
    const bool want_log = settings.log_interval && step % settings.log_interval == 0;
    const bool want_mcd = settings.mcd_interval && step % settings.mcd_interval == 0;
    if (want_log || want_mcd || last) log_point(global, want_mcd || last);
  }
  ckpt.total_steps += steps;
  ckpt.steps_this_stage = steps;
  ckpt.has_optimizer_state = true;
}

}  // namespace detail

// Trains a fresh model on a corpus. Every parameter group is trainable
// (empty freeze plan); the inventory, languages, and speaker registry come
// from the corpus manifest.
inline Checkpoint pretrain(const Corpus& corpus, const ModelConfig& cfg,
                           const OptimHyper& optim, std::uint64_t seed,
                           std::size_t steps,
                           const TrainSettings& settings = {},
                           std::size_t phoneme_capacity = kDefaultPhonemeCapacity,
                           std::size_t speaker_capacity = kDefaultSpeakerCapacity) {
  if (corpus.utterances.empty())
    throw ValidationError("pretrain: corpus is empty");
  if (steps < 1) throw ValidationError("pretrain: steps must be >= 1");
  corpus.validate();
  if (cfg.mel_channels != corpus.mel_channels)
    throw ConfigError("model mel_channels " + std::to_string(cfg.mel_channels) +
                      " does not match corpus " +
                      std::to_string(corpus.mel_channels));
  if (corpus.inventory.capacity() > phoneme_capacity)
    throw ConfigError("corpus inventory capacity exceeds phoneme table rows");

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.optim = optim;
  ckpt.seed = seed;
  ckpt.inventory = corpus.inventory;
  ckpt.languages = corpus.languages;
  ckpt.registry = SpeakerRegistry(speaker_capacity);
  for (const auto& [id, lang] : corpus.speaker_language) {
    corpus.language(lang);  // must exist
    ckpt.registry.push_entry(
        SpeakerEntry{id, lang, SpeakerStatus::kTrainable});
  }
  std::set<std::string> langs_seen;
  for (const auto& [id, lang] : corpus.speaker_language)
    if (langs_seen.insert(lang).second) ckpt.trained_languages.push_back(lang);
  {
    std::string label;
    for (const auto& l : ckpt.trained_languages)
      label += (label.empty() ? "" : "+") + l;
    ckpt.scenario_label = label;
  }

  Rng rng(seed);
  ckpt.params = init_params<float>(cfg, phoneme_capacity, speaker_capacity, rng);
  std::vector<std::string> names;
  std::vector<Shape> shapes;
  for (const auto& it : ckpt.params.items) {
    names.push_back(it.name);
    shapes.push_back(it.value.shape);
  }
  ckpt.adam.init(names, shapes);

  detail::run_training(ckpt, corpus.utterances, FreezePlan{}, optim.adam(),
                       steps, seed, settings);
  return ckpt;
}

// Freeze plan for mono-lingual adaptation: the whole encoder and phoneme
// table stay fixed, plus the speaker rows of everyone but the new speakers.
// Decoder (with attention and postnet) and the new speaker rows train.
inline FreezePlan plan_monolingual(const Checkpoint& ckpt,
                                   const std::vector<std::size_t>& new_speakers) {
  for (auto id : new_speakers)
    if (!ckpt.registry.contains(id))
      throw ValidationError("plan_monolingual: speaker " + std::to_string(id) +
                            " not registered");
  FreezePlan plan;
  for (const auto& it : ckpt.params.items)
    if (it.group == ParamGroup::kEncoder) plan.frozen_tensors.insert(it.name);
  plan.frozen_tensors.insert("phoneme_table");
  std::set<std::size_t> new_set(new_speakers.begin(), new_speakers.end());
  for (const auto& e : ckpt.registry.entries())
    if (!new_set.count(e.id)) plan.frozen_rows["speaker_table"].insert(e.id);
  return plan;
}

// Freeze plan for cross-lingual adaptation: everything trains except the old
// speakers' embedding rows (the partial freeze of the speaker table).
inline FreezePlan plan_crosslingual(const Checkpoint& ckpt,
                                    const std::vector<std::size_t>& new_speakers) {
  for (auto id : new_speakers)
    if (!ckpt.registry.contains(id))
      throw ValidationError("plan_crosslingual: speaker " +
                            std::to_string(id) + " not registered");
  FreezePlan plan;
  std::set<std::size_t> new_set(new_speakers.begin(), new_speakers.end());
  for (const auto& e : ckpt.registry.entries())
    if (!new_set.count(e.id)) plan.frozen_rows["speaker_table"].insert(e.id);
  return plan;
}

// Fine-tunes a checkpoint toward new speakers on their (new) data only; the
// previous speakers are preserved by freezing, not by data replay. Old
// speakers' utterances are rejected unless the caller explicitly passes the
// old corpus for mixing.
inline Checkpoint adapt(const Checkpoint& base, const Corpus& corpus,
                        const AdaptScenario& scenario, std::uint64_t seed,
                        const TrainSettings& settings = {},
                        const Corpus* old_data = nullptr) {
  if (scenario.new_speakers.empty())
    throw ValidationError("adapt: no new speakers in scenario");
  if (scenario.steps < 1) throw ValidationError("adapt: steps must be >= 1");
  corpus.validate();
  if (corpus.mel_channels != base.config.mel_channels)
    throw ValidationError("adapt: corpus mel channels mismatch");
  if (scenario.mix_old_data != (old_data != nullptr))
    throw ValidationError("adapt: mix_old_data flag and old corpus must agree");

  Checkpoint ckpt = base;
  ckpt.optimizer_reinitialized = false;
  ckpt.log.clear();

  // the corpus inventory must be a prefix-compatible view of the model's
  for (std::size_t i = 0; i < corpus.inventory.size(); ++i) {
    if (i >= ckpt.inventory.size()) {
      ckpt.inventory.append(corpus.inventory.symbol(i));
    } else if (ckpt.inventory.symbol(i) != corpus.inventory.symbol(i)) {
      throw ValidationError("adapt: corpus phoneme " +
                            corpus.inventory.symbol(i) + " at index " +
                            std::to_string(i) +
                            " conflicts with checkpoint inventory");
    }
  }
  if (ckpt.inventory.size() > ckpt.params.get("phoneme_table").shape[0])
    throw ValidationError("adapt: inventory outgrew the phoneme table");

  // register the new languages
  for (const auto& l : corpus.languages)
    if (!ckpt.has_language(l.language_id)) ckpt.languages.push_back(l);

  // mono adaptation must stay inside already-trained phonemes
  if (scenario.kind == AdaptKind::kMono) {
    const auto trained = base.trained_phonemes();
    for (const auto& [id, lang] : scenario.new_speakers)
      for (auto p : ckpt.language(lang).phoneme_subset)
        if (!trained.count(p))
          throw ValidationError(
              "adapt: mono-lingual scenario uses untrained phoneme index " +
              std::to_string(p) + "; use a cross-lingual scenario");
  }

  // all pre-existing speakers become old: frozen from here on
  const std::size_t old_count = ckpt.registry.size();
  for (std::size_t id = 0; id < old_count; ++id) ckpt.registry.freeze(id);

  // register the new speakers; ids must continue densely
  std::vector<std::size_t> new_ids;
  for (const auto& [id, lang] : scenario.new_speakers) {
    ckpt.language(lang);
    auto [reg, ids] = add_speakers(ckpt.registry, 1, lang);
    if (ids[0] != id)
      throw ValidationError("adapt: new speaker id " + std::to_string(id) +
                            " must be the next dense id " +
                            std::to_string(ids[0]));
    ckpt.registry = std::move(reg);
    new_ids.push_back(id);
  }

  // corpus must contain only new-speaker utterances
  std::set<std::size_t> new_set(new_ids.begin(), new_ids.end());
  for (const auto& u : corpus.utterances)
    if (!new_set.count(u.speaker_id))
      throw ValidationError("adapt: corpus references old speaker " +
                            std::to_string(u.speaker_id) +
                            "; adaptation data must be new-speaker only");

  // new speaker rows start at the mean of the already-learned rows plus
  // a small perturbation, inside the learned speaker manifold
  {
    auto& table = ckpt.params.get("speaker_table");
    const std::size_t d = table.shape[1];
    Rng rng(seed ^ 0x616461);
    std::vector<double> mean(d, 0.0);
    for (std::size_t id = 0; id < old_count; ++id)
      for (std::size_t c = 0; c < d; ++c) mean[c] += double(table.at(id, c));
    for (auto& v : mean) v /= double(std::max<std::size_t>(old_count, 1));
    for (auto id : new_ids)
      for (std::size_t c = 0; c < d; ++c)
        table.at(id, c) = float(mean[c] + rng.gaussian(0.0, 0.01));
  }

  FreezePlan plan = scenario.kind == AdaptKind::kMono
                        ? plan_monolingual(ckpt, new_ids)
                        : plan_crosslingual(ckpt, new_ids);
  {
    std::string label =
        scenario.kind == AdaptKind::kMono ? "mono:" : "cross:";
    std::set<std::string> langs;
    for (const auto& [id, lang] : scenario.new_speakers)
      if (langs.insert(lang).second)
        label += (langs.size() > 1 ? "+" : "") + lang;
    ckpt.freeze_history.push_back(FreezeRecord{label, plan});
    std::string chain_langs;
    for (const auto& l : langs)
      chain_langs += (chain_langs.empty() ? "" : "+") + l;
    ckpt.scenario_label = base.scenario_label + "2" + chain_langs;
    for (const auto& l : langs) {
      bool seen = false;
      for (const auto& t : ckpt.trained_languages) seen = seen || t == l;
      if (!seen) ckpt.trained_languages.push_back(l);
    }
  }

  std::vector<Utterance> data = corpus.utterances;
  if (old_data) {
    old_data->validate();
    for (const auto& u : old_data->utterances) {
      if (!ckpt.registry.contains(u.speaker_id))
        throw ValidationError("adapt: old-data speaker not registered");
      data.push_back(u);
    }
  }

  AdamHyper hyper = ckpt.optim.adam(ckpt.optim.adapt_lr_scale);
  if (scenario.lr_override) hyper.learning_rate = *scenario.lr_override;
  detail::run_training(ckpt, data, plan, hyper, scenario.steps, seed, settings);
  return ckpt;
}

}  // namespace mtts

#endif  // MTTS_TRAIN_HPP_
