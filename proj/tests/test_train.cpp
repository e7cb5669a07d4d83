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

#include <gtest/gtest.h>

#include <vector>

#include "mtts/synthetic.hpp"
#include "mtts/train.hpp"

namespace mtts {
namespace {

// Small bilingual world shared by the training tests: L1 = {0,1,2},
// L2 = {3,4,5}, one speaker each, mild transforms.
SyntheticSpec world_spec() {
  AutoSpecParams p;
  p.symbols = {"a", "b", "k", "o", "u", "ʃ", "m", "n"};
  p.languages = {{"L1", {0, 1, 2}}, {"L2", {3, 4, 5}}};
  p.speakers = {{0, "L1"}, {1, "L2"}, {2, "L1"}, {3, "L2"}};
  p.mel_channels = 8;
  p.duration = 3;
  p.noise_amplitude = 0.02;
  p.seed = 7;
  return make_synthetic_spec(p);
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.embedding_dim = 8;
  cfg.encoder_conv_layers = 1;
  cfg.encoder_kernel = 3;
  cfg.speaker_dim = 4;
  cfg.prenet_dims = {8, 6};
  cfg.attention_dim = 8;
  cfg.decoder_hidden = 16;
  cfg.mel_channels = 8;
  cfg.reduction_factor = 2;
  cfg.postnet_kernel = 3;
  cfg.postnet_channels = 8;
  return cfg;
}

TrainSettings quick_settings() {
  TrainSettings s;
  s.log_interval = 10;
  s.mcd_interval = 20;
  s.mcd_probe_utts = 3;
  return s;
}

TEST(Pretrain, RunsAndLogsAndReducesLoss) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0, 1}, 6, {3, 6}, 11);
  OptimHyper optim;
  optim.batch_size = 2;
  auto ckpt = pretrain(corpus, small_config(), optim, 5, 40, quick_settings());
  EXPECT_EQ(ckpt.total_steps, 40u);
  EXPECT_EQ(ckpt.steps_this_stage, 40u);
  EXPECT_EQ(ckpt.scenario_label, "L1+L2");
  EXPECT_EQ(ckpt.trained_languages, (std::vector<std::string>{"L1", "L2"}));
  ASSERT_GE(ckpt.log.size(), 2u);
  EXPECT_EQ(ckpt.log.front().step, 0u);
  EXPECT_EQ(ckpt.log.back().step, 40u);
  EXPECT_LT(ckpt.log.back().loss, ckpt.log.front().loss);
  EXPECT_TRUE(ckpt.has_optimizer_state);
  EXPECT_TRUE(ckpt.freeze_history.empty());
}

TEST(Pretrain, EmptyCorpusThrows) {
  Corpus corpus;
  corpus.inventory = PhonemeInventory::build({"a"}, 4);
  corpus.mel_channels = 8;
  EXPECT_THROW(pretrain(corpus, small_config(), OptimHyper{}, 1, 10),
               ValidationError);
}

TEST(Pretrain, ZeroStepsThrows) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0}, 2, {3, 5}, 1);
  EXPECT_THROW(pretrain(corpus, small_config(), OptimHyper{}, 1, 0),
               ValidationError);
}

TEST(Pretrain, SameSeedGivesBitIdenticalCheckpoints) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0, 1}, 4, {3, 6}, 13);
  OptimHyper optim;
  optim.batch_size = 2;
  auto a = pretrain(corpus, small_config(), optim, 77, 25, quick_settings());
  auto b = pretrain(corpus, small_config(), optim, 77, 25, quick_settings());
  ASSERT_EQ(a.params.items.size(), b.params.items.size());
  for (std::size_t i = 0; i < a.params.items.size(); ++i)
    EXPECT_TRUE(bit_equal(a.params.items[i].value, b.params.items[i].value))
        << a.params.items[i].name;
  for (const auto& it : a.params.items) {
    EXPECT_TRUE(bit_equal(a.adam.slot(it.name).m, b.adam.slot(it.name).m));
    EXPECT_TRUE(bit_equal(a.adam.slot(it.name).v, b.adam.slot(it.name).v));
  }
}

TEST(Plans, MonolingualFreezesEncoderAndPhonemes) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0, 1}, 3, {3, 5}, 17);
  auto ckpt = pretrain(corpus, small_config(), OptimHyper{}, 3, 5,
                       quick_settings());
  auto [reg, ids] = add_speakers(ckpt.registry, 1, "L1");
  ckpt.registry = reg;
  auto plan = plan_monolingual(ckpt, ids);
  EXPECT_TRUE(plan.tensor_frozen("phoneme_table"));
  for (const auto& it : ckpt.params.items) {
    if (it.group == ParamGroup::kEncoder)
      EXPECT_TRUE(plan.tensor_frozen(it.name)) << it.name;
    if (it.group == ParamGroup::kDecoder)
      EXPECT_FALSE(plan.tensor_frozen(it.name)) << it.name;
  }
  ASSERT_TRUE(plan.rows_frozen("speaker_table"));
  EXPECT_EQ(*plan.rows_frozen("speaker_table"),
            (std::set<std::size_t>{0, 1}));
}

TEST(Plans, CrosslingualFreezesOnlyOldSpeakerRows) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0, 1}, 3, {3, 5}, 19);
  auto ckpt = pretrain(corpus, small_config(), OptimHyper{}, 3, 5,
                       quick_settings());
  auto [reg, ids] = add_speakers(ckpt.registry, 1, "L2");
  ckpt.registry = reg;
  auto plan = plan_crosslingual(ckpt, ids);
  EXPECT_TRUE(plan.frozen_tensors.empty());
  ASSERT_TRUE(plan.rows_frozen("speaker_table"));
  EXPECT_EQ(*plan.rows_frozen("speaker_table"),
            (std::set<std::size_t>{0, 1}));
}

TEST(Plans, UnregisteredSpeakerThrows) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0}, 3, {3, 5}, 23);
  auto ckpt = pretrain(corpus, small_config(), OptimHyper{}, 3, 5,
                       quick_settings());
  EXPECT_THROW(plan_monolingual(ckpt, {9}), ValidationError);
  EXPECT_THROW(plan_crosslingual(ckpt, {9}), ValidationError);
}

TEST(Adapt, MonoKeepsFrozenGroupsBitIdentical) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0, 1}, 5, {3, 6}, 29);
  auto base = pretrain(corpus, small_config(), OptimHyper{}, 31, 30,
                       quick_settings());
  auto adapt_corpus = generate_corpus(spec, {2}, 5, {3, 6}, 37);

  AdaptScenario scenario;
  scenario.kind = AdaptKind::kMono;
  scenario.new_speakers = {{2, "L1"}};
  scenario.steps = 20;
  auto adapted = adapt(base, adapt_corpus, scenario, 41, quick_settings());

  // bold terms of the mono objective stay bit-identical
  EXPECT_TRUE(bit_equal(adapted.params.get("phoneme_table"),
                        base.params.get("phoneme_table")));
  for (const auto& it : base.params.items)
    if (it.group == ParamGroup::kEncoder)
      EXPECT_TRUE(bit_equal(adapted.params.get(it.name), it.value)) << it.name;
  const auto& ws_before = base.params.get("speaker_table");
  const auto& ws_after = adapted.params.get("speaker_table");
  for (std::size_t row = 0; row < 2; ++row)
    for (std::size_t c = 0; c < ws_before.shape[1]; ++c)
      EXPECT_EQ(ws_after.at(row, c), ws_before.at(row, c)) << "row " << row;
  // the new speaker row moved away from its init
  bool moved = false;
  for (std::size_t c = 0; c < ws_before.shape[1]; ++c)
    moved = moved || ws_after.at(2, c) != ws_before.at(2, c);
  EXPECT_TRUE(moved);
  // decoder weights moved
  EXPECT_FALSE(bit_equal(adapted.params.get("dec.proj.w"),
                         base.params.get("dec.proj.w")));
  // registry: old speakers frozen, new trainable
  EXPECT_EQ(adapted.registry.entry(0).status, SpeakerStatus::kFrozen);
  EXPECT_EQ(adapted.registry.entry(1).status, SpeakerStatus::kFrozen);
  EXPECT_EQ(adapted.registry.entry(2).status, SpeakerStatus::kTrainable);
  // freeze history extended, label chained
  ASSERT_EQ(adapted.freeze_history.size(), 1u);
  EXPECT_EQ(adapted.scenario_label, "L1+L22L1");
  EXPECT_EQ(adapted.steps_this_stage, 20u);
  EXPECT_EQ(adapted.total_steps, 50u);
}

TEST(Adapt, MonoEncodeBitIdenticalBeforeAfter) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0, 1}, 5, {3, 6}, 43);
  auto base = pretrain(corpus, small_config(), OptimHyper{}, 47, 25,
                       quick_settings());
  auto adapt_corpus = generate_corpus(spec, {2}, 5, {3, 6}, 53);
  AdaptScenario scenario;
  scenario.kind = AdaptKind::kMono;
  scenario.new_speakers = {{2, "L1"}};
  scenario.steps = 15;
  auto adapted = adapt(base, adapt_corpus, scenario, 59, quick_settings());

  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> x;
    const std::size_t len = 1 + rng.uniform_index(8);
    for (std::size_t i = 0; i < len; ++i)
      x.push_back(rng.uniform_index(6));
    Graph<float> g1, g2;
    auto m1 = encode(g1, insert_params(g1, base.params, false), base.config, x);
    auto m2 =
        encode(g2, insert_params(g2, adapted.params, false), adapted.config, x);
    EXPECT_TRUE(bit_equal(g1.value(m1), g2.value(m2))) << "trial " << trial;
  }
}

TEST(Adapt, CrossLeavesOldSpeakerRowsTouchesPhonemes) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0}, 6, {3, 6}, 67);
  auto base = pretrain(corpus, small_config(), OptimHyper{}, 71, 30,
                       quick_settings());
  auto adapt_corpus = generate_corpus(spec, {1}, 6, {3, 6}, 73);
  AdaptScenario scenario;
  scenario.kind = AdaptKind::kCross;
  scenario.new_speakers = {{1, "L2"}};
  scenario.steps = 20;
  auto adapted = adapt(base, adapt_corpus, scenario, 79, quick_settings());

  const auto& ws_before = base.params.get("speaker_table");
  const auto& ws_after = adapted.params.get("speaker_table");
  for (std::size_t c = 0; c < ws_before.shape[1]; ++c)
    EXPECT_EQ(ws_after.at(0, c), ws_before.at(0, c));
  // cross adaptation trains the phoneme table: novel rows must move
  const auto& wp_before = base.params.get("phoneme_table");
  const auto& wp_after = adapted.params.get("phoneme_table");
  bool novel_moved = false;
  for (auto row : {3, 4, 5})
    for (std::size_t c = 0; c < wp_before.shape[1]; ++c)
      novel_moved = novel_moved ||
                    wp_after.at(row, c) != wp_before.at(row, c);
  EXPECT_TRUE(novel_moved);
  EXPECT_EQ(adapted.scenario_label, "L12L2");
}

TEST(Adapt, RejectsOldSpeakerData) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0, 1}, 4, {3, 6}, 83);
  auto base = pretrain(corpus, small_config(), OptimHyper{}, 89, 10,
                       quick_settings());
  // data for speaker 0 (old) in an adaptation corpus for speaker 2
  auto bad_corpus = generate_corpus(spec, {0}, 2, {3, 6}, 97);
  AdaptScenario scenario;
  scenario.kind = AdaptKind::kMono;
  scenario.new_speakers = {{2, "L1"}};
  scenario.steps = 5;
  EXPECT_THROW(adapt(base, bad_corpus, scenario, 101, quick_settings()),
               ValidationError);
}

TEST(Adapt, MonoWithUntrainedPhonemesRejected) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0}, 4, {3, 6}, 103);  // L1 only
  auto base = pretrain(corpus, small_config(), OptimHyper{}, 107, 10,
                       quick_settings());
  auto l2_corpus = generate_corpus(spec, {1}, 4, {3, 6}, 109);
  AdaptScenario scenario;
  scenario.kind = AdaptKind::kMono;
  scenario.new_speakers = {{1, "L2"}};
  scenario.steps = 5;
  EXPECT_THROW(adapt(base, l2_corpus, scenario, 113, quick_settings()),
               ValidationError);
}

TEST(Adapt, AccumulativeFreezeMonotone) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0}, 5, {3, 6}, 127);
  auto base = pretrain(corpus, small_config(), OptimHyper{}, 131, 20,
                       quick_settings());

  AdaptScenario s1;
  s1.kind = AdaptKind::kCross;
  s1.new_speakers = {{1, "L2"}};
  s1.steps = 10;
  auto stage1 =
      adapt(base, generate_corpus(spec, {1}, 5, {3, 6}, 137), s1, 139,
            quick_settings());

  AdaptScenario s2;
  s2.kind = AdaptKind::kMono;
  s2.new_speakers = {{2, "L1"}};
  s2.steps = 10;
  auto stage2 =
      adapt(stage1, generate_corpus(spec, {2}, 5, {3, 6}, 149), s2, 151,
            quick_settings());

  // a speaker frozen at stage 1 stays frozen at stage 2
  EXPECT_EQ(stage1.registry.entry(0).status, SpeakerStatus::kFrozen);
  EXPECT_EQ(stage2.registry.entry(0).status, SpeakerStatus::kFrozen);
  EXPECT_EQ(stage2.registry.entry(1).status, SpeakerStatus::kFrozen);
  // speaker 0 and 1 rows bit-identical across stage 2
  const auto& before = stage1.params.get("speaker_table");
  const auto& after = stage2.params.get("speaker_table");
  for (std::size_t row = 0; row < 2; ++row)
    for (std::size_t c = 0; c < before.shape[1]; ++c)
      EXPECT_EQ(after.at(row, c), before.at(row, c));
  // freeze history is append-only and grows per stage
  EXPECT_EQ(stage1.freeze_history.size(), 1u);
  EXPECT_EQ(stage2.freeze_history.size(), 2u);
  EXPECT_EQ(stage2.freeze_history[0].label, stage1.freeze_history[0].label);
  EXPECT_EQ(stage2.scenario_label, "L12L22L1");
}

TEST(Adapt, MixOldDataFlagMustMatchArgument) {
  auto spec = world_spec();
  auto corpus = generate_corpus(spec, {0}, 4, {3, 6}, 157);
  auto base = pretrain(corpus, small_config(), OptimHyper{}, 163, 5,
                       quick_settings());
  auto new_corpus = generate_corpus(spec, {1}, 4, {3, 6}, 167);
  AdaptScenario scenario;
  scenario.kind = AdaptKind::kCross;
  scenario.new_speakers = {{1, "L2"}};
  scenario.steps = 5;
  scenario.mix_old_data = true;
  EXPECT_THROW(adapt(base, new_corpus, scenario, 173, quick_settings()),
               ValidationError);
  // with the old corpus supplied, mixing works and old rows stay frozen
  auto adapted =
      adapt(base, new_corpus, scenario, 173, quick_settings(), &corpus);
  const auto& ws_before = base.params.get("speaker_table");
  const auto& ws_after = adapted.params.get("speaker_table");
  for (std::size_t c = 0; c < ws_before.shape[1]; ++c)
    EXPECT_EQ(ws_after.at(0, c), ws_before.at(0, c));
}

}  // namespace
}  // namespace mtts
