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

#include <filesystem>

#include "mtts/checkpoint.hpp"
#include "mtts/synthesis.hpp"

namespace mtts {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("mtts_ckpt_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Checkpoint make_checkpoint(std::uint64_t seed = 21) {
  Checkpoint ckpt;
  ckpt.config.embedding_dim = 8;
  ckpt.config.encoder_conv_layers = 1;
  ckpt.config.encoder_kernel = 3;
  ckpt.config.speaker_dim = 4;
  ckpt.config.prenet_dims = {8, 6};
  ckpt.config.attention_dim = 8;
  ckpt.config.decoder_hidden = 16;
  ckpt.config.mel_channels = 8;
  ckpt.inventory = PhonemeInventory::build({"a", "b", "ʃ"}, 16);
  ckpt.registry = SpeakerRegistry(8);
  ckpt.registry.push_entry({0, "L1", SpeakerStatus::kTrainable});
  ckpt.registry.push_entry({1, "L2", SpeakerStatus::kFrozen});
  ckpt.languages = {{"L1", {0, 1}}, {"L2", {2}}};
  ckpt.trained_languages = {"L1"};
  ckpt.scenario_label = "L1";
  ckpt.seed = seed;
  ckpt.total_steps = 123;
  ckpt.steps_this_stage = 23;
  Rng rng(seed);
  ckpt.params = init_params<float>(ckpt.config, 16, 8, rng);
  std::vector<std::string> names;
  std::vector<Shape> shapes;
  for (const auto& it : ckpt.params.items) {
    names.push_back(it.name);
    shapes.push_back(it.value.shape);
  }
  ckpt.adam.init(names, shapes);
  // non-trivial optimizer state
  ckpt.adam.set_step_count(42);
  ckpt.adam.slot("dec.proj.w").m.data[3] = 0.25f;
  ckpt.adam.slot("dec.proj.w").v.data[3] = 0.5f;
  ckpt.has_optimizer_state = true;
  ckpt.log.push_back({0, 1.5, 21.0});
  ckpt.log.push_back({100, 0.7, std::numeric_limits<double>::quiet_NaN()});
  FreezePlan plan;
  plan.frozen_tensors.insert("phoneme_table");
  plan.frozen_rows["speaker_table"] = {0};
  ckpt.freeze_history.push_back({"mono:L1", plan});
  return ckpt;
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  const auto dir = temp_dir("roundtrip");
  auto ckpt = make_checkpoint();
  save_checkpoint(ckpt, dir);
  auto back = load_checkpoint(dir);

  EXPECT_EQ(back.config, ckpt.config);
  EXPECT_TRUE(back.inventory == ckpt.inventory);
  EXPECT_TRUE(back.registry == ckpt.registry);
  EXPECT_EQ(back.trained_languages, ckpt.trained_languages);
  EXPECT_EQ(back.scenario_label, ckpt.scenario_label);
  EXPECT_EQ(back.total_steps, ckpt.total_steps);
  EXPECT_EQ(back.steps_this_stage, ckpt.steps_this_stage);
  ASSERT_EQ(back.params.items.size(), ckpt.params.items.size());
  for (std::size_t i = 0; i < ckpt.params.items.size(); ++i) {
    EXPECT_EQ(back.params.items[i].name, ckpt.params.items[i].name);
    EXPECT_EQ(back.params.items[i].group, ckpt.params.items[i].group);
    EXPECT_TRUE(
        bit_equal(back.params.items[i].value, ckpt.params.items[i].value));
  }
  EXPECT_TRUE(back.has_optimizer_state);
  EXPECT_FALSE(back.optimizer_reinitialized);
  EXPECT_EQ(back.adam.step_count(), 42u);
  EXPECT_TRUE(bit_equal(back.adam.slot("dec.proj.w").m,
                        ckpt.adam.slot("dec.proj.w").m));
  ASSERT_EQ(back.log.size(), 2u);
  EXPECT_EQ(back.log[0].step, 0u);
  EXPECT_DOUBLE_EQ(back.log[0].loss, 1.5);
  EXPECT_DOUBLE_EQ(back.log[0].mcd, 21.0);
  EXPECT_TRUE(std::isnan(back.log[1].mcd));
  ASSERT_EQ(back.freeze_history.size(), 1u);
  EXPECT_EQ(back.freeze_history[0].label, "mono:L1");
  EXPECT_TRUE(back.freeze_history[0].plan.tensor_frozen("phoneme_table"));
  EXPECT_EQ(back.freeze_history[0].plan.rows_frozen("speaker_table")->count(0),
            1u);
}

TEST(Checkpoint, ForwardOutputsBitExactAfterReload) {
  const auto dir = temp_dir("forward");
  auto ckpt = make_checkpoint();
  save_checkpoint(ckpt, dir);
  auto back = load_checkpoint(dir);
  auto a = synthesize_ids(ckpt, {0, 1, 2}, 0, 64);
  auto b = synthesize_ids(back, {0, 1, 2}, 0, 64);
  EXPECT_TRUE(bit_equal(a.mel, b.mel));
  EXPECT_TRUE(bit_equal(a.alignment, b.alignment));
  EXPECT_EQ(a.stopped, b.stopped);
}

TEST(Checkpoint, CorruptedBlobFailsChecksum) {
  const auto dir = temp_dir("corrupt");
  auto ckpt = make_checkpoint();
  save_checkpoint(ckpt, dir);
  auto bytes = read_file_bytes(dir / "tensors.bin");
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x01);
  write_file_bytes(dir / "tensors.bin", bytes);
  try {
    load_checkpoint(dir);
    FAIL() << "expected checksum failure";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum mismatch"),
              std::string::npos);
  }
}

TEST(Checkpoint, VersionMismatchRejected) {
  const auto dir = temp_dir("version");
  auto ckpt = make_checkpoint();
  save_checkpoint(ckpt, dir);
  auto manifest = nlohmann::json::parse(read_file_bytes(dir / "manifest.json"));
  manifest["version"] = 999;
  write_file_bytes(dir / "manifest.json", manifest.dump(2));
  try {
    load_checkpoint(dir);
    FAIL() << "expected version error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("version mismatch"),
              std::string::npos);
  }
}

TEST(Checkpoint, MissingOptimizerStateSetsFlag) {
  const auto dir = temp_dir("noopt");
  auto ckpt = make_checkpoint();
  ckpt.has_optimizer_state = false;
  save_checkpoint(ckpt, dir);
  auto back = load_checkpoint(dir);
  EXPECT_FALSE(back.has_optimizer_state);
  EXPECT_TRUE(back.optimizer_reinitialized);
  EXPECT_EQ(back.adam.step_count(), 0u);
  // parameters still intact
  EXPECT_TRUE(bit_equal(back.params.get("dec.proj.w"),
                        ckpt.params.get("dec.proj.w")));
}

TEST(Checkpoint, TruncatedBlobDetected) {
  const auto dir = temp_dir("trunc");
  auto ckpt = make_checkpoint();
  save_checkpoint(ckpt, dir);
  auto bytes = read_file_bytes(dir / "tensors.bin");
  bytes.resize(bytes.size() / 2);
  write_file_bytes(dir / "tensors.bin", bytes);
  EXPECT_THROW(load_checkpoint(dir), IoError);
}

}  // namespace
}  // namespace mtts
