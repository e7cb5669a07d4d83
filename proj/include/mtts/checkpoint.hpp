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

#ifndef MTTS_CHECKPOINT_HPP_
#define MTTS_CHECKPOINT_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtts/corpus.hpp"
#include "mtts/errors.hpp"
#include "mtts/inventory.hpp"
#include "mtts/io.hpp"
#include "mtts/model.hpp"
#include "mtts/optimizer.hpp"

namespace mtts {

struct OptimHyper {
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 4;
  double grad_clip_norm = 5.0;   // 0 disables clipping
  double adapt_lr_scale = 0.1;   // fine-tuning runs at lr * scale
  bool cosine_decay = false;     // anneal lr to lr_floor_scale * lr over a run
  double lr_floor_scale = 0.1;

  AdamHyper adam(double lr_scale = 1.0) const {
    return AdamHyper{learning_rate * lr_scale, beta1, beta2, eps};
  }

  // Learning rate at `step` of a `total`-step run.
  double scheduled_lr(double base_lr, std::size_t step, std::size_t total) const {
    if (!cosine_decay || total <= 1) return base_lr;
    const double floor = base_lr * lr_floor_scale;
    const double t = double(step - 1) / double(total - 1);
    const double pi = 3.14159265358979323846;
    return floor + 0.5 * (base_lr - floor) * (1.0 + std::cos(pi * t));
  }

  bool operator==(const OptimHyper&) const = default;
};

struct TrainLogEntry {
  std::uint64_t step = 0;
  double loss = 0.0;  // teacher-forced Eq.-style mel loss, stop term excluded
  double mcd = std::numeric_limits<double>::quiet_NaN();  // probe MCD if taken
};

struct FreezeRecord {
  std::string label;  // e.g. "mono:L2" or "cross:KO"
  FreezePlan plan;
};

// Everything needed to resume or analyze a run. Loading reproduces forward
// outputs bit-exactly; the freeze history is append-only.
struct Checkpoint {
  int version = kCheckpointFormatVersion;
  ModelConfig config;
  OptimHyper optim;
  PhonemeInventory inventory;
  SpeakerRegistry registry;
  std::vector<LanguageDef> languages;
  std::vector<std::string> trained_languages;  // data seen so far, in order
  ModelParams<float> params;
  Adam<float> adam;
  bool has_optimizer_state = false;
  bool optimizer_reinitialized = false;  // set when loaded without state
  std::vector<TrainLogEntry> log;
  std::vector<FreezeRecord> freeze_history;
  std::string scenario_label;
  std::uint64_t total_steps = 0;
  std::uint64_t steps_this_stage = 0;
  std::uint64_t seed = 0;

  const LanguageDef& language(const std::string& id) const {
    for (const auto& l : languages)
      if (l.language_id == id) return l;
    throw ValidationError("checkpoint has no language " + id);
  }

  bool has_language(const std::string& id) const {
    for (const auto& l : languages)
      if (l.language_id == id) return true;
    return false;
  }

  // Union of phoneme indices across languages listed in trained_languages.
  std::set<std::size_t> trained_phonemes() const {
    std::set<std::size_t> out;
    for (const auto& id : trained_languages) {
      const auto& l = language(id);
      out.insert(l.phoneme_subset.begin(), l.phoneme_subset.end());
    }
    return out;
  }
};

// ---- JSON round trips for config blobs ----

namespace detail {

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"embedding_dim", c.embedding_dim},
          {"encoder_conv_layers", c.encoder_conv_layers},
          {"encoder_kernel", c.encoder_kernel},
          {"speaker_dim", c.speaker_dim},
          {"prenet_dims", c.prenet_dims},
          {"attention_dim", c.attention_dim},
          {"decoder_hidden", c.decoder_hidden},
          {"mel_channels", c.mel_channels},
          {"reduction_factor", c.reduction_factor},
          {"stop_loss_weight", c.stop_loss_weight},
          {"stop_pos_weight", c.stop_pos_weight},
          {"postnet_kernel", c.postnet_kernel},
          {"postnet_channels", c.postnet_channels},
          {"prenet_dropout", c.prenet_dropout}};
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known) ok = ok || it.key() == k;
    if (!ok)
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

inline ModelConfig model_config_from_json(const nlohmann::json& j,
                                          bool strict_keys) {
  ModelConfig c;
  if (strict_keys)
    reject_unknown_keys(
        j,
        {"embedding_dim", "encoder_conv_layers", "encoder_kernel",
         "speaker_dim", "prenet_dims", "attention_dim", "decoder_hidden",
         "mel_channels", "reduction_factor", "stop_loss_weight",
         "stop_pos_weight", "postnet_kernel", "postnet_channels",
         "prenet_dropout"},
        "model config");
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.encoder_conv_layers = j.value("encoder_conv_layers", c.encoder_conv_layers);
  c.encoder_kernel = j.value("encoder_kernel", c.encoder_kernel);
  c.speaker_dim = j.value("speaker_dim", c.speaker_dim);
  c.prenet_dims = j.value("prenet_dims", c.prenet_dims);
  c.attention_dim = j.value("attention_dim", c.attention_dim);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  c.mel_channels = j.value("mel_channels", c.mel_channels);
  c.reduction_factor = j.value("reduction_factor", c.reduction_factor);
  c.stop_loss_weight = j.value("stop_loss_weight", c.stop_loss_weight);
  c.stop_pos_weight = j.value("stop_pos_weight", c.stop_pos_weight);
  c.postnet_kernel = j.value("postnet_kernel", c.postnet_kernel);
  c.postnet_channels = j.value("postnet_channels", c.postnet_channels);
  c.prenet_dropout = j.value("prenet_dropout", c.prenet_dropout);
  c.validate();
  return c;
}

inline nlohmann::json optim_to_json(const OptimHyper& o) {
  return {{"learning_rate", o.learning_rate}, {"beta1", o.beta1},
          {"beta2", o.beta2},                 {"eps", o.eps},
          {"batch_size", o.batch_size},       {"grad_clip_norm", o.grad_clip_norm},
          {"adapt_lr_scale", o.adapt_lr_scale},
          {"cosine_decay", o.cosine_decay},
          {"lr_floor_scale", o.lr_floor_scale}};
}

inline OptimHyper optim_from_json(const nlohmann::json& j, bool strict_keys) {
  OptimHyper o;
  if (strict_keys)
    reject_unknown_keys(j,
                        {"learning_rate", "beta1", "beta2", "eps", "batch_size",
                         "grad_clip_norm", "adapt_lr_scale", "cosine_decay",
                         "lr_floor_scale"},
                        "optimizer config");
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.beta1 = j.value("beta1", o.beta1);
  o.beta2 = j.value("beta2", o.beta2);
  o.eps = j.value("eps", o.eps);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.grad_clip_norm = j.value("grad_clip_norm", o.grad_clip_norm);
  o.adapt_lr_scale = j.value("adapt_lr_scale", o.adapt_lr_scale);
  o.cosine_decay = j.value("cosine_decay", o.cosine_decay);
  o.lr_floor_scale = j.value("lr_floor_scale", o.lr_floor_scale);
  if (o.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(o.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  return o;
}

inline nlohmann::json freeze_plan_to_json(const FreezePlan& p) {
  nlohmann::json j;
  j["frozen_tensors"] = std::vector<std::string>(p.frozen_tensors.begin(),
                                                 p.frozen_tensors.end());
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [name, set] : p.frozen_rows)
    rows[name] = std::vector<std::size_t>(set.begin(), set.end());
  j["frozen_rows"] = rows;
  return j;
}

inline FreezePlan freeze_plan_from_json(const nlohmann::json& j) {
  FreezePlan p;
  for (const auto& n : j.at("frozen_tensors"))
    p.frozen_tensors.insert(n.get<std::string>());
  for (auto it = j.at("frozen_rows").begin(); it != j.at("frozen_rows").end();
       ++it)
    for (const auto& r : it.value())
      p.frozen_rows[it.key()].insert(r.get<std::size_t>());
  return p;
}

inline void append_tensor_blob(std::string& blob, nlohmann::json& index,
                               const std::string& name, const std::string& group,
                               const Tensor<float>& t) {
  std::string bytes;
  bytes.reserve(t.numel() * 4);
  for (float v : t.data) put_f32le(bytes, v);
  nlohmann::json e;
  e["name"] = name;
  e["group"] = group;
  e["shape"] = t.shape;
  e["offset"] = blob.size();
  e["bytes"] = bytes.size();
  e["fnv64"] = hash_hex(fnv1a64(bytes.data(), bytes.size()));
  index.push_back(e);
  blob += bytes;
}

inline Tensor<float> read_tensor_blob(const std::string& blob,
                                      const nlohmann::json& e,
                                      const std::string& dir) {
  const std::size_t offset = e.at("offset").get<std::size_t>();
  const std::size_t bytes = e.at("bytes").get<std::size_t>();
  const std::string name = e.at("name").get<std::string>();
  if (offset + bytes > blob.size())
    throw IoError("truncated-tensor: " + name + " in " + dir);
  const std::string got =
      hash_hex(fnv1a64(blob.data() + offset, bytes));
  if (got != e.at("fnv64").get<std::string>())
    throw IoError("checksum mismatch for tensor " + name + " in " + dir);
  Shape shape = e.at("shape").get<Shape>();
  if (shape_numel(shape) * 4 != bytes)
    throw IoError("tensor size mismatch for " + name + " in " + dir);
  Tensor<float> t(shape);
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data() + offset);
  for (std::size_t i = 0; i < t.numel(); ++i)
    t.data[i] = get_f32le(p + 4 * i);
  return t;
}

}  // namespace detail

// Checkpoint directory layout: manifest.json holding everything structured
// plus a tensor index (name/shape/offset/checksum), and tensors.bin holding
// the concatenated f32 little-endian blobs, parameters first, then optimizer
// moments when present.
inline void save_checkpoint(const Checkpoint& ckpt,
                            const std::filesystem::path& dir) {
  ensure_directory(dir);
  nlohmann::json manifest;
  manifest["format"] = "mtts-checkpoint";
  manifest["version"] = ckpt.version;
  manifest["tool"] = kToolVersion;
  manifest["model"] = detail::model_config_to_json(ckpt.config);
  manifest["optim"] = detail::optim_to_json(ckpt.optim);
  manifest["inventory"] = detail::inventory_to_json(ckpt.inventory);
  manifest["registry_capacity"] = ckpt.registry.capacity();
  auto regs = nlohmann::json::array();
  for (const auto& e : ckpt.registry.entries())
    regs.push_back({{"id", e.id},
                    {"language", e.language_id},
                    {"status", e.status == SpeakerStatus::kFrozen
                                   ? "frozen"
                                   : "trainable"}});
  manifest["speakers"] = regs;
  manifest["languages"] = detail::languages_to_json(ckpt.languages);
  manifest["trained_languages"] = ckpt.trained_languages;
  manifest["scenario_label"] = ckpt.scenario_label;
  manifest["total_steps"] = ckpt.total_steps;
  manifest["steps_this_stage"] = ckpt.steps_this_stage;
  manifest["seed"] = ckpt.seed;
  auto logj = nlohmann::json::array();
  for (const auto& e : ckpt.log) {
    nlohmann::json je = {{"step", e.step}, {"loss", e.loss}};
    if (!std::isnan(e.mcd)) je["mcd"] = e.mcd;
    logj.push_back(je);
  }
  manifest["log"] = logj;
  auto fh = nlohmann::json::array();
  for (const auto& rec : ckpt.freeze_history) {
    nlohmann::json jr = detail::freeze_plan_to_json(rec.plan);
    jr["label"] = rec.label;
    fh.push_back(jr);
  }
  manifest["freeze_history"] = fh;

  std::string blob;
  auto index = nlohmann::json::array();
  for (const auto& it : ckpt.params.items)
    detail::append_tensor_blob(blob, index, it.name,
                               param_group_name(it.group), it.value);
  manifest["has_optimizer_state"] = ckpt.has_optimizer_state;
  if (ckpt.has_optimizer_state) {
    manifest["adam_step_count"] = ckpt.adam.step_count();
    for (const auto& it : ckpt.params.items) {
      const auto& slot = ckpt.adam.slot(it.name);
      detail::append_tensor_blob(blob, index, "adam.m." + it.name, "optimizer",
                                 slot.m);
      detail::append_tensor_blob(blob, index, "adam.v." + it.name, "optimizer",
                                 slot.v);
    }
  }
  manifest["tensors"] = index;
  write_file_bytes(dir / "tensors.bin", blob);
  write_file_bytes(dir / "manifest.json", manifest.dump(2, ' ', true));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file_bytes(dir / "manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed checkpoint manifest in " + dir.string() + ": " +
                  e.what());
  }
  try {
    if (manifest.at("format").get<std::string>() != "mtts-checkpoint")
      throw IoError("not a checkpoint directory: " + dir.string());
    Checkpoint ckpt;
    ckpt.version = manifest.at("version").get<int>();
    if (ckpt.version != kCheckpointFormatVersion)
      throw IoError("checkpoint version mismatch: file has " +
                    std::to_string(ckpt.version) + ", tool expects " +
                    std::to_string(kCheckpointFormatVersion));
    ckpt.config = detail::model_config_from_json(manifest.at("model"), false);
    ckpt.optim = detail::optim_from_json(manifest.at("optim"), false);
    ckpt.inventory = detail::inventory_from_json(manifest.at("inventory"));
    ckpt.registry =
        SpeakerRegistry(manifest.at("registry_capacity").get<std::size_t>());
    for (const auto& js : manifest.at("speakers")) {
      SpeakerEntry e;
      e.id = js.at("id").get<std::size_t>();
      e.language_id = js.at("language").get<std::string>();
      e.status = js.at("status").get<std::string>() == "frozen"
                     ? SpeakerStatus::kFrozen
                     : SpeakerStatus::kTrainable;
      ckpt.registry.push_entry(std::move(e));
    }
    ckpt.languages = detail::languages_from_json(manifest.at("languages"));
    for (const auto& l : manifest.at("trained_languages"))
      ckpt.trained_languages.push_back(l.get<std::string>());
    ckpt.scenario_label = manifest.at("scenario_label").get<std::string>();
    ckpt.total_steps = manifest.at("total_steps").get<std::uint64_t>();
    ckpt.steps_this_stage =
        manifest.at("steps_this_stage").get<std::uint64_t>();
    ckpt.seed = manifest.at("seed").get<std::uint64_t>();
    for (const auto& je : manifest.at("log")) {
      TrainLogEntry e;
      e.step = je.at("step").get<std::uint64_t>();
      e.loss = je.at("loss").get<double>();
      if (je.contains("mcd")) e.mcd = je.at("mcd").get<double>();
      ckpt.log.push_back(e);
    }
    for (const auto& jr : manifest.at("freeze_history")) {
      FreezeRecord rec;
      rec.label = jr.at("label").get<std::string>();
      rec.plan = detail::freeze_plan_from_json(jr);
      ckpt.freeze_history.push_back(std::move(rec));
    }

    const std::string blob = read_file_bytes(dir / "tensors.bin");
    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& e : manifest.at("tensors"))
      by_name[e.at("name").get<std::string>()] = &e;

    // instantiate parameters with the recorded shapes, in index order
    for (const auto& e : manifest.at("tensors")) {
      const std::string name = e.at("name").get<std::string>();
      const std::string group = e.at("group").get<std::string>();
      if (group == "optimizer") continue;
      ParamGroup g;
      if (group == "phoneme_table") g = ParamGroup::kPhonemeTable;
      else if (group == "speaker_table") g = ParamGroup::kSpeakerTable;
      else if (group == "encoder") g = ParamGroup::kEncoder;
      else if (group == "decoder") g = ParamGroup::kDecoder;
      else throw IoError("unknown tensor group \"" + group + "\" in manifest");
      ckpt.params.add(name, g, detail::read_tensor_blob(blob, e, dir.string()));
    }

    ckpt.has_optimizer_state = manifest.value("has_optimizer_state", false);
    std::vector<std::string> names;
    std::vector<Shape> shapes;
    for (const auto& it : ckpt.params.items) {
      names.push_back(it.name);
      shapes.push_back(it.value.shape);
    }
    ckpt.adam.init(names, shapes);
    if (ckpt.has_optimizer_state) {
      ckpt.adam.set_step_count(
          manifest.at("adam_step_count").get<std::uint64_t>());
      for (const auto& it : ckpt.params.items) {
        auto need = [&](const std::string& n) -> const nlohmann::json& {
          auto f = by_name.find(n);
          if (f == by_name.end())
            throw IoError("missing optimizer tensor " + n + " in " +
                          dir.string());
          return *f->second;
        };
        ckpt.adam.slot(it.name).m = detail::read_tensor_blob(
            blob, need("adam.m." + it.name), dir.string());
        ckpt.adam.slot(it.name).v = detail::read_tensor_blob(
            blob, need("adam.v." + it.name), dir.string());
      }
    } else {
      ckpt.optimizer_reinitialized = true;
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint manifest in " + dir.string() + ": " +
                  e.what());
  }
}

}  // namespace mtts

#endif  // MTTS_CHECKPOINT_HPP_
