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

#ifndef MTTS_SYNTHESIS_HPP_
#define MTTS_SYNTHESIS_HPP_

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "mtts/checkpoint.hpp"
#include "mtts/errors.hpp"
#include "mtts/model.hpp"

namespace mtts {

struct SynthesisRequest {
  std::string ipa_text;
  std::size_t speaker_id = 0;
  std::optional<std::size_t> expert_speaker_id;
  std::size_t max_frames = 2000;
};

struct SynthesisResult {
  Tensor<float> mel;        // Y_post, {T, M}; T is a multiple of r
  Tensor<float> alignment;  // {T_dec, T_in}
  bool stopped = false;     // false when max_frames truncated the decode
};

// Free-running synthesis for a phoneme id sequence. Decoding stops when the
// stop predictor crosses 0.5 or after max_frames frames (stopped = false).
inline SynthesisResult synthesize_ids(const Checkpoint& ckpt,
                                      const std::vector<std::size_t>& phonemes,
                                      std::size_t speaker_id,
                                      std::size_t max_frames = 2000) {
  if (phonemes.empty())
    throw ValidationError("synthesize: empty phoneme sequence");
  for (auto p : phonemes)
    if (p >= ckpt.inventory.size())
      throw ValidationError("synthesize: phoneme index " + std::to_string(p) +
                            " not in inventory");
  if (!ckpt.registry.contains(speaker_id))
    throw ValidationError("synthesize: unknown speaker " +
                          std::to_string(speaker_id));
  const std::size_t r = ckpt.config.reduction_factor;
  if (max_frames < r)
    throw ValidationError("synthesize: max_frames must be >= reduction factor");

  Graph<float> g;
  auto gp = insert_params(g, ckpt.params, false);
  auto memory = encode(g, gp, ckpt.config, phonemes);
  auto cond = condition_on_speaker(g, gp, memory, speaker_id);
  DecodeRequest<float> req;
  req.mode = DecodeMode::kFreeRunning;
  req.max_steps = max_frames / r;
  auto out = decode(g, gp, ckpt.config, cond, req);
  SynthesisResult res;
  res.mel = g.value(out.y_post);
  res.alignment = out.alignment;
  res.stopped = out.stopped;
  return res;
}

inline SynthesisResult synthesize(const Checkpoint& ckpt,
                                  const SynthesisRequest& req) {
  const auto phonemes = ckpt.inventory.encode_text(req.ipa_text);
  return synthesize_ids(ckpt, phonemes, req.speaker_id, req.max_frames);
}

// Two-pass expert-alignment inference: pass 1 runs free-running synthesis
// with the expert speaker and keeps its alignment; pass 2 re-conditions the
// memory on the target speaker and decodes with the expert's alignment rows
// injected verbatim. Pass 2 inherits pass 1's length; its own stop predictor
// is not consulted. The returned alignment is pass 1's, bit for bit.
inline SynthesisResult synthesize_expert_ids(
    const Checkpoint& ckpt, const std::vector<std::size_t>& phonemes,
    std::size_t speaker_id, std::size_t expert_speaker_id,
    std::size_t max_frames = 2000) {
  if (expert_speaker_id == speaker_id)
    throw ValidationError("expert speaker must differ from target speaker");
  if (!ckpt.registry.contains(expert_speaker_id))
    throw ValidationError("synthesize: unknown expert speaker " +
                          std::to_string(expert_speaker_id));
  SynthesisResult pass1 =
      synthesize_ids(ckpt, phonemes, expert_speaker_id, max_frames);

  Graph<float> g;
  auto gp = insert_params(g, ckpt.params, false);
  auto memory = encode(g, gp, ckpt.config, phonemes);
  auto cond = condition_on_speaker(g, gp, memory, speaker_id);
  DecodeRequest<float> req;
  req.mode = DecodeMode::kFreeRunning;
  req.max_steps = pass1.alignment.shape[0];
  req.fixed_alignment = &pass1.alignment;
  auto out = decode(g, gp, ckpt.config, cond, req);
  SynthesisResult res;
  res.mel = g.value(out.y_post);
  res.alignment = out.alignment;
  res.stopped = pass1.stopped;
  return res;
}

inline SynthesisResult synthesize_expert(const Checkpoint& ckpt,
                                         const SynthesisRequest& req) {
  if (!req.expert_speaker_id)
    throw ValidationError("expert synthesis needs an expert speaker id");
  const auto phonemes = ckpt.inventory.encode_text(req.ipa_text);
  return synthesize_expert_ids(ckpt, phonemes, req.speaker_id,
                               *req.expert_speaker_id, req.max_frames);
}

// Alignment matrix as CSV, one decoder step per row.
inline std::string alignment_to_csv(const Tensor<float>& alignment) {
  std::string out;
  for (std::size_t i = 0; i < alignment.shape[0]; ++i) {
    for (std::size_t j = 0; j < alignment.shape[1]; ++j) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%.9g", double(alignment.at(i, j)));
      out += buf;
      out += j + 1 < alignment.shape[1] ? "," : "";
    }
    out += "\n";
  }
  return out;
}

}  // namespace mtts

#endif  // MTTS_SYNTHESIS_HPP_
