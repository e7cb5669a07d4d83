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

#ifndef MTTS_MODEL_HPP_
#define MTTS_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtts/errors.hpp"
#include "mtts/graph.hpp"
#include "mtts/rng.hpp"
#include "mtts/tensor.hpp"

namespace mtts {

// Attention-based sequence-to-sequence mel synthesizer: phoneme and speaker
// lookup tables, a convolutional + bidirectional-LSTM text encoder with a
// residual connection from the embedded input to the encoder output, forward
// attention, and an autoregressive decoder emitting r mel frames per step
// with a stop predictor and a convolutional postnet.

struct ModelConfig {
  std::size_t embedding_dim = 32;       // E; encoder output dim equals E
  std::size_t encoder_conv_layers = 2;
  std::size_t encoder_kernel = 5;
  std::size_t speaker_dim = 8;          // D_s
  std::vector<std::size_t> prenet_dims = {32, 16};
  std::size_t attention_dim = 32;
  std::size_t decoder_hidden = 64;      // H
  std::size_t mel_channels = 16;        // M
  std::size_t reduction_factor = 2;     // r, frames per decoder step
  double stop_loss_weight = 0.5;        // lambda_stop
  double stop_pos_weight = 6.0;         // class weight inside the stop BCE
  std::size_t postnet_kernel = 5;
  std::size_t postnet_channels = 32;
  double prenet_dropout = 0.0;          // off by default: deterministic runs

  void validate() const {
    if (embedding_dim < 2 || embedding_dim % 2 != 0)
      throw ConfigError("embedding_dim must be even and >= 2 (bidirectional "
                        "encoder halves)");
    if (mel_channels < 1 || decoder_hidden < 1 || attention_dim < 1 ||
        reduction_factor < 1 || encoder_conv_layers < 1)
      throw ConfigError("model dims must be >= 1");
    if (prenet_dims.empty())
      throw ConfigError("prenet needs at least one layer");
    if (encoder_kernel % 2 == 0 || postnet_kernel % 2 == 0)
      throw ConfigError("conv kernels must be odd for same-length output");
    if (prenet_dropout < 0.0 || prenet_dropout >= 1.0)
      throw ConfigError("prenet_dropout must be in [0, 1)");
  }

  std::size_t encoder_lstm_hidden() const { return embedding_dim / 2; }
  std::size_t context_dim() const { return embedding_dim + speaker_dim; }
  std::size_t prenet_out() const { return prenet_dims.back(); }

  bool operator==(const ModelConfig&) const = default;
};

enum class ParamGroup : std::uint8_t {
  kPhonemeTable = 0,  // W_p
  kSpeakerTable = 1,  // W_s
  kEncoder = 2,       // W_e
  kDecoder = 3,       // W_d: attention + decoder + postnet
};

inline const char* param_group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kPhonemeTable: return "phoneme_table";
    case ParamGroup::kSpeakerTable: return "speaker_table";
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kDecoder: return "decoder";
  }
  return "?";
}

template <class Real>
struct NamedParam {
  std::string name;
  ParamGroup group;
  Tensor<Real> value;
};

// All trainable tensors, in a fixed registration order that also fixes the
// RNG draw order at init and the layout of checkpoint blobs.
template <class Real>
struct ModelParams {
  std::vector<NamedParam<Real>> items;
  std::map<std::string, std::size_t> index;

  Tensor<Real>& get(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end())
      throw ValidationError("unknown parameter: " + name);
    return items[it->second].value;
  }
  const Tensor<Real>& get(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end())
      throw ValidationError("unknown parameter: " + name);
    return items[it->second].value;
  }
  bool has(const std::string& name) const { return index.count(name) > 0; }

  std::vector<std::string> names_in_group(ParamGroup g) const {
    std::vector<std::string> out;
    for (const auto& it : items)
      if (it.group == g) out.push_back(it.name);
    return out;
  }

  void add(std::string name, ParamGroup group, Tensor<Real> value) {
    if (index.count(name))
      throw ValidationError("duplicate parameter: " + name);
    index[name] = items.size();
    items.push_back(NamedParam<Real>{std::move(name), group, std::move(value)});
  }

  template <class Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out;
    for (const auto& it : items)
      out.add(it.name, it.group, it.value.template cast<Other>());
    return out;
  }
};

// Gaussian fan-in init for weights, zeros for biases, +1 LSTM forget-gate
// bias, sigma 0.1 for both lookup tables (every row, used or not, so rows
// for future languages and speakers already exist).
template <class Real>
ModelParams<Real> init_params(const ModelConfig& cfg, std::size_t phoneme_rows,
                              std::size_t speaker_rows, Rng& rng) {
  cfg.validate();
  ModelParams<Real> p;
  const std::size_t e = cfg.embedding_dim;
  const std::size_t henc = cfg.encoder_lstm_hidden();
  const std::size_t h = cfg.decoder_hidden;
  const std::size_t a = cfg.attention_dim;
  const std::size_t m = cfg.mel_channels;
  const std::size_t ctx = cfg.context_dim();
  const std::size_t r = cfg.reduction_factor;

  auto weight = [&](Shape s) {
    std::size_t fan_in = s.size() == 3 ? s[0] * s[1] : s[0];
    return Tensor<Real>::gaussian(std::move(s), rng,
                                  1.0 / std::sqrt(double(fan_in)));
  };
  auto lstm_bias = [&](std::size_t hid) {
    Tensor<Real> b({4 * hid});
    for (std::size_t i = hid; i < 2 * hid; ++i) b.data[i] = Real(1);
    return b;
  };

  p.add("phoneme_table", ParamGroup::kPhonemeTable,
        Tensor<Real>::gaussian({phoneme_rows, e}, rng, 0.1));
  p.add("speaker_table", ParamGroup::kSpeakerTable,
        Tensor<Real>::gaussian({speaker_rows, cfg.speaker_dim}, rng, 0.1));

  for (std::size_t l = 0; l < cfg.encoder_conv_layers; ++l) {
    const std::string base = "enc.conv" + std::to_string(l);
    p.add(base + ".w", ParamGroup::kEncoder, weight({cfg.encoder_kernel, e, e}));
    p.add(base + ".b", ParamGroup::kEncoder, Tensor<Real>::zeros({e}));
  }
  for (const char* dir : {"fw", "bw"}) {
    const std::string base = std::string("enc.lstm_") + dir;
    p.add(base + ".w_ih", ParamGroup::kEncoder, weight({e, 4 * henc}));
    p.add(base + ".w_hh", ParamGroup::kEncoder, weight({henc, 4 * henc}));
    p.add(base + ".b", ParamGroup::kEncoder, lstm_bias(henc));
  }

  const std::size_t pn_out = cfg.prenet_out();
  p.add("att.query.w", ParamGroup::kDecoder, weight({h + pn_out, a}));
  p.add("att.memory.w", ParamGroup::kDecoder, weight({ctx, a}));
  p.add("att.b", ParamGroup::kDecoder, Tensor<Real>::zeros({a}));
  p.add("att.v", ParamGroup::kDecoder, weight({a, 1}));

  std::size_t prev = m;
  for (std::size_t l = 0; l < cfg.prenet_dims.size(); ++l) {
    const std::string base = "dec.prenet" + std::to_string(l);
    p.add(base + ".w", ParamGroup::kDecoder, weight({prev, cfg.prenet_dims[l]}));
    // small nonzero bias: the go frame is all zeros, so a zero bias would
    // park the prenet pre-activation exactly on the relu kink
    p.add(base + ".b", ParamGroup::kDecoder,
          Tensor<Real>::gaussian({cfg.prenet_dims[l]}, rng, 0.05));
    prev = cfg.prenet_dims[l];
  }
  p.add("dec.lstm.w_ih", ParamGroup::kDecoder, weight({pn_out + ctx, 4 * h}));
  p.add("dec.lstm.w_hh", ParamGroup::kDecoder, weight({h, 4 * h}));
  p.add("dec.lstm.b", ParamGroup::kDecoder, lstm_bias(h));
  p.add("dec.proj.w", ParamGroup::kDecoder, weight({h + ctx, r * m}));
  p.add("dec.proj.b", ParamGroup::kDecoder, Tensor<Real>::zeros({r * m}));
  p.add("dec.stop.w", ParamGroup::kDecoder, weight({h + ctx, 1}));
  p.add("dec.stop.b", ParamGroup::kDecoder, Tensor<Real>::zeros({1}));
  p.add("post.conv0.w", ParamGroup::kDecoder,
        weight({cfg.postnet_kernel, m, cfg.postnet_channels}));
  p.add("post.conv0.b", ParamGroup::kDecoder,
        Tensor<Real>::zeros({cfg.postnet_channels}));
  p.add("post.conv1.w", ParamGroup::kDecoder,
        weight({cfg.postnet_kernel, cfg.postnet_channels, m}));
  p.add("post.conv1.b", ParamGroup::kDecoder, Tensor<Real>::zeros({m}));
  return p;
}

// Leaf ids of all parameters inside one graph, parallel to params.items.
template <class Real>
struct GraphParams {
  std::vector<typename Graph<Real>::Id> ids;
  const ModelParams<Real>* params = nullptr;

  typename Graph<Real>::Id of(const std::string& name) const {
    return ids[params->index.at(name)];
  }
};

template <class Real>
GraphParams<Real> insert_params(Graph<Real>& g, const ModelParams<Real>& params,
                                bool requires_grad) {
  GraphParams<Real> gp;
  gp.params = &params;
  gp.ids.reserve(params.items.size());
  for (const auto& it : params.items)
    gp.ids.push_back(g.input(it.value, requires_grad));
  return gp;
}

// ---- encoder ----

// memory = EncoderStack(Embed(X)) + Embed(X); the residual add requires the
// stack to preserve the embedding width E.
template <class Real>
typename Graph<Real>::Id encode(Graph<Real>& g, const GraphParams<Real>& gp,
                                const ModelConfig& cfg,
                                const std::vector<std::size_t>& phonemes) {
  if (phonemes.empty())
    throw ValidationError("encode: empty phoneme sequence");
  auto emb = g.embedding(gp.of("phoneme_table"), phonemes);
  auto hcur = emb;
  for (std::size_t l = 0; l < cfg.encoder_conv_layers; ++l) {
    const std::string base = "enc.conv" + std::to_string(l);
    hcur = g.relu(g.add_row(g.conv1d(hcur, gp.of(base + ".w")),
                            gp.of(base + ".b")));
  }
  const std::size_t t_in = phonemes.size();
  const std::size_t hid = cfg.encoder_lstm_hidden();
  auto zero_state = g.constant(Tensor<Real>::zeros({1, hid}));
  std::vector<typename Graph<Real>::Id> fw_rows(t_in), bw_rows(t_in);
  auto run_dir = [&](const std::string& base, bool forward,
                     std::vector<typename Graph<Real>::Id>& rows) {
    auto h = zero_state;
    auto c = zero_state;
    for (std::size_t k = 0; k < t_in; ++k) {
      const std::size_t t = forward ? k : t_in - 1 - k;
      auto x = g.slice(hcur, 0, t, 1);
      auto [h2, c2] = lstm_step(g, x, h, c, gp.of(base + ".w_ih"),
                                gp.of(base + ".w_hh"), gp.of(base + ".b"));
      h = h2;
      c = c2;
      rows[t] = h;
    }
  };
  run_dir("enc.lstm_fw", true, fw_rows);
  run_dir("enc.lstm_bw", false, bw_rows);
  std::vector<typename Graph<Real>::Id> joined(t_in);
  for (std::size_t t = 0; t < t_in; ++t)
    joined[t] = g.concat({fw_rows[t], bw_rows[t]}, 1);
  auto stacked = g.concat(joined, 0);
  return g.add(stacked, emb);
}

// Concatenates the speaker embedding row onto every timestep of the memory.
template <class Real>
typename Graph<Real>::Id condition_on_speaker(Graph<Real>& g,
                                              const GraphParams<Real>& gp,
                                              typename Graph<Real>::Id memory,
                                              std::size_t speaker_id) {
  const auto& table = g.value(gp.of("speaker_table"));
  if (speaker_id >= table.shape[0])
    throw ValidationError("unknown speaker id " + std::to_string(speaker_id));
  if (table.shape[1] == 0) return memory;  // degenerate D_s = 0
  auto spk = g.embedding(gp.of("speaker_table"), {speaker_id});
  const std::size_t t_in = g.value(memory).shape[0];
  std::vector<typename Graph<Real>::Id> reps(t_in, spk);
  auto tiled = t_in == 1 ? spk : g.concat(reps, 0);
  return g.concat({memory, tiled}, 1);
}

// ---- forward attention ----

// One recursion step: alpha_hat(n) = (alpha_prev(n) + alpha_prev(n-1)) *
// softmax(energies)(n), renormalized; alpha_prev(-1) = 0. Mass can only hold
// position or advance.
template <class Real>
typename Graph<Real>::Id forward_attention_step(Graph<Real>& g,
                                                typename Graph<Real>::Id alpha_prev,
                                                typename Graph<Real>::Id energies) {
  check_same_shape(g.value(alpha_prev), g.value(energies),
                   "forward_attention_step");
  auto y = g.softmax(energies);
  auto hat = g.mul(g.add(alpha_prev, g.shift_right(alpha_prev)), y);
  return g.normalize_sum(hat);
}

// Alignment rows must stay on the simplex at every step; checked
// unconditionally in every decode mode.
template <class Real>
void assert_alignment_row(const Tensor<Real>& row, double tol = 1e-6) {
  double sum = 0;
  for (Real v : row.data) {
    if (!(v >= Real(0)))
      throw NumericError("alignment row has negative weight");
    sum += double(v);
  }
  if (std::abs(sum - 1.0) > tol)
    throw NumericError("alignment row sums to " + std::to_string(sum));
}

// ---- decoder ----

enum class DecodeMode { kTeacherForced, kFreeRunning };

template <class Real>
struct DecoderGraphOutput {
  typename Graph<Real>::Id y_pre = -1;
  typename Graph<Real>::Id y_post = -1;
  typename Graph<Real>::Id stop_logits = -1;  // {T_dec, 1}
  Tensor<Real> alignment;                     // {T_dec, T_in}
  std::vector<Real> stop_probs;
  bool stopped = false;
};

// Plain-value view of a decode, independent of the graph that produced it.
template <class Real>
struct DecoderOutput {
  Tensor<Real> y_pre;
  Tensor<Real> y_post;
  Tensor<Real> alignment;
  std::vector<Real> stop_probs;
  bool stopped = false;
};

template <class Real>
struct DecodeRequest {
  DecodeMode mode = DecodeMode::kTeacherForced;
  const Tensor<Real>* target = nullptr;        // teacher forcing input/target
  std::size_t max_steps = 0;                   // free running bound (steps)
  const Tensor<Real>* fixed_alignment = nullptr;  // expert-alignment pass 2
  std::uint64_t dropout_seed = 0;              // prenet dropout stream
};

namespace detail {

template <class Real>
typename Graph<Real>::Id prenet(Graph<Real>& g, const GraphParams<Real>& gp,
                                const ModelConfig& cfg,
                                typename Graph<Real>::Id frame, Rng* dropout) {
  auto x = frame;
  for (std::size_t l = 0; l < cfg.prenet_dims.size(); ++l) {
    const std::string base = "dec.prenet" + std::to_string(l);
    x = g.relu(g.add_row(g.matmul(x, gp.of(base + ".w")), gp.of(base + ".b")));
    if (dropout) {
      const auto& shape = g.value(x).shape;
      Tensor<Real> mask(shape);
      const Real keep = Real(1.0 - cfg.prenet_dropout);
      for (auto& v : mask.data)
        v = dropout->uniform() < cfg.prenet_dropout ? Real(0) : Real(1) / keep;
      x = g.mul(x, g.constant(std::move(mask)));
    }
  }
  return x;
}

}  // namespace detail

// Autoregressive decode over a conditioned memory. Per step: prenet on the
// previous frame, attention (forward recursion, or the injected row when a
// fixed alignment drives pass 2 of expert synthesis), context, LSTM state,
// then r mel frames and a stop logit. The postnet runs once over the
// assembled Y_pre and adds a residual correction.
template <class Real>
DecoderGraphOutput<Real> decode(Graph<Real>& g, const GraphParams<Real>& gp,
                                const ModelConfig& cfg,
                                typename Graph<Real>::Id cond_memory,
                                const DecodeRequest<Real>& req) {
  using Id = typename Graph<Real>::Id;
  const std::size_t t_in = g.value(cond_memory).shape[0];
  const std::size_t ctx = g.value(cond_memory).shape[1];
  if (ctx != cfg.context_dim())
    throw ValidationError("decode: memory width " + std::to_string(ctx) +
                          " does not match config context " +
                          std::to_string(cfg.context_dim()));
  const std::size_t r = cfg.reduction_factor;
  const std::size_t m = cfg.mel_channels;

  std::size_t t_dec = 0;
  Tensor<Real> padded_target;
  if (req.mode == DecodeMode::kTeacherForced) {
    if (!req.target)
      throw ValidationError("decode: teacher forcing requires a target");
    if (req.target->ndim() != 2 || req.target->shape[1] != m)
      throw ValidationError("decode: target shape " +
                            shape_str(req.target->shape) +
                            " does not match mel channels " +
                            std::to_string(m));
    const std::size_t t_out = req.target->shape[0];
    t_dec = (t_out + r - 1) / r;
    // pad to a whole number of steps by repeating the last frame
    padded_target = Tensor<Real>({t_dec * r, m});
    for (std::size_t t = 0; t < t_dec * r; ++t) {
      const std::size_t src = std::min(t, t_out - 1);
      for (std::size_t c = 0; c < m; ++c)
        padded_target.at(t, c) = req.target->at(src, c);
    }
  } else {
    if (req.max_steps < 1)
      throw ValidationError("decode: free running needs max_steps >= 1");
    t_dec = req.max_steps;
  }

  const Tensor<Real>* fixed = req.fixed_alignment;
  if (fixed) {
    if (fixed->ndim() != 2 || fixed->shape[1] != t_in)
      throw ValidationError("decode: fixed alignment width " +
                            shape_str(fixed->shape) +
                            " does not match memory length " +
                            std::to_string(t_in));
    if (req.mode == DecodeMode::kTeacherForced && fixed->shape[0] != t_dec)
      throw ValidationError("decode: fixed alignment has " +
                            std::to_string(fixed->shape[0]) +
                            " rows but teacher forcing needs " +
                            std::to_string(t_dec));
    t_dec = fixed->shape[0];
  }

  // precomputed attention term over the memory
  auto processed_memory =
      g.add_row(g.matmul(cond_memory, gp.of("att.memory.w")), gp.of("att.b"));

  const std::size_t h = cfg.decoder_hidden;
  Id hstate = g.constant(Tensor<Real>::zeros({1, h}));
  Id cstate = hstate;
  Id context = g.constant(Tensor<Real>::zeros({1, ctx}));
  Tensor<Real> alpha0({1, t_in});
  alpha0.data[0] = Real(1);
  Id alpha = g.constant(alpha0);
  Id prev_frame = g.constant(Tensor<Real>::zeros({1, m}));

  std::optional<Rng> dropout;
  if (cfg.prenet_dropout > 0 && req.mode == DecodeMode::kTeacherForced)
    dropout.emplace(req.dropout_seed);

  DecoderGraphOutput<Real> out;
  out.alignment = Tensor<Real>({0, t_in});
  std::vector<Id> chunks;
  std::vector<Id> stop_logits;
  std::size_t steps_done = 0;

  for (std::size_t step = 0; step < t_dec; ++step) {
    auto pn = detail::prenet(g, gp, cfg, prev_frame,
                             dropout ? &*dropout : nullptr);
    if (fixed) {
      Tensor<Real> row({1, t_in});
      for (std::size_t j = 0; j < t_in; ++j)
        row.at(0, j) = Real(fixed->at(step, j));
      assert_alignment_row(row);
      alpha = g.constant(std::move(row));
    } else {
      auto query = g.concat({hstate, pn}, 1);
      auto qproj = g.matmul(query, gp.of("att.query.w"));
      auto scores = g.tanh_(g.add_row(processed_memory,
                                      g.reshape(qproj, {cfg.attention_dim})));
      auto energies = g.transpose(g.matmul(scores, gp.of("att.v")));
      alpha = forward_attention_step(g, alpha, energies);
      assert_alignment_row(g.value(alpha));
    }
    context = g.matmul(alpha, cond_memory);
    auto [h2, c2] = lstm_step(g, g.concat({pn, context}, 1), hstate, cstate,
                              gp.of("dec.lstm.w_ih"), gp.of("dec.lstm.w_hh"),
                              gp.of("dec.lstm.b"));
    hstate = h2;
    cstate = c2;
    auto proj_in = g.concat({hstate, context}, 1);
    auto frames = g.reshape(
        g.add_row(g.matmul(proj_in, gp.of("dec.proj.w")), gp.of("dec.proj.b")),
        {r, m});
    auto stop_logit =
        g.add_row(g.matmul(proj_in, gp.of("dec.stop.w")), gp.of("dec.stop.b"));
    chunks.push_back(frames);
    stop_logits.push_back(stop_logit);

    // grow the emitted alignment matrix
    {
      const auto& row = g.value(alpha);
      Tensor<Real> grown({out.alignment.shape[0] + 1, t_in});
      std::copy(out.alignment.data.begin(), out.alignment.data.end(),
                grown.data.begin());
      std::copy(row.data.begin(), row.data.end(),
                grown.data.begin() + out.alignment.shape[0] * t_in);
      out.alignment = std::move(grown);
    }

    const Real stop_p =
        Real(1) / (Real(1) + std::exp(-g.value(stop_logit).data[0]));
    out.stop_probs.push_back(stop_p);
    ++steps_done;

    if (req.mode == DecodeMode::kTeacherForced) {
      prev_frame = g.constant(Tensor<Real>({1, m}, [&] {
        std::vector<Real> row(m);
        for (std::size_t c = 0; c < m; ++c)
          row[c] = Real(padded_target.at(step * r + r - 1, c));
        return row;
      }()));
    } else {
      prev_frame = g.slice(frames, 0, r - 1, 1);
      if (!fixed && double(stop_p) > 0.5) {
        out.stopped = true;
        break;
      }
    }
  }
  if (req.mode == DecodeMode::kTeacherForced) out.stopped = true;
  if (fixed) out.stopped = true;

  auto y_pre_full = chunks.size() == 1 ? chunks[0] : g.concat(chunks, 0);
  if (req.mode == DecodeMode::kTeacherForced &&
      req.target->shape[0] != steps_done * r) {
    out.y_pre = g.slice(y_pre_full, 0, 0, req.target->shape[0]);
  } else {
    out.y_pre = y_pre_full;
  }
  auto hidden = g.tanh_(g.add_row(g.conv1d(out.y_pre, gp.of("post.conv0.w")),
                                  gp.of("post.conv0.b")));
  auto residual =
      g.add_row(g.conv1d(hidden, gp.of("post.conv1.w")), gp.of("post.conv1.b"));
  out.y_post = g.add(out.y_pre, residual);
  out.stop_logits =
      stop_logits.size() == 1 ? stop_logits[0] : g.concat(stop_logits, 0);
  return out;
}

template <class Real>
DecoderOutput<Real> extract_output(const Graph<Real>& g,
                                   const DecoderGraphOutput<Real>& out) {
  DecoderOutput<Real> v;
  v.y_pre = g.value(out.y_pre);
  v.y_post = g.value(out.y_post);
  v.alignment = out.alignment;
  v.stop_probs = out.stop_probs;
  v.stopped = out.stopped;
  return v;
}

// Stop targets for teacher forcing: 0 until the step containing the final
// true frame, 1 from there on.
template <class Real>
std::vector<Real> stop_targets_for(std::size_t t_out, std::size_t r) {
  const std::size_t t_dec = (t_out + r - 1) / r;
  std::vector<Real> targets(t_dec, Real(0));
  if (!targets.empty()) targets.back() = Real(1);
  return targets;
}

// Training objective on the graph: mse(Y, Y_post) + mse(Y, Y_pre) plus the
// weighted stop term. The reported loss elsewhere excludes the stop term.
template <class Real>
typename Graph<Real>::Id build_loss(Graph<Real>& g,
                                    const DecoderGraphOutput<Real>& out,
                                    const Tensor<Real>& target,
                                    const std::vector<Real>& stop_targets,
                                    double stop_weight, double stop_pos_weight) {
  auto y = g.constant(target);
  auto mel_loss = g.add(g.mse(y, out.y_post), g.mse(y, out.y_pre));
  if (stop_weight == 0.0) return mel_loss;
  auto stop = g.bce_with_logits(out.stop_logits, stop_targets,
                                Real(stop_pos_weight));
  return g.add(mel_loss, g.scale(stop, Real(stop_weight)));
}

// Value-level objective over a finished decode, used by reports and tests.
// stop_probs are probabilities here, not logits.
template <class Real>
double loss_value(const Tensor<Real>& target, const DecoderOutput<Real>& out,
                  const std::vector<Real>& stop_targets, double stop_weight,
                  double stop_pos_weight = 1.0) {
  check_same_shape(target, out.y_post, "loss");
  check_same_shape(target, out.y_pre, "loss");
  auto mse_of = [&](const Tensor<Real>& a) {
    double acc = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
      const double d = double(target.data[i]) - double(a.data[i]);
      acc += d * d;
    }
    return acc / double(a.numel());
  };
  double total = mse_of(out.y_post) + mse_of(out.y_pre);
  if (stop_weight != 0.0) {
    if (stop_targets.size() != out.stop_probs.size())
      throw ValidationError("loss: stop target length mismatch");
    double bce = 0;
    for (std::size_t i = 0; i < stop_targets.size(); ++i) {
      const double t = double(stop_targets[i]);
      const double p =
          std::min(std::max(double(out.stop_probs[i]), 1e-12), 1.0 - 1e-12);
      const double w = 1.0 + (stop_pos_weight - 1.0) * t;
      bce -= w * (t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    total += stop_weight * bce / double(stop_targets.size());
  }
  return total;
}

}  // namespace mtts

#endif  // MTTS_MODEL_HPP_
