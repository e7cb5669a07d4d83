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

#ifndef MTTS_GRADCHECK_HPP_
#define MTTS_GRADCHECK_HPP_

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mtts/graph.hpp"
#include "mtts/rng.hpp"
#include "mtts/tensor.hpp"

namespace mtts {

struct GradCheckOptions {
  double h = 1e-4;
  // Coordinates checked per input tensor; inputs smaller than this are
  // checked exhaustively, larger ones on a seeded random sample.
  std::size_t max_coords_per_input = 64;
  std::uint64_t seed = 0x9e3779b9;
};

// Central-finite-difference oracle for the reverse pass. Deliberately fixed
// to double: 32-bit arithmetic makes finite differences meaningless at the
// tolerances asserted here.
//
// `build` is invoked as build(graph, leaf_ids) and must return a scalar loss
// id; it is re-run for every probe, so it must be a pure function of the
// input tensors. Returns max over sampled coordinates of
// |analytic - central| / max(1, |analytic|).
template <class Builder>
double grad_check(const std::vector<Tensor<double>>& inputs, Builder&& build,
                  GradCheckOptions opt = {}) {
  using G = Graph<double>;
  std::vector<Tensor<double>> analytic;
  {
    G g;
    std::vector<typename G::Id> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(g.input(t, true));
    const auto loss = build(g, leaves);
    g.backward(loss);
    for (auto id : leaves) analytic.push_back(g.grad(id));
  }

  Rng rng(opt.seed);
  double max_rel = 0.0;
  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::size_t n = inputs[i].numel();
    std::vector<std::size_t> coords;
    if (n <= opt.max_coords_per_input) {
      coords.resize(n);
      for (std::size_t c = 0; c < n; ++c) coords[c] = c;
    } else {
      for (std::size_t c = 0; c < opt.max_coords_per_input; ++c)
        coords.push_back(rng.uniform_index(n));
    }
    for (std::size_t c : coords) {
      const double saved = probe[i].data[c];
      probe[i].data[c] = saved + opt.h;
      G gp;
      std::vector<typename G::Id> lp;
      for (const auto& t : probe) lp.push_back(gp.input(t, false));
      const double lplus = gp.value(build(gp, lp)).data[0];
      probe[i].data[c] = saved - opt.h;
      G gm;
      std::vector<typename G::Id> lm;
      for (const auto& t : probe) lm.push_back(gm.input(t, false));
      const double lminus = gm.value(build(gm, lm)).data[0];
      probe[i].data[c] = saved;
      const double numeric = (lplus - lminus) / (2.0 * opt.h);
      const double a = analytic[i].data[c];
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace mtts

#endif  // MTTS_GRADCHECK_HPP_
