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

#ifndef MTTS_METRICS_HPP_
#define MTTS_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "mtts/errors.hpp"
#include "mtts/tensor.hpp"

namespace mtts {

// ---- mel-cepstral distortion ----

// Orthonormal DCT-II of one frame; the mel is already log-scaled so the
// coefficients are cepstra directly.
inline std::vector<double> dct2_ortho(const double* x, std::size_t m) {
  std::vector<double> c(m);
  const double pi = 3.14159265358979323846;
  for (std::size_t k = 0; k < m; ++k) {
    double acc = 0;
    for (std::size_t n = 0; n < m; ++n)
      acc += x[n] * std::cos(pi * (2.0 * n + 1.0) * k / (2.0 * m));
    const double s = k == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
    c[k] = s * acc;
  }
  return c;
}

// Frame-aligned MCD in dB between two equally shaped log-mels:
// (10/ln10) * sqrt(2 * sum_{k=1..K} (c_k - c'_k)^2), averaged over frames.
// Coefficient 0 carries the frame mean and is excluded, so a constant
// per-channel offset (loudness) does not register.
template <class Real>
double mcd(const Tensor<Real>& ref, const Tensor<Real>& syn,
           std::size_t cepstral_order = 12) {
  if (ref.ndim() != 2 || !ref.same_shape(syn))
    throw ValidationError("mcd: shape mismatch " + shape_str(ref.shape) +
                          " vs " + shape_str(syn.shape));
  const std::size_t t = ref.shape[0], m = ref.shape[1];
  if (cepstral_order >= m)
    throw ValidationError("mcd: cepstral order " +
                          std::to_string(cepstral_order) +
                          " must be < mel channels " + std::to_string(m));
  const double k_db = 10.0 / std::log(10.0);
  std::vector<double> fr(m), fs(m);
  double total = 0;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t c = 0; c < m; ++c) {
      fr[c] = double(ref.at(i, c));
      fs[c] = double(syn.at(i, c));
    }
    const auto cr = dct2_ortho(fr.data(), m);
    const auto cs = dct2_ortho(fs.data(), m);
    double acc = 0;
    for (std::size_t k = 1; k <= cepstral_order; ++k) {
      const double d = cr[k] - cs[k];
      acc += d * d;
    }
    total += k_db * std::sqrt(2.0 * acc);
  }
  return total / double(t);
}

// ---- edit-distance error rates ----

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t matches = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

// Levenshtein alignment with unit costs. Tie-breaking is deterministic:
// when costs tie the backtrace prefers substitution/match over deletion
// over insertion, so S/D/I counts are reproducible even when several
// alignments are optimal.
template <class Token>
EditCounts edit_align(const std::vector<Token>& ref,
                      const std::vector<Token>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> dist((n + 1) * (m + 1));
  auto d = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return dist[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) d(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) d(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = d(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::size_t del = d(i - 1, j) + 1;
      const std::size_t ins = d(i, j - 1) + 1;
      d(i, j) = std::min(sub, std::min(del, ins));
    }
  EditCounts counts;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const std::size_t sub_cost = ref[i - 1] == hyp[j - 1] ? 0 : 1;
      if (d(i, j) == d(i - 1, j - 1) + sub_cost) {
        if (sub_cost)
          ++counts.substitutions;
        else
          ++counts.matches;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && d(i, j) == d(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
      continue;
    }
    ++counts.insertions;
    --j;
  }
  return counts;
}

// WER = (S + D + I) / (S + D + C); may exceed 1 on insertion-heavy output.
template <class Token>
double wer(const std::vector<Token>& ref, const std::vector<Token>& hyp) {
  if (ref.empty())
    throw ValidationError("wer: undefined for empty reference");
  const EditCounts c = edit_align(ref, hyp);
  return double(c.errors()) /
         double(c.substitutions + c.deletions + c.matches);
}

// MER = (S + D + I) / (S + D + I + C); bounded by 1 and never above WER.
template <class Token>
double mer(const std::vector<Token>& ref, const std::vector<Token>& hyp) {
  if (ref.empty() && hyp.empty())
    throw ValidationError("mer: undefined when both sequences are empty");
  const EditCounts c = edit_align(ref, hyp);
  return double(c.errors()) / double(c.errors() + c.matches);
}

// ---- embedding diagnostics ----

// Mean pairwise Euclidean distance among the selected table rows; the
// before/after comparison of this value over novel-phoneme rows is the
// numeric stand-in for the embedding-expansion plots.
template <class Real>
double embedding_spread(const Tensor<Real>& table,
                        const std::set<std::size_t>& rows) {
  if (table.ndim() != 2)
    throw ValidationError("embedding_spread: table must be 2-d");
  if (rows.size() < 2)
    throw ValidationError("embedding_spread: need at least 2 rows, got " +
                          std::to_string(rows.size()));
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  for (auto r : idx)
    if (r >= table.shape[0])
      throw ValidationError("embedding_spread: row " + std::to_string(r) +
                            " out of range");
  const std::size_t e = table.shape[1];
  double total = 0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b, ++pairs) {
      double acc = 0;
      for (std::size_t c = 0; c < e; ++c) {
        const double diff = double(table.at(idx[a], c)) - double(table.at(idx[b], c));
        acc += diff * diff;
      }
      total += std::sqrt(acc);
    }
  return total / double(pairs);
}

}  // namespace mtts

#endif  // MTTS_METRICS_HPP_
