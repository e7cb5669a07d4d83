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

#ifndef MTTS_TENSOR_HPP_
#define MTTS_TENSOR_HPP_

#include <cstddef>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "mtts/errors.hpp"
#include "mtts/rng.hpp"

namespace mtts {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

// Dense row-major tensor. Precision is a template parameter: float for
// training and inference, double for finite-difference gradient checks.
template <class Real>
struct Tensor {
  Shape shape;
  std::vector<Real> data;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(shape_numel(shape)) {}
  Tensor(Shape s, std::vector<Real> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != shape_numel(shape))
      throw ValidationError("tensor data length " + std::to_string(data.size()) +
                            " does not match shape " + shape_str(shape));
  }

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

  static Tensor full(Shape s, Real v) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  static Tensor scalar(Real v) { return Tensor({1}, {v}); }

  static Tensor gaussian(Shape s, Rng& rng, double stddev, double mean = 0.0) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = static_cast<Real>(rng.gaussian(mean, stddev));
    return t;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }

  std::size_t rows() const { return shape.size() == 2 ? shape[0] : shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  Real& at(std::size_t i) { return data[i]; }
  Real at(std::size_t i) const { return data[i]; }
  Real& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  Real at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <class Other>
  Tensor<Other> cast() const {
    Tensor<Other> t;
    t.shape = shape;
    t.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      t.data[i] = static_cast<Other>(data[i]);
    return t;
  }
};

template <class Real>
inline bool bit_equal(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape != b.shape) return false;
  return std::memcmp(a.data.data(), b.data.data(),
                     a.data.size() * sizeof(Real)) == 0;
}

template <class Real>
inline void check_same_shape(const Tensor<Real>& a, const Tensor<Real>& b,
                             const char* op) {
  if (!a.same_shape(b))
    throw ValidationError(std::string(op) + ": shape mismatch " +
                          shape_str(a.shape) + " vs " + shape_str(b.shape));
}

}  // namespace mtts

#endif  // MTTS_TENSOR_HPP_
