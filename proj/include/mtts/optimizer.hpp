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

#ifndef MTTS_OPTIMIZER_HPP_
#define MTTS_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mtts/errors.hpp"
#include "mtts/tensor.hpp"

namespace mtts {

// Which parameters stay untouched during a training run. Whole tensors are
// frozen by name; embedding tables can freeze individual rows instead. The
// two kinds are mutually exclusive per tensor.
struct FreezePlan {
  std::set<std::string> frozen_tensors;
  std::map<std::string, std::set<std::size_t>> frozen_rows;

  bool tensor_frozen(const std::string& name) const {
    return frozen_tensors.count(name) > 0;
  }

  const std::set<std::size_t>* rows_frozen(const std::string& name) const {
    auto it = frozen_rows.find(name);
    return it == frozen_rows.end() ? nullptr : &it->second;
  }

  bool empty() const { return frozen_tensors.empty() && frozen_rows.empty(); }
};

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer over a set of named tensors. Frozen tensors and
// frozen rows are skipped entirely: neither the parameter entries nor their
// first/second moments change, so they stay bit-identical across any number
// of steps and a later unfreeze resumes from untouched moments.
template <class Real>
class Adam {
 public:
  struct Slot {
    Tensor<Real> m;
    Tensor<Real> v;
  };

  // `names`/`shapes` fix the slot order; must match the parameter set.
  void init(const std::vector<std::string>& names,
            const std::vector<Shape>& shapes) {
    slots_.clear();
    names_ = names;
    for (std::size_t i = 0; i < names.size(); ++i) {
      slots_.push_back(Slot{Tensor<Real>::zeros(shapes[i]),
                            Tensor<Real>::zeros(shapes[i])});
      index_[names[i]] = i;
    }
    step_count_ = 0;
  }

  bool initialized() const { return !slots_.empty(); }
  std::uint64_t step_count() const { return step_count_; }
  const std::vector<std::string>& names() const { return names_; }
  Slot& slot(const std::string& name) { return slots_.at(index_.at(name)); }
  const Slot& slot(const std::string& name) const {
    return slots_.at(index_.at(name));
  }

  void set_step_count(std::uint64_t t) { step_count_ = t; }

  // One update over all parameters. `params` and `grads` are parallel to the
  // names passed to init().
  void step(const std::vector<std::string>& names,
            std::vector<Tensor<Real>*> params,
            const std::vector<const Tensor<Real>*>& grads,
            const FreezePlan& plan, const AdamHyper& hyper) {
    validate_plan(plan);
    ++step_count_;
    const double bc1 = 1.0 - std::pow(hyper.beta1, double(step_count_));
    const double bc2 = 1.0 - std::pow(hyper.beta2, double(step_count_));
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (plan.tensor_frozen(names[i])) continue;
      Slot& s = slots_.at(index_.at(names[i]));
      Tensor<Real>& p = *params[i];
      const Tensor<Real>& g = *grads[i];
      check_same_shape(p, g, "adam_step");
      const std::set<std::size_t>* rows = plan.rows_frozen(names[i]);
      const std::size_t row_len =
          rows && p.ndim() == 2 ? p.shape[1] : p.numel();
      for (std::size_t j = 0; j < p.numel(); ++j) {
        if (rows && rows->count(j / row_len)) continue;
        double m = hyper.beta1 * double(s.m.data[j]) +
                   (1.0 - hyper.beta1) * double(g.data[j]);
        double v = hyper.beta2 * double(s.v.data[j]) +
                   (1.0 - hyper.beta2) * double(g.data[j]) * double(g.data[j]);
        s.m.data[j] = Real(m);
        s.v.data[j] = Real(v);
        const double mh = m / bc1;
        const double vh = v / bc2;
        p.data[j] = Real(double(p.data[j]) -
                         hyper.learning_rate * mh / (std::sqrt(vh) + hyper.eps));
      }
    }
  }

  void validate_plan(const FreezePlan& plan) const {
    for (const auto& name : plan.frozen_tensors) {
      if (!index_.count(name))
        throw ValidationError("freeze plan names unknown parameter: " + name);
      if (plan.frozen_rows.count(name))
        throw ValidationError("parameter both fully and row-frozen: " + name);
    }
    for (const auto& [name, rows] : plan.frozen_rows) {
      auto it = index_.find(name);
      if (it == index_.end())
        throw ValidationError("freeze plan names unknown parameter: " + name);
      const auto& shape = slots_[it->second].m.shape;
      if (shape.size() != 2)
        throw ValidationError("row freeze on non-2d parameter: " + name);
      for (auto r : rows)
        if (r >= shape[0])
          throw ValidationError("frozen row " + std::to_string(r) +
                                " out of range for " + name);
    }
  }

 private:
  std::vector<Slot> slots_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t step_count_ = 0;
};

}  // namespace mtts

#endif  // MTTS_OPTIMIZER_HPP_
