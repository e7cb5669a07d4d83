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

#ifndef MTTS_MTTS_HPP_
#define MTTS_MTTS_HPP_

#include "mtts/checkpoint.hpp"
#include "mtts/corpus.hpp"
#include "mtts/errors.hpp"
#include "mtts/evaluate.hpp"
#include "mtts/gradcheck.hpp"
#include "mtts/graph.hpp"
#include "mtts/inventory.hpp"
#include "mtts/io.hpp"
#include "mtts/metrics.hpp"
#include "mtts/model.hpp"
#include "mtts/optimizer.hpp"
#include "mtts/rng.hpp"
#include "mtts/synthesis.hpp"
#include "mtts/synthetic.hpp"
#include "mtts/tensor.hpp"
#include "mtts/train.hpp"

#endif  // MTTS_MTTS_HPP_
