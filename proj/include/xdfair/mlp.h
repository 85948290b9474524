// Copyright 2026 The xdfair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "xdfair/common.h"
#include "xdfair/rng.h"

namespace xdfair {

// Fully connected network with ReLU hidden layers and a linear output. Rows of
// the input matrix are independent examples. Dropout (inverted scaling) is
// applied to hidden activations only when a dropout RNG is supplied.
class Mlp {
 public:
  Mlp() = default;
  // widths = {input, hidden..., output}. PyTorch-style uniform init
  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  Mlp(std::vector<int> widths, std::uint64_t seed);

  struct Cache {
    std::vector<RowMatrix> inputs;  // input to each layer
    std::vector<RowMatrix> pre;     // hidden pre-activations
    std::vector<RowMatrix> masks;   // hidden dropout masks (scaled), if any
  };

  struct Gradients {
    std::vector<RowMatrix> weights;
    std::vector<RowMatrix> biases;
  };

  RowMatrix Forward(const RowMatrix& x, Cache* cache = nullptr,
                    Rng* dropout_rng = nullptr, double dropout = 0.0) const;

  // Back-propagates d(loss)/d(output) and returns d(loss)/d(input).
  // Parameter gradients are written to `grads` when it is non-null.
  RowMatrix Backward(const Cache& cache, const RowMatrix& grad_out,
                     Gradients* grads) const;

  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  int num_layers() const { return static_cast<int>(weights_.size()); }

  // weights[l] is fan_in x fan_out; biases[l] is 1 x fan_out.
  std::vector<RowMatrix>& weights() { return weights_; }
  std::vector<RowMatrix>& biases() { return biases_; }
  const std::vector<RowMatrix>& weights() const { return weights_; }
  const std::vector<RowMatrix>& biases() const { return biases_; }

  std::uint64_t Checksum() const;

 private:
  std::vector<int> widths_;
  std::vector<RowMatrix> weights_;
  std::vector<RowMatrix> biases_;
};

}  // namespace xdfair
