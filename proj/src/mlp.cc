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

#include "xdfair/mlp.h"

#include <cmath>

#include "xdfair/backbone.h"

namespace xdfair {

Mlp::Mlp(std::vector<int> widths, std::uint64_t seed)
    : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw InvalidArgument("mlp needs >= 2 widths");
  for (const int w : widths_) {
    if (w < 1) throw InvalidArgument("mlp widths must be positive");
  }
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    RowMatrix w(fan_in, fan_out);
    RowMatrix b(1, fan_out);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      w.data()[k] = bound * (2.0 * UniformUnit(rng) - 1.0);
    }
    for (Eigen::Index k = 0; k < b.size(); ++k) {
      b.data()[k] = bound * (2.0 * UniformUnit(rng) - 1.0);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

RowMatrix Mlp::Forward(const RowMatrix& x, Cache* cache, Rng* dropout_rng,
                       double dropout) const {
  if (x.cols() != input_width()) {
    throw InvalidArgument("mlp input width mismatch");
  }
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre.clear();
    cache->masks.clear();
  }
  const bool use_dropout = dropout_rng != nullptr && dropout > 0.0;
  const double keep_scale = use_dropout ? 1.0 / (1.0 - dropout) : 1.0;
  RowMatrix h = x;
  const int n_layers = num_layers();
  for (int l = 0; l < n_layers; ++l) {
    RowMatrix z = h * weights_[l];
    z.rowwise() += biases_[l].row(0);
    if (cache != nullptr) cache->inputs.push_back(std::move(h));
    if (l + 1 == n_layers) return z;

    RowMatrix a = z.cwiseMax(0.0);
    if (use_dropout) {
      RowMatrix mask(a.rows(), a.cols());
      for (Eigen::Index k = 0; k < mask.size(); ++k) {
        mask.data()[k] = UniformUnit(*dropout_rng) < dropout ? 0.0 : keep_scale;
      }
      a = a.cwiseProduct(mask);
      if (cache != nullptr) cache->masks.push_back(std::move(mask));
    }
    if (cache != nullptr) cache->pre.push_back(std::move(z));
    h = std::move(a);
  }
  return h;
}

RowMatrix Mlp::Backward(const Cache& cache, const RowMatrix& grad_out,
                        Gradients* grads) const {
  const int n_layers = num_layers();
  if (static_cast<int>(cache.inputs.size()) != n_layers) {
    throw InvalidArgument("mlp cache does not match the network");
  }
  if (grads != nullptr) {
    grads->weights.resize(static_cast<std::size_t>(n_layers));
    grads->biases.resize(static_cast<std::size_t>(n_layers));
  }
  RowMatrix g = grad_out;  // gradient w.r.t. the current layer's output z
  for (int l = n_layers - 1; l >= 0; --l) {
    if (grads != nullptr) {
      grads->weights[l] = cache.inputs[l].transpose() * g;
      grads->biases[l] = g.colwise().sum();
    }
    RowMatrix g_in = g * weights_[l].transpose();
    if (l == 0) return g_in;
    // Through dropout and ReLU of hidden layer l-1.
    if (!cache.masks.empty()) g_in = g_in.cwiseProduct(cache.masks[l - 1]);
    const RowMatrix& z = cache.pre[l - 1];
    for (Eigen::Index k = 0; k < g_in.size(); ++k) {
      if (z.data()[k] <= 0.0) g_in.data()[k] = 0.0;
    }
    g = std::move(g_in);
  }
  return g;
}

std::uint64_t Mlp::Checksum() const {
  std::uint64_t h = 0x6d6c70;
  for (const RowMatrix& w : weights_) h = HashMatrix(w, h);
  for (const RowMatrix& b : biases_) h = HashMatrix(b, h);
  return h;
}

}  // namespace xdfair
