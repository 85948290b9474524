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
#include <unordered_map>
#include <vector>

#include "xdfair/common.h"

namespace xdfair {

// Sparse gradient for one table: the rows touched in a step, in first-touch
// order, each with its accumulated gradient.
class RowGradients {
 public:
  explicit RowGradients(int cols = 0) : cols_(cols) {}

  // Returns the accumulator row for `row`, creating a zero row on first use.
  Eigen::Map<Eigen::RowVectorXd> Row(std::int32_t row);

  const std::vector<std::int32_t>& rows() const { return rows_; }
  Eigen::Map<const Eigen::RowVectorXd> Values(std::size_t slot) const {
    return {values_.data() + slot * static_cast<std::size_t>(cols_), cols_};
  }
  int cols() const { return cols_; }
  bool empty() const { return rows_.empty(); }
  void Clear();
  void Scale(double factor);

 private:
  int cols_;
  std::vector<std::int32_t> rows_;
  std::vector<double> values_;
  std::unordered_map<std::int32_t, std::size_t> slot_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Sparse updates only touch the rows present in the
// gradient (lazy moments); the step counter is shared by all parameters.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Registers a parameter of the given shape and returns its handle.
  int AddParameter(Eigen::Index rows, Eigen::Index cols);

  // Advances the shared step counter; call once per optimizer step.
  void BeginStep() { ++step_; }

  void ApplyRows(int handle, RowMatrix& param, const RowGradients& grad,
                 double lr);
  void ApplyDense(int handle, RowMatrix& param, const RowMatrix& grad,
                  double lr);

  std::int64_t step() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const RowMatrix& first_moment(int handle) const { return m_[handle]; }
  const RowMatrix& second_moment(int handle) const { return v_[handle]; }
  int num_parameters() const { return static_cast<int>(m_.size()); }

  // Restores state saved from the accessors above.
  void Restore(std::int64_t step, std::vector<RowMatrix> m,
               std::vector<RowMatrix> v);

 private:
  void UpdateRow(RowMatrix& m, RowMatrix& v, RowMatrix& param, Eigen::Index r,
                 const double* g, double lr, double c1, double c2);

  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<RowMatrix> m_;
  std::vector<RowMatrix> v_;
};

}  // namespace xdfair
