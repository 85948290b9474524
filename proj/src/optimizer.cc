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

#include "xdfair/optimizer.h"

#include <cmath>

namespace xdfair {

Eigen::Map<Eigen::RowVectorXd> RowGradients::Row(std::int32_t row) {
  const auto [it, inserted] = slot_.try_emplace(row, rows_.size());
  if (inserted) {
    rows_.push_back(row);
    values_.resize(values_.size() + static_cast<std::size_t>(cols_), 0.0);
  }
  return {values_.data() + it->second * static_cast<std::size_t>(cols_),
          cols_};
}

void RowGradients::Clear() {
  rows_.clear();
  values_.clear();
  slot_.clear();
}

void RowGradients::Scale(double factor) {
  for (double& v : values_) v *= factor;
}

int Adam::AddParameter(Eigen::Index rows, Eigen::Index cols) {
  m_.push_back(RowMatrix::Zero(rows, cols));
  v_.push_back(RowMatrix::Zero(rows, cols));
  return static_cast<int>(m_.size()) - 1;
}

void Adam::UpdateRow(RowMatrix& m, RowMatrix& v, RowMatrix& param,
                     Eigen::Index r, const double* g, double lr, double c1,
                     double c2) {
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  for (Eigen::Index c = 0; c < param.cols(); ++c) {
    const double gc = g[c];
    double& mc = m(r, c);
    double& vc = v(r, c);
    mc = b1 * mc + (1.0 - b1) * gc;
    vc = b2 * vc + (1.0 - b2) * gc * gc;
    const double m_hat = mc / c1;
    const double v_hat = vc / c2;
    param(r, c) -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

void Adam::ApplyRows(int handle, RowMatrix& param, const RowGradients& grad,
                     double lr) {
  RowMatrix& m = m_.at(handle);
  RowMatrix& v = v_.at(handle);
  if (param.rows() != m.rows() || param.cols() != m.cols() ||
      grad.cols() != param.cols()) {
    throw InvalidArgument("adam: parameter/gradient shape mismatch");
  }
  if (step_ <= 0) throw InvalidArgument("adam: BeginStep() not called");
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const auto& rows = grad.rows();
  for (std::size_t slot = 0; slot < rows.size(); ++slot) {
    const Eigen::Index r = rows[slot];
    if (r < 0 || r >= param.rows()) {
      throw InvalidArgument("adam: gradient row out of range");
    }
    UpdateRow(m, v, param, r, grad.Values(slot).data(), lr, c1, c2);
  }
}

void Adam::ApplyDense(int handle, RowMatrix& param, const RowMatrix& grad,
                      double lr) {
  RowMatrix& m = m_.at(handle);
  RowMatrix& v = v_.at(handle);
  if (param.rows() != m.rows() || param.cols() != m.cols() ||
      grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw InvalidArgument("adam: parameter/gradient shape mismatch");
  }
  if (step_ <= 0) throw InvalidArgument("adam: BeginStep() not called");
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    UpdateRow(m, v, param, r, grad.data() + r * grad.cols(), lr, c1, c2);
  }
}

void Adam::Restore(std::int64_t step, std::vector<RowMatrix> m,
                   std::vector<RowMatrix> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw DataError("adam: restored state has wrong parameter count");
  }
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m[k].rows() != m_[k].rows() || m[k].cols() != m_[k].cols() ||
        v[k].rows() != v_[k].rows() || v[k].cols() != v_[k].cols()) {
      throw DataError("adam: restored moment has wrong shape");
    }
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace xdfair
