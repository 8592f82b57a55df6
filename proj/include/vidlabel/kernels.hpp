// Copyright 2026 The vidlabel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP variant; both evaluate every output element with the same scalar
// routine, so their results are bitwise identical. The unsuffixed entry
// points dispatch to the OpenMP variant when it is compiled in.

#include <cstddef>
#include <span>
#include <vector>

#include "vidlabel/core.hpp"

namespace vidlabel::kernels {

// Row-major copy of a list of equal-dimension embeddings.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::span<const Embedding> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Row-major rows() x cols() result of a kernel.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

double dot(std::span<const double> a, std::span<const double> b);

bool openmp_enabled() noexcept;

// out(i, j) = <a_i, b_j>
ScoreMatrix similarity_matrix_serial(const EmbeddingMatrix& a,
                                     const EmbeddingMatrix& b);
ScoreMatrix similarity_matrix_omp(const EmbeddingMatrix& a,
                                  const EmbeddingMatrix& b);
ScoreMatrix similarity_matrix(const EmbeddingMatrix& a,
                              const EmbeddingMatrix& b);

// out(i, j) = 1 - <p_i, p_j>, with an exactly zero diagonal.
ScoreMatrix pairwise_cosine_distance_serial(const EmbeddingMatrix& p);
ScoreMatrix pairwise_cosine_distance_omp(const EmbeddingMatrix& p);
ScoreMatrix pairwise_cosine_distance(const EmbeddingMatrix& p);

// average_pool applied to every group. Errors are reported for the lowest
// failing group index regardless of variant.
std::vector<Embedding> pool_groups_serial(
    std::span<const std::vector<Embedding>> groups);
std::vector<Embedding> pool_groups_omp(
    std::span<const std::vector<Embedding>> groups);
std::vector<Embedding> pool_groups(
    std::span<const std::vector<Embedding>> groups);

}  // namespace vidlabel::kernels
