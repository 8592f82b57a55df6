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

#include "vidlabel/kernels.hpp"

#include <exception>
#include <optional>

#include "vidlabel/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vidlabel::kernels {

EmbeddingMatrix::EmbeddingMatrix(std::span<const Embedding> rows)
    : rows_(rows.size()), dim_(rows.empty() ? 0 : rows[0].dim()) {
  data_.reserve(rows_ * dim_);
  for (const auto& e : rows) {
    if (e.dim() != dim_) {
      throw Error(ErrorKind::kDimMismatch, "matrix rows differ in dimension");
    }
    data_.insert(data_.end(), e.values().begin(), e.values().end());
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

bool openmp_enabled() noexcept {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace {

void check_same_dim(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.rows() != 0 && b.rows() != 0 && a.dim() != b.dim()) {
    throw Error(ErrorKind::kDimMismatch, "similarity operands differ in dimension");
  }
}

}  // namespace

ScoreMatrix similarity_matrix_serial(const EmbeddingMatrix& a,
                                     const EmbeddingMatrix& b) {
  check_same_dim(a, b);
  ScoreMatrix out{a.rows(), b.rows(), std::vector<double>(a.rows() * b.rows())};
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out.values[i * out.cols + j] = dot(a.row(i), b.row(j));
    }
  }
  return out;
}

ScoreMatrix similarity_matrix_omp(const EmbeddingMatrix& a,
                                  const EmbeddingMatrix& b) {
  check_same_dim(a, b);
  ScoreMatrix out{a.rows(), b.rows(), std::vector<double>(a.rows() * b.rows())};
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t cols = b.rows();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < cols; ++j) {
      out.values[r * cols + j] = dot(a.row(r), b.row(j));
    }
  }
  return out;
}

ScoreMatrix similarity_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  return openmp_enabled() ? similarity_matrix_omp(a, b)
                          : similarity_matrix_serial(a, b);
}

ScoreMatrix pairwise_cosine_distance_serial(const EmbeddingMatrix& p) {
  const std::size_t n = p.rows();
  ScoreMatrix out{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = 1.0 - dot(p.row(i), p.row(j));
      out.values[i * n + j] = d;
      out.values[j * n + i] = d;
    }
  }
  return out;
}

ScoreMatrix pairwise_cosine_distance_omp(const EmbeddingMatrix& p) {
  const std::size_t n = p.rows();
  ScoreMatrix out{n, n, std::vector<double>(n * n, 0.0)};
  const auto rows = static_cast<std::ptrdiff_t>(n);
  // Upper triangle only; row lengths shrink, so hand out rows dynamically.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = 1.0 - dot(p.row(i), p.row(j));
      out.values[i * n + j] = d;
      out.values[j * n + i] = d;
    }
  }
  return out;
}

ScoreMatrix pairwise_cosine_distance(const EmbeddingMatrix& p) {
  return openmp_enabled() ? pairwise_cosine_distance_omp(p)
                          : pairwise_cosine_distance_serial(p);
}

std::vector<Embedding> pool_groups_serial(
    std::span<const std::vector<Embedding>> groups) {
  std::vector<Embedding> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(average_pool(g));
  return out;
}

std::vector<Embedding> pool_groups_omp(
    std::span<const std::vector<Embedding>> groups) {
  std::vector<Embedding> out(groups.size());
  std::vector<std::exception_ptr> failures(groups.size());
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = average_pool(groups[k]);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

std::vector<Embedding> pool_groups(std::span<const std::vector<Embedding>> groups) {
  return openmp_enabled() ? pool_groups_omp(groups) : pool_groups_serial(groups);
}

}  // namespace vidlabel::kernels
