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

#include <cstddef>
#include <span>
#include <vector>

namespace vidlabel {

// Absolute tolerance for unit-norm checks and clustering merge ties.
inline constexpr double kTolerance = 1e-6;

// A unit-length dense vector. The only ways to obtain one are l2_normalize,
// average_pool, or from_unit (which checks, but does not rescale, its input).
class Embedding {
 public:
  Embedding() = default;

  static Embedding from_unit(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
  friend Embedding l2_normalize(std::span<const double> v);
  friend Embedding l2_normalize(std::vector<double>&& v);

  std::vector<double> values_;
};

using Cluster = std::vector<std::size_t>;

// Disjoint clusters covering {0..N-1}. Canonical form: members ascending,
// clusters ordered by their smallest member.
struct Partition {
  std::vector<Cluster> clusters;

  std::size_t point_count() const;
  friend bool operator==(const Partition&, const Partition&) = default;
};

enum class Linkage { kAverage, kSingle, kComplete };

double l2_norm(std::span<const double> v);

Embedding l2_normalize(std::span<const double> v);
Embedding l2_normalize(std::vector<double>&& v);

double cosine_similarity(const Embedding& a, const Embedding& b);

inline double cosine_distance(const Embedding& a, const Embedding& b) {
  return 1.0 - cosine_similarity(a, b);
}

// Component-wise mean followed by l2_normalize.
Embedding average_pool(std::span<const Embedding> vs);
Embedding average_pool(std::span<const Embedding* const> vs);

// Bottom-up agglomeration on cosine distance. Merges continue while the
// smallest inter-cluster linkage is <= threshold. Among pairs whose linkage
// is within kTolerance of the minimum, the pair with the lexicographically
// smallest (min member of one, min member of the other) is merged first.
Partition agglomerative_cluster(std::span<const Embedding> points,
                                double threshold,
                                Linkage linkage = Linkage::kAverage);

// Cluster of maximum cardinality; ties go to the cluster holding the
// smallest index.
const Cluster& largest_cluster(const Partition& p);

// Puts clusters into canonical form.
void canonicalize(Partition& p);

}  // namespace vidlabel
