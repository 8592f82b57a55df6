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

#include "vidlabel/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <sstream>
#include <tuple>

#include "vidlabel/error.hpp"
#include "vidlabel/kernels.hpp"

namespace vidlabel {

Embedding Embedding::from_unit(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorKind::kDegenerateVector, "embedding has no components");
  }
  const double norm = l2_norm(values);
  if (std::abs(norm - 1.0) > kTolerance) {
    std::ostringstream msg;
    msg << "embedding is not unit length (norm " << norm << ")";
    throw Error(ErrorKind::kValidation, msg.str());
  }
  return Embedding(std::move(values));
}

std::size_t Partition::point_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.size();
  return n;
}

double l2_norm(std::span<const double> v) {
  return std::sqrt(kernels::dot(v, v));
}

Embedding l2_normalize(std::vector<double>&& v) {
  const double norm = l2_norm(v);
  if (v.empty() || norm == 0.0 || !std::isfinite(norm)) {
    throw Error(ErrorKind::kDegenerateVector,
                "cannot normalise a zero or non-finite vector");
  }
  for (double& x : v) x /= norm;
  return Embedding(std::move(v));
}

Embedding l2_normalize(std::span<const double> v) {
  return l2_normalize(std::vector<double>(v.begin(), v.end()));
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    std::ostringstream msg;
    msg << "dimension " << a.dim() << " vs " << b.dim();
    throw Error(ErrorKind::kDimMismatch, msg.str());
  }
  return kernels::dot(a.values(), b.values());
}

namespace {

template <typename Deref>
Embedding pool_impl(std::size_t n, Deref&& at) {
  if (n == 0) throw Error(ErrorKind::kEmptyPool, "nothing to pool");
  const std::size_t dim = at(0).dim();
  std::vector<double> sum(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Embedding& e = at(i);
    if (e.dim() != dim) {
      std::ostringstream msg;
      msg << "pool member " << i << " has dimension " << e.dim()
          << ", expected " << dim;
      throw Error(ErrorKind::kDimMismatch, msg.str());
    }
    for (std::size_t k = 0; k < dim; ++k) sum[k] += e[k];
  }
  for (double& x : sum) x /= static_cast<double>(n);
  if (l2_norm(sum) < kTolerance) {
    throw Error(ErrorKind::kDegenerateVector, "pooled mean is zero");
  }
  return l2_normalize(std::move(sum));
}

}  // namespace

Embedding average_pool(std::span<const Embedding> vs) {
  return pool_impl(vs.size(), [&](std::size_t i) -> const Embedding& {
    return vs[i];
  });
}

Embedding average_pool(std::span<const Embedding* const> vs) {
  return pool_impl(vs.size(), [&](std::size_t i) -> const Embedding& {
    return *vs[i];
  });
}

void canonicalize(Partition& p) {
  for (auto& c : p.clusters) std::sort(c.begin(), c.end());
  std::sort(p.clusters.begin(), p.clusters.end(),
            [](const Cluster& a, const Cluster& b) {
              return a.front() < b.front();
            });
}

namespace {

// Candidate merge between two live clusters, each identified by its
// smallest member index (an id that survives merging: lo absorbs hi).
struct MergeCandidate {
  double distance;
  std::size_t lo;
  std::size_t hi;
  std::uint32_t lo_version;
  std::uint32_t hi_version;
};

struct FartherFirst {
  bool operator()(const MergeCandidate& x, const MergeCandidate& y) const {
    return std::tie(x.distance, x.lo, x.hi) > std::tie(y.distance, y.lo, y.hi);
  }
};

}  // namespace

Partition agglomerative_cluster(std::span<const Embedding> points,
                                double threshold, Linkage linkage) {
  const std::size_t n = points.size();
  if (n == 0) throw Error(ErrorKind::kEmptyInput, "no points to cluster");
  if (!(threshold > 0.0 && threshold <= 2.0)) {
    throw Error(ErrorKind::kConfig, "cluster distance must lie in (0, 2]");
  }
  for (const auto& p : points) {
    if (p.dim() != points[0].dim()) {
      throw Error(ErrorKind::kDimMismatch, "clustered points differ in dimension");
    }
  }

  // For average linkage `link` holds the sum of pairwise distances between
  // the two clusters; single/complete hold the linkage value itself.
  kernels::ScoreMatrix link =
      kernels::pairwise_cosine_distance(kernels::EmbeddingMatrix(points));
  std::vector<std::size_t> size(n, 1);
  std::vector<std::uint32_t> version(n, 0);
  std::vector<bool> alive(n, true);
  std::vector<Cluster> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  auto value = [&](std::size_t a, std::size_t b) {
    const double v = link.values[a * n + b];
    return linkage == Linkage::kAverage
               ? v / static_cast<double>(size[a] * size[b])
               : v;
  };
  auto valid = [&](const MergeCandidate& c) {
    return alive[c.lo] && alive[c.hi] && version[c.lo] == c.lo_version &&
           version[c.hi] == c.hi_version;
  };

  std::priority_queue<MergeCandidate, std::vector<MergeCandidate>, FartherFirst>
      heap;
  auto push = [&](std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    heap.push({value(a, b), a, b, version[a], version[b]});
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) push(i, j);
  }

  std::vector<MergeCandidate> window;
  while (true) {
    while (!heap.empty() && !valid(heap.top())) heap.pop();
    if (heap.empty()) break;
    const double best = heap.top().distance;
    if (best > threshold) break;

    window.clear();
    while (!heap.empty() && heap.top().distance <= best + kTolerance) {
      if (valid(heap.top())) window.push_back(heap.top());
      heap.pop();
    }
    auto chosen = std::min_element(
        window.begin(), window.end(), [](const auto& x, const auto& y) {
          return std::tie(x.lo, x.hi) < std::tie(y.lo, y.hi);
        });
    const std::size_t lo = chosen->lo;
    const std::size_t hi = chosen->hi;
    for (auto it = window.begin(); it != window.end(); ++it) {
      if (it != chosen) heap.push(*it);
    }

    for (std::size_t c = 0; c < n; ++c) {
      if (!alive[c] || c == lo || c == hi) continue;
      double& into = link.values[lo * n + c];
      const double from = link.values[hi * n + c];
      switch (linkage) {
        case Linkage::kAverage: into += from; break;
        case Linkage::kSingle: into = std::min(into, from); break;
        case Linkage::kComplete: into = std::max(into, from); break;
      }
      link.values[c * n + lo] = into;
    }
    size[lo] += size[hi];
    members[lo].insert(members[lo].end(), members[hi].begin(), members[hi].end());
    members[hi].clear();
    alive[hi] = false;
    ++version[lo];
    for (std::size_t c = 0; c < n; ++c) {
      if (alive[c] && c != lo) push(lo, c);
    }
  }

  Partition out;
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) out.clusters.push_back(std::move(members[i]));
  }
  canonicalize(out);
  return out;
}

const Cluster& largest_cluster(const Partition& p) {
  if (p.clusters.empty()) {
    throw Error(ErrorKind::kEmptyInput, "partition has no clusters");
  }
  const Cluster* best = nullptr;
  std::size_t best_min = 0;
  for (const auto& c : p.clusters) {
    if (c.empty()) continue;
    const std::size_t m = *std::min_element(c.begin(), c.end());
    if (best == nullptr || c.size() > best->size() ||
        (c.size() == best->size() && m < best_min)) {
      best = &c;
      best_min = m;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorKind::kEmptyInput, "partition has only empty clusters");
  }
  return *best;
}

}  // namespace vidlabel
