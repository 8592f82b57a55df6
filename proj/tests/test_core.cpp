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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "test_util.hpp"
#include "vidlabel/core.hpp"
#include "vidlabel/error.hpp"
#include "vidlabel/synth.hpp"

using namespace vidlabel;
using testutil::at_angle;
using testutil::unit;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::kIo;
}

// Points scattered around a handful of random centres.
std::vector<Embedding> clustered_points(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_dist(1, 64), dim_dist(2, 8), c_dist(1, 6);
  std::uniform_real_distribution<double> spread_dist(0.05, 0.6);
  const int n = n_dist(rng);
  const auto dim = static_cast<std::size_t>(dim_dist(rng));
  std::vector<Embedding> centres;
  for (int c = c_dist(rng); c > 0; --c) centres.push_back(testutil::random_unit(rng, dim));
  const double spread = spread_dist(rng);
  std::normal_distribution<double> noise(0.0, spread);
  std::uniform_int_distribution<std::size_t> pick(0, centres.size() - 1);
  std::vector<Embedding> pts;
  for (int i = 0; i < n; ++i) {
    const Embedding& c = centres[pick(rng)];
    std::vector<double> v(c.values().begin(), c.values().end());
    for (auto& x : v) x += noise(rng);
    pts.push_back(unit(std::move(v)));
  }
  return pts;
}

}  // namespace

TEST_CASE("l2_normalize") {
  const Embedding e = l2_normalize(std::vector<double>{3.0, 4.0});
  CHECK(e[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(e[1] == doctest::Approx(0.8).epsilon(1e-15));
  const Embedding same = l2_normalize(std::vector<double>{1.0, 0.0});
  CHECK(same[0] == 1.0);
  CHECK(same[1] == 0.0);
  CHECK(kind_of([] { l2_normalize(std::vector<double>{0.0, 0.0}); }) ==
        ErrorKind::kDegenerateVector);
}

TEST_CASE("from_unit rejects vectors off the sphere") {
  CHECK_NOTHROW(Embedding::from_unit({0.6, 0.8}));
  CHECK(kind_of([] { Embedding::from_unit({0.6, 0.9}); }) == ErrorKind::kValidation);
}

TEST_CASE("cosine similarity") {
  const Embedding a = unit({1.0, 2.0, -0.5});
  const Embedding neg = unit({-1.0, -2.0, 0.5});
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(at_angle(0), at_angle(M_PI / 2)) == doctest::Approx(0.0));
  CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0));
  CHECK(kind_of([&] { cosine_similarity(a, at_angle(0)); }) == ErrorKind::kDimMismatch);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto x = testutil::random_unit(rng, 16);
    const auto y = testutil::random_unit(rng, 16);
    CHECK(cosine_similarity(x, y) == cosine_similarity(y, x));
    CHECK(cosine_distance(x, y) == doctest::Approx(1.0 - cosine_similarity(x, y)));
  }
}

TEST_CASE("average_pool") {
  const Embedding e = unit({0.3, -0.2, 0.9});
  CHECK(average_pool(std::vector<Embedding>{e}) == e);
  const Embedding p = average_pool(std::vector<Embedding>{at_angle(0), at_angle(M_PI / 2)});
  CHECK(p[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(p[1] == doctest::Approx(std::sqrt(0.5)));
  CHECK(kind_of([] { average_pool(std::vector<Embedding>{at_angle(0), at_angle(M_PI)}); }) ==
        ErrorKind::kDegenerateVector);
  CHECK(kind_of([] { average_pool(std::vector<Embedding>{}); }) == ErrorKind::kEmptyPool);
}

TEST_CASE("agglomerative_cluster fixed cases") {
  const Embedding e = unit({1.0, 1.0});
  const std::vector<Embedding> same{e, e, e};
  CHECK(agglomerative_cluster(same, 0.7).clusters == std::vector<Cluster>{{0, 1, 2}});

  const std::vector<Embedding> antipodal{at_angle(0), at_angle(M_PI)};
  CHECK(agglomerative_cluster(antipodal, 0.7).clusters == std::vector<Cluster>{{0}, {1}});

  CHECK(agglomerative_cluster(std::vector<Embedding>{e}, 0.7).clusters ==
        std::vector<Cluster>{{0}});
  CHECK(kind_of([] { agglomerative_cluster(std::vector<Embedding>{}, 0.7); }) ==
        ErrorKind::kEmptyInput);
  CHECK(kind_of([&] { agglomerative_cluster(same, 0.0); }) == ErrorKind::kConfig);
}

TEST_CASE("average linkage differs from single linkage on a chain") {
  // Three points 50 degrees apart: neighbours merge under single linkage,
  // but the average distance to the far end exceeds the threshold.
  const std::vector<Embedding> chain{at_angle(0.0), at_angle(0.87), at_angle(1.74)};
  const double threshold = 1.0 - std::cos(0.9);
  CHECK(agglomerative_cluster(chain, threshold, Linkage::kSingle).clusters.size() == 1);
  CHECK(agglomerative_cluster(chain, threshold, Linkage::kAverage).clusters.size() == 2);
  CHECK(agglomerative_cluster(chain, threshold, Linkage::kComplete).clusters.size() == 2);
}

TEST_CASE("equidistant ties merge the smallest pair first") {
  // Four points at 90-degree spacing: all adjacent pairs tie.
  const std::vector<Embedding> square{at_angle(0), at_angle(M_PI / 2), at_angle(M_PI),
                                      at_angle(3 * M_PI / 2)};
  const Partition p = agglomerative_cluster(square, 1.0);
  CHECK(p.clusters == std::vector<Cluster>{{0, 1}, {2, 3}});
}

TEST_CASE("largest_cluster") {
  CHECK(largest_cluster(Partition{{{0, 1}, {2}}}) == Cluster{0, 1});
  CHECK(largest_cluster(Partition{{{0}, {1}}}) == Cluster{0});
  CHECK(largest_cluster(Partition{{{1}, {0}}}) == Cluster{0});
  CHECK(kind_of([] { largest_cluster(Partition{}); }) == ErrorKind::kEmptyInput);

  // 76 near-identical faces among 100.
  std::mt19937_64 rng(76);
  const Embedding centre = testutil::random_unit(rng, 32);
  std::vector<Embedding> faces;
  std::set<std::size_t> members;
  std::normal_distribution<double> n(0.0, 0.02);
  for (std::size_t i = 0; i < 100; ++i) {
    if (i % 4 == 3 && i < 96) {
      // Distractor orthogonal to the centre.
      const Embedding r = testutil::random_unit(rng, 32);
      const double c = cosine_similarity(r, centre);
      std::vector<double> v(32);
      for (std::size_t k = 0; k < 32; ++k) v[k] = r[k] - c * centre[k];
      faces.push_back(unit(std::move(v)));
      continue;
    }
    std::vector<double> v(centre.values().begin(), centre.values().end());
    for (auto& x : v) x += n(rng);
    faces.push_back(unit(std::move(v)));
    members.insert(i);
  }
  REQUIRE(members.size() == 76);
  const Partition p = agglomerative_cluster(faces, 0.7);
  const Cluster& big = largest_cluster(p);
  CHECK(big.size() == 76);
  CHECK(std::set<std::size_t>(big.begin(), big.end()) == members);
}

TEST_CASE("partition is canonical and covers every point") {
  std::mt19937_64 rng(11);
  for (int s = 0; s < 50; ++s) {
    const auto pts = clustered_points(rng);
    const Partition p = agglomerative_cluster(pts, 0.7);
    CHECK(p.point_count() == pts.size());
    std::vector<bool> seen(pts.size(), false);
    for (std::size_t c = 0; c < p.clusters.size(); ++c) {
      const auto& cl = p.clusters[c];
      REQUIRE_FALSE(cl.empty());
      CHECK(std::is_sorted(cl.begin(), cl.end()));
      if (c > 0) CHECK(p.clusters[c - 1].front() < cl.front());
      for (auto i : cl) {
        CHECK_FALSE(seen[i]);
        seen[i] = true;
      }
    }
  }
}

TEST_CASE("agglomerative_cluster matches the naive reference") {
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 220; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pts = clustered_points(rng);
    for (double threshold : {0.3, 0.7, 1.2}) {
      CHECK(agglomerative_cluster(pts, threshold) == naive_cluster_reference(pts, threshold));
      ++instances;
    }
  }
  CHECK(instances >= 600);
}

TEST_CASE("clusters at a lower threshold refine those at a higher one") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const auto pts = clustered_points(rng);
    const double thresholds[] = {0.2, 0.5, 0.9, 1.4};
    for (std::size_t k = 0; k + 1 < std::size(thresholds); ++k) {
      const Partition fine = agglomerative_cluster(pts, thresholds[k]);
      const Partition coarse = agglomerative_cluster(pts, thresholds[k + 1]);
      std::vector<std::size_t> owner(pts.size());
      for (std::size_t c = 0; c < coarse.clusters.size(); ++c) {
        for (auto i : coarse.clusters[c]) owner[i] = c;
      }
      for (const auto& cl : fine.clusters) {
        for (auto i : cl) CHECK(owner[i] == owner[cl.front()]);
      }
    }
  }
}
