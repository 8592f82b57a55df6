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

#include "test_util.hpp"
#include "vidlabel/error.hpp"
#include "vidlabel/identity.hpp"
#include "vidlabel/synth.hpp"

using namespace vidlabel;
using testutil::at_angle;

TEST_CASE("fame classification of the 76 / 2 / empty fixtures") {
  const FamousConfig cfg;  // alpha 30
  const auto famous = testutil::fame_fixture("A", 76, 24);
  const auto less = testutil::fame_fixture("B", 2, 98);
  const SearchResultSet empty{"C", {}};
  REQUIRE(famous.entries.size() == 100);
  REQUIRE(less.entries.size() == 100);

  CHECK(classify_famous(famous, cfg) == FameStatus{Fame::kFamous, 76});
  CHECK(classify_famous(less, cfg) == FameStatus{Fame::kLessFamous, 2});
  CHECK(classify_famous(empty, cfg) == FameStatus{Fame::kNeverFamous, 0});
}

TEST_CASE("alpha is a strict threshold") {
  const auto s = testutil::fame_fixture("A", 30, 10);
  FamousConfig cfg;
  cfg.alpha = 30;
  CHECK(classify_famous(s, cfg).fame == Fame::kLessFamous);
  cfg.alpha = 29;
  CHECK(classify_famous(s, cfg).fame == Fame::kFamous);
}

TEST_CASE("only the top_k results are clustered") {
  // 10 distractors first, then a 40-face cluster.
  std::vector<Embedding> faces;
  for (std::size_t i = 0; i < 10; ++i) faces.push_back(testutil::basis(100 + i, 256));
  for (std::size_t i = 0; i < 40; ++i) faces.push_back(testutil::mix(0, 1 + i, 0.2, 256));
  const auto s = testutil::search("A", faces);
  FamousConfig cfg;
  CHECK(classify_famous(s, cfg).fame == Fame::kFamous);
  cfg.top_k_results = 30;
  CHECK(classify_famous(s, cfg) == FameStatus{Fame::kLessFamous, 20});
}

TEST_CASE("config checks") {
  FamousConfig cfg;
  cfg.alpha = -1;
  CHECK_THROWS_AS(cfg.check(), Error);
  cfg = {};
  cfg.cluster_distance = 0.0;
  CHECK_THROWS_AS(cfg.check(), Error);
  cfg = {};
  cfg.top_k_results = 0;
  CHECK_THROWS_AS(cfg.check(), Error);
}

TEST_CASE("face model of identical entries") {
  const Embedding e = testutil::unit({0.2, -0.4, 0.9});
  const auto s = testutil::search("A", std::vector<Embedding>(100, e));
  const IdentityModel m = build_face_model("A", s, FamousConfig{});
  CHECK(testutil::close(m.embedding, e));
  CHECK(m.support_count == 100);
  CHECK(m.provenance == ModelProvenance::kSearchCluster);
}

TEST_CASE("face model equals mean-then-normalise of the largest cluster") {
  const auto s = testutil::fame_fixture("A", 76, 24);
  const IdentityModel m = build_face_model("A", s, FamousConfig{});
  CHECK(m.support_count == 76);

  // Independent recomputation: members are the entries close to axis 0.
  std::vector<double> sum(256, 0.0);
  for (const auto& e : s.entries) {
    if (e.embedding[0] < 0.5) continue;
    for (std::size_t k = 0; k < 256; ++k) sum[k] += e.embedding[k];
  }
  double norm = 0.0;
  for (double x : sum) norm += x * x;
  norm = std::sqrt(norm);
  for (std::size_t k = 0; k < 256; ++k) CHECK(m.embedding[k] == doctest::Approx(sum[k] / norm));
}

TEST_CASE("face model requires fame") {
  try {
    build_face_model("B", testutil::fame_fixture("B", 2, 98), FamousConfig{});
    FAIL("expected NotFamous");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNotFamous);
  }
  CHECK_THROWS_AS(build_face_model("C", SearchResultSet{"C", {}}, FamousConfig{}), Error);
}

TEST_CASE("speaker models") {
  EvidenceBundle b;
  b.face_dim = 2;
  b.speaker_dim = 2;
  b.tracks.push_back(testutil::track("t1", "v", 0, 10, {at_angle(0)}, {{1, 9}}));
  b.tracks.push_back(testutil::track("t2", "v", 20, 30, {at_angle(0)}, {{21, 29}}));
  b.tracks.push_back(testutil::track("t3", "v", 40, 50, {at_angle(0)}));
  b.turns.push_back(testutil::turn("u1", "v", 2, 8, at_angle(0)));
  b.turns.push_back(testutil::turn("u2", "v", 22, 28, at_angle(M_PI / 2)));

  const FaceTrack* one[] = {&b.tracks[0]};
  auto m = build_speaker_model("A", one, b);
  REQUIRE(m.has_value());
  CHECK(m->embedding == at_angle(0));
  CHECK(m->support_count == 1);

  const FaceTrack* silent[] = {&b.tracks[2]};
  CHECK_FALSE(build_speaker_model("A", silent, b).has_value());

  const FaceTrack* both[] = {&b.tracks[1], &b.tracks[0]};
  m = build_speaker_model("A", both, b);
  REQUIRE(m.has_value());
  CHECK(m->embedding[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(m->embedding[1] == doctest::Approx(std::sqrt(0.5)));

  // A turn shared by two tracks counts once.
  b.tracks[1].speaking = {{21, 29}};
  b.turns[0].t_end = 25;
  const FaceTrack* shared[] = {&b.tracks[0], &b.tracks[1]};
  m = build_speaker_model("A", shared, b);
  CHECK(m->support_count == 2);
}

TEST_CASE("classify_all and build_famous_models") {
  EvidenceBundle b;
  b.face_dim = 256;
  b.speaker_dim = 2;
  testutil::add_search(b, testutil::fame_fixture("Zed Famous", 50, 10, 256, 0));
  testutil::add_search(b, testutil::fame_fixture("Amy Famous", 40, 0, 256, 128));
  testutil::add_search(b, testutil::fame_fixture("Less Known", 3, 5, 256, 200));
  testutil::add_search(b, SearchResultSet{"Nobody", {}});

  const FameMap fame = classify_all(b, FamousConfig{});
  REQUIRE(fame.size() == 4);
  CHECK(fame.at("zed famous").display == "Zed Famous");
  CHECK(fame.at("zed famous").status.fame == Fame::kFamous);
  CHECK(fame.at("amy famous").status.fame == Fame::kFamous);
  CHECK(fame.at("less known").status == FameStatus{Fame::kLessFamous, 3});
  CHECK(fame.at("nobody").status.fame == Fame::kNeverFamous);

  const auto models = build_famous_models(b, fame, FamousConfig{});
  REQUIRE(models.size() == 2);
  CHECK(models[0].name == "Amy Famous");
  CHECK(models[1].name == "Zed Famous");
}

TEST_CASE("the famous set shrinks as alpha grows") {
  const SynthOutput out = generate_bundle(polluted_fixture(3));
  std::size_t previous = out.bundle.search.size() + 1;
  for (int alpha : {0, 2, 5, 10, 20, 30, 40, 60, 100}) {
    FamousConfig cfg;
    cfg.alpha = alpha;
    std::size_t famous = 0;
    for (const auto& [key, nf] : classify_all(out.bundle, cfg)) {
      famous += nf.status.fame == Fame::kFamous;
    }
    CHECK(famous <= previous);
    previous = famous;
  }
  CHECK(previous == 0);
}
