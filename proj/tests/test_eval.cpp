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

#include <algorithm>
#include <memory>
#include <random>
#include <set>

#include "test_util.hpp"
#include "vidlabel/error.hpp"
#include "vidlabel/eval.hpp"
#include "vidlabel/pipeline.hpp"
#include "vidlabel/synth.hpp"

using namespace vidlabel;

namespace {

Tag tag(std::string id, std::string name, double score = 1.0) {
  return {std::move(id), std::move(name), score, TagStage::kFamousModel};
}

std::string tid(int i) { return "t" + std::to_string(1000 + i); }

double ap_of(const std::vector<bool>& hits, std::size_t n) {
  auto flat = std::make_unique<bool[]>(hits.size());
  std::copy(hits.begin(), hits.end(), flat.get());
  return average_precision({flat.get(), hits.size()}, n);
}

double brute_ap_of(const std::vector<bool>& hits, std::size_t n) {
  auto flat = std::make_unique<bool[]>(hits.size());
  std::copy(hits.begin(), hits.end(), flat.get());
  return brute_force_ap({flat.get(), hits.size()}, n);
}

}  // namespace

TEST_CASE("score_tags conventions") {
  GroundTruth gt{{"a", "Jane Doe"}, {"b", "Jane Doe"}, {"c", "John Roe"}, {"d", "@unknown"}};

  const MetricReport none = score_tags(TagSet{}, gt);
  CHECK(none.precision == 1.0);
  CHECK(none.recall == 0.0);
  CHECK(none.counts.total_annotated == 3);
  CHECK(none.counts.classes_total == 2);

  const std::vector<Tag> tags{tag("a", "jane  DOE"), tag("c", "Jane Doe"), tag("d", "John Roe")};
  const MetricReport r = score_tags(tags, gt);
  CHECK(r.counts.true_tags == 1);
  CHECK(r.counts.false_tags == 2);
  CHECK(r.precision == doctest::Approx(1.0 / 3.0));
  CHECK(r.recall == doctest::Approx(1.0 / 3.0));
  CHECK(r.class_recall == doctest::Approx(0.5));

  try {
    score_tags(std::vector<Tag>{tag("zzz", "X")}, gt);
    FAIL("expected MissingGroundTruth");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingGroundTruth);
  }
}

TEST_CASE("class recall 61 of 66") {
  GroundTruth gt;
  std::vector<Tag> tags;
  for (int p = 0; p < 66; ++p) {
    gt[tid(p)] = "Person " + std::to_string(p);
    if (p < 61) tags.push_back(tag(tid(p), "Person " + std::to_string(p)));
  }
  const MetricReport r = score_tags(tags, gt);
  CHECK(r.counts.classes_hit == 61);
  CHECK(r.class_recall == doctest::Approx(61.0 / 66.0));
  CHECK(r.class_recall == doctest::Approx(0.92).epsilon(0.005));
}

TEST_CASE("all-correct tags covering 86% of tracks") {
  GroundTruth gt;
  std::vector<Tag> tags;
  for (int i = 0; i < 500; ++i) {
    gt[tid(i)] = "P" + std::to_string(i % 7);
    if (i < 430) tags.push_back(tag(tid(i), "P" + std::to_string(i % 7)));
  }
  const MetricReport r = score_tags(tags, gt);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == doctest::Approx(0.86));
}

TEST_CASE("score_tags agrees with set arithmetic") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    GroundTruth gt;
    std::vector<Tag> tags;
    std::uniform_int_distribution<int> person(0, 6), coin(0, 3);
    for (int i = 0; i < 40; ++i) {
      const int p = person(rng);
      gt[tid(i)] = p == 6 ? std::string(kUnknownName) : "P" + std::to_string(p);
      if (coin(rng) != 0) tags.push_back(tag(tid(i), "P" + std::to_string(person(rng) % 6)));
    }
    std::set<std::string> correct, real, classes, hit;
    for (const auto& [id, n] : gt) {
      if (n != kUnknownName) {
        real.insert(id);
        classes.insert(n);
      }
    }
    for (const auto& t : tags) {
      if (gt[t.track_id] == t.name) {
        correct.insert(t.track_id);
        hit.insert(t.name);
      }
    }
    const MetricReport r = score_tags(tags, gt);
    CHECK(r.counts.true_tags == correct.size());
    CHECK(r.counts.false_tags == tags.size() - correct.size());
    CHECK(r.counts.total_annotated == real.size());
    CHECK(r.counts.classes_hit == hit.size());
    CHECK(r.counts.classes_total == classes.size());
  }
}

TEST_CASE("average precision examples") {
  CHECK(ap_of({true, false, true}, 2) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(std::abs(ap_of({true, false, true}, 2) - 0.8333333333) < 1e-9);
  CHECK(ap_of({true, true, true}, 3) == 1.0);
  CHECK(ap_of({true}, 1) == 1.0);
  CHECK(ap_of({false, false}, 1) == 0.0);
  CHECK(ap_of({}, 0) == 0.0);
  CHECK(brute_ap_of({true, false, true}, 2) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(brute_ap_of({true}, 1) == 1.0);
  CHECK(brute_ap_of({false, false}, 1) == 0.0);
}

TEST_CASE("average precision equals the brute-force oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    std::vector<bool> hits(n);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) positives += (hits[i] = rng() % 2 == 0);
    const std::size_t relevant =
        positives + std::uniform_int_distribution<std::size_t>(0, 5)(rng);
    CHECK(ap_of(hits, relevant) == doctest::Approx(brute_ap_of(hits, relevant)).epsilon(1e-12));
  }
}

TEST_CASE("mAP over tag sets equals a per-identity brute-force oracle") {
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    GroundTruth gt;
    TagSet tags;
    std::uniform_int_distribution<int> person(0, 4);
    std::uniform_int_distribution<int> score(0, 9);  // coarse, so ties happen
    for (int i = 0; i < 30; ++i) {
      const int p = person(rng);
      gt[tid(i)] = p == 4 ? std::string(kUnknownName) : "P" + std::to_string(p);
      if (rng() % 3 != 0) tags.insert(tag(tid(i), "P" + std::to_string(person(rng) % 4), score(rng) / 10.0));
    }
    double sum = 0.0;
    int identities = 0;
    for (int p = 0; p < 4; ++p) {
      const std::string name = "P" + std::to_string(p);
      std::size_t relevant = 0;
      for (const auto& [id, n] : gt) relevant += n == name;
      if (relevant == 0) continue;
      std::vector<Tag> mine;
      for (const auto& [id, t] : tags) {
        if (t.name == name) mine.push_back(t);
      }
      std::sort(mine.begin(), mine.end(), [](const Tag& a, const Tag& b) {
        return a.score > b.score || (a.score == b.score && a.track_id < b.track_id);
      });
      std::vector<bool> hits;
      for (const auto& t : mine) hits.push_back(gt[t.track_id] == name);
      sum += brute_ap_of(hits, relevant);
      ++identities;
    }
    const double expected = identities == 0 ? 0.0 : sum / identities;
    const double got = mean_average_precision(tags, gt);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("mAP is 1 exactly when every relevant item is retrieved first") {
  GroundTruth gt{{"a", "X"}, {"b", "X"}, {"c", "Y"}, {"d", "@unknown"}};
  TagSet perfect;
  perfect.insert(tag("a", "X", 0.9));
  perfect.insert(tag("b", "X", 0.8));
  perfect.insert(tag("c", "Y", 0.7));
  CHECK(mean_average_precision(perfect, gt) == 1.0);
  TagSet with_tail = perfect;
  with_tail.insert(tag("d", "X", 0.1));
  CHECK(mean_average_precision(with_tail, gt) == 1.0);
  TagSet misordered = perfect;
  misordered.insert(tag("d", "Y", 0.95));
  CHECK(mean_average_precision(misordered, gt) < 1.0);
  TagSet missing;
  missing.insert(tag("a", "X", 0.9));
  missing.insert(tag("c", "Y", 0.7));
  CHECK(mean_average_precision(missing, gt) == doctest::Approx(0.75));
}

TEST_CASE("calibrate_threshold examples") {
  GroundTruth gt{{"w1", "B"}, {"w2", "B"}, {"c1", "A"}, {"c2", "A"}};
  const std::vector<Tag> cands{tag("w1", "A", 0.55), tag("w2", "A", 0.61), tag("c1", "A", 0.95),
                               tag("c2", "A", 0.70)};
  CHECK(calibrate_threshold(cands, gt) == doctest::Approx(0.610001).epsilon(1e-12));
  const std::vector<Tag> all_good{tag("c1", "A", 0.2), tag("c2", "A", 0.3)};
  CHECK(calibrate_threshold(all_good, gt) == -1.0);
  CHECK(calibrate_threshold(std::vector<Tag>{}, gt) == -1.0);
}

TEST_CASE("calibrated thresholds give precision 1 on their own candidates") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    GroundTruth gt;
    std::vector<Tag> cands;
    std::uniform_real_distribution<double> s(-1.0, 1.0);
    for (int i = 0; i < 25; ++i) {
      gt[tid(i)] = rng() % 2 ? "A" : "B";
      cands.push_back(tag(tid(i), "A", s(rng)));
    }
    const double tau = calibrate_threshold(cands, gt);
    std::vector<Tag> kept;
    for (const auto& c : cands) {
      if (c.score >= tau) kept.push_back(c);
    }
    CHECK(score_tags(kept, gt).precision == 1.0);
  }
}

TEST_CASE("fame census") {
  EvidenceBundle b;
  b.face_dim = 256;
  b.speaker_dim = 2;
  const char* famous[] = {"F1", "F2", "F3"};
  const char* less[] = {"L1", "L2"};
  std::size_t axis = 0;
  for (const char* n : famous) {
    testutil::add_search(b, testutil::fame_fixture(n, 35, 0, 256, axis));
    axis += 40;
  }
  for (const char* n : less) {
    testutil::add_search(b, testutil::fame_fixture(n, 2, 3, 256, axis));
    axis += 10;
  }
  testutil::add_search(b, SearchResultSet{"E", {}});
  for (const auto& [key, s] : b.search) b.names.push_back({s.name, NameSource::kImdb, {}, {}});
  b.names.push_back({"F1", NameSource::kImdb, {}, {}});  // repeated name counts once

  const auto fame = classify_all(b, FamousConfig{});
  auto census = fame_census(b.names, fame);
  CHECK(census[NameSource::kImdb] == FameCounts{3, 2, 1});
  CHECK(census.size() == 1);

  std::vector<NameOccurrence> shuffled = b.names;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(fame_census(shuffled, fame) == census);

  EvidenceBundle empty;
  empty.face_dim = 2;
  empty.speaker_dim = 2;
  for (const char* n : {"a", "b", "c", "d"}) {
    testutil::add_search(empty, SearchResultSet{n, {}});
    empty.names.push_back({n, NameSource::kSpoken, "v", 1.0});
  }
  CHECK(fame_census(empty, FamousConfig{})[NameSource::kSpoken] == FameCounts{0, 0, 4});
}

TEST_CASE("alpha sweep") {
  const SynthOutput out = generate_bundle(polluted_fixture(21));
  PipelineSettings settings;
  const std::vector<int> alphas{5, 10, 20, 30, 40, 60};
  const auto points = alpha_sweep(out.bundle, out.ground_truth, alphas, settings);
  REQUIRE(points.size() == alphas.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(points[i].alpha == alphas[i]);
    CHECK(points[i].reports.size() == 3);
  }
  for (const char* combo : {kComboStage1, kComboFusion, kComboFusionQe}) {
    for (std::size_t i = 1; i < points.size(); ++i) {
      CHECK(points[i].reports.at(combo).recall <= points[i - 1].reports.at(combo).recall);
    }
  }

  const std::vector<int> one{30};
  const auto single = alpha_sweep(out.bundle, out.ground_truth, one, settings);
  const std::string csv = sweep_to_csv(single);
  CHECK(csv.rfind("alpha,stage_combo,precision,recall\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("30,stage1+fusion+qe,") != std::string::npos);

  try {
    alpha_sweep(out.bundle, out.ground_truth, std::vector<int>{}, settings);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
  }

  // Alpha above every cluster: nobody famous, no famous-model tags.
  const auto huge = alpha_sweep(out.bundle, out.ground_truth, std::vector<int>{100}, settings);
  FamousConfig fc;
  fc.alpha = 100;
  CHECK(build_famous_models(out.bundle, classify_all(out.bundle, fc), fc).empty());
  CHECK(huge[0].reports.at(kComboStage1).counts.true_tags <=
        points.back().reports.at(kComboStage1).counts.true_tags);
}

TEST_CASE("pipeline calibration gives precision 1 on the calibration bundle") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const SynthOutput out = generate_bundle(standard_fixture(seed));
    PipelineSettings settings;
    apply(calibrate_pipeline(out.bundle, out.ground_truth, settings), settings);
    const PipelineResult r = run_pipeline(out.bundle, settings);
    CHECK(score_tags(r.stage1, out.ground_truth).precision == 1.0);
    CHECK(score_tags(r.tags, out.ground_truth).precision == 1.0);
  }
}
