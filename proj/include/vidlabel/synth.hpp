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

// Seeded synthetic evidence bundles with known ground truth, and the
// brute-force oracles the tests check the production code against.
//
// Randomness: a single std::mt19937_64 seeded with SynthConfig::seed.
// uniform() = (next() >> 11) * 2^-53; normal() is Box-Muller on two
// uniforms, using the cosine branch only. Everything is drawn in a fixed
// order, so a seed pins the bundle down byte for byte.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vidlabel/core.hpp"
#include "vidlabel/evidence.hpp"

namespace vidlabel {

struct FameProfile {
  // Search results depicting the named person.
  int search_cluster_size = 0;
  // Unrelated single faces.
  int distractor_count = 0;
  // Results depicting one other, unnamed person who also appears in the
  // videos (ground truth kUnknownName). Pollutes the search set.
  int impostor_cluster_size = 0;
  // False for names (e.g. from IMDB lists) of people who never appear.
  bool in_video = true;

  friend bool operator==(const FameProfile&, const FameProfile&) = default;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int n_identities = 6;
  // One entry per identity; empty means {40, 10, 0} for everybody.
  std::vector<FameProfile> fame_profile;
  int n_tracks_per_identity = 4;
  int detections_per_track = 3;
  // Angular std-dev (radians) of each detection, turn and search face
  // around its person's prototype.
  double embedding_noise = 0.1;
  // Angle between a person's web-image appearance and their mean
  // appearance in the videos.
  double domain_gap = 0.0;
  // Angular std-dev of each track's centre around the in-video appearance.
  double pose_spread = 0.0;
  double speech_fraction = 0.5;
  // Fraction of identities whose name is also written or spoken on screen.
  double mention_fraction = 1.0;
  int impostor_tracks = 3;    // per polluting impostor
  int n_unknown_tracks = 0;   // unnamed background people
  double co_window_fraction = 0.5;  // unknown tracks sharing a named slot
  int n_videos = 2;
  int face_dim = 64;
  int speaker_dim = 32;

  void check() const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

nlohmann::ordered_json to_json(const SynthConfig& cfg);
// Starts from `base` and overrides whatever fields the document names.
SynthConfig synth_config_from_json(const nlohmann::json& doc, SynthConfig base = {});

// 20 identities, 0.15 rad noise, mixed famous / less-famous / never-famous
// names, with a web-to-video domain gap large enough that Stage 1 leaves
// work for fusion and query expansion.
SynthConfig standard_fixture(std::uint64_t seed);

// Identities spanning a range of cluster sizes plus IMDB-only names whose
// largest search cluster is an impostor seen in the videos.
SynthConfig polluted_fixture(std::uint64_t seed);

// Named preset ("standard", "polluted", "default").
SynthConfig synth_preset(const std::string& name, std::uint64_t seed);

struct SynthOutput {
  EvidenceBundle bundle;
  GroundTruth ground_truth;
};

// Throws kConfig for impossible configurations (e.g. more than 100 search
// results for a name).
SynthOutput generate_bundle(const SynthConfig& cfg);

// Display name of the i-th synthetic identity.
std::string synth_identity_name(int i);

// Direct average-linkage agglomeration: every round recomputes the linkage
// of every cluster pair from the raw points. Same stopping and tie rules as
// agglomerative_cluster, no shared code.
Partition naive_cluster_reference(std::span<const Embedding> points, double threshold);

// Literal sum of precision at every correct position, over n_relevant.
double brute_force_ap(std::span<const bool> ranked_hits, std::size_t n_relevant);

}  // namespace vidlabel
