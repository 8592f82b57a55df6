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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vidlabel/core.hpp"
#include "vidlabel/evidence.hpp"

namespace vidlabel {

enum class Fame { kFamous, kLessFamous, kNeverFamous };

std::string_view to_string(Fame f);

struct FameStatus {
  Fame fame = Fame::kNeverFamous;
  std::size_t largest_cluster_size = 0;

  friend bool operator==(const FameStatus&, const FameStatus&) = default;
};

struct FamousConfig {
  // A name is famous when its largest search-result cluster has strictly
  // more than `alpha` faces.
  int alpha = 30;
  double cluster_distance = 0.7;
  int top_k_results = 100;

  void check() const;
};

enum class ModelProvenance { kSearchCluster, kQueryExpansion };

std::string_view to_string(ModelProvenance p);

struct IdentityModel {
  std::string name;
  Embedding embedding;
  ModelProvenance provenance = ModelProvenance::kSearchCluster;
  std::size_t support_count = 0;
};

struct SpeakerModel {
  std::string name;
  Embedding embedding;
  std::size_t support_count = 0;
};

FameStatus classify_famous(const SearchResultSet& results, const FamousConfig& cfg);

// Pools the largest cluster of the top results. Throws kNotFamous unless
// classify_famous says Famous.
IdentityModel build_face_model(std::string_view name, const SearchResultSet& results,
                               const FamousConfig& cfg);

// Pools the speaker embeddings of every turn overlapping a speaking segment
// of the given tracks (each turn counted once). Empty when no turn overlaps.
std::optional<SpeakerModel> build_speaker_model(
    std::string_view name, std::span<const FaceTrack* const> tagged_tracks,
    const EvidenceBundle& bundle);

struct NameFame {
  std::string display;
  FameStatus status;
};

// Fame of every searched name, keyed by normalize_name.
using FameMap = std::map<std::string, NameFame>;

FameMap classify_all(const EvidenceBundle& bundle, const FamousConfig& cfg);

// Face models for every Famous entry, ordered by name key.
std::vector<IdentityModel> build_famous_models(const EvidenceBundle& bundle,
                                               const FameMap& fame,
                                               const FamousConfig& cfg);

}  // namespace vidlabel
