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

#include "vidlabel/identity.hpp"

#include <algorithm>
#include <exception>
#include <set>

#include "vidlabel/error.hpp"

namespace vidlabel {

std::string_view to_string(Fame f) {
  switch (f) {
    case Fame::kFamous: return "famous";
    case Fame::kLessFamous: return "less_famous";
    case Fame::kNeverFamous: return "never_famous";
  }
  return "never_famous";
}

std::string_view to_string(ModelProvenance p) {
  return p == ModelProvenance::kSearchCluster ? "search_cluster" : "query_expansion";
}

void FamousConfig::check() const {
  if (alpha < 0) throw Error(ErrorKind::kConfig, "alpha must be >= 0");
  if (!(cluster_distance > 0.0 && cluster_distance <= 2.0)) {
    throw Error(ErrorKind::kConfig, "cluster_distance must lie in (0, 2]");
  }
  if (top_k_results < 1) throw Error(ErrorKind::kConfig, "top_k_results must be >= 1");
}

namespace {

struct Clustered {
  std::vector<Embedding> points;
  Cluster largest;
};

std::optional<Clustered> cluster_top_results(const SearchResultSet& results,
                                             const FamousConfig& cfg) {
  cfg.check();
  if (results.entries.empty()) return std::nullopt;
  const std::size_t k =
      std::min(results.entries.size(), static_cast<std::size_t>(cfg.top_k_results));
  Clustered out;
  out.points.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.points.push_back(results.entries[i].embedding);
  out.largest = largest_cluster(agglomerative_cluster(out.points, cfg.cluster_distance));
  return out;
}

FameStatus status_of(const std::optional<Clustered>& c, const FamousConfig& cfg) {
  if (!c) return {Fame::kNeverFamous, 0};
  const std::size_t size = c->largest.size();
  const bool famous = size > static_cast<std::size_t>(cfg.alpha);
  return {famous ? Fame::kFamous : Fame::kLessFamous, size};
}

}  // namespace

FameStatus classify_famous(const SearchResultSet& results, const FamousConfig& cfg) {
  return status_of(cluster_top_results(results, cfg), cfg);
}

IdentityModel build_face_model(std::string_view name, const SearchResultSet& results,
                               const FamousConfig& cfg) {
  const auto clustered = cluster_top_results(results, cfg);
  const FameStatus status = status_of(clustered, cfg);
  if (status.fame != Fame::kFamous) {
    throw Error(ErrorKind::kNotFamous,
                std::string(name) + " is " + std::string(to_string(status.fame)));
  }
  std::vector<const Embedding*> members;
  members.reserve(clustered->largest.size());
  for (std::size_t i : clustered->largest) members.push_back(&clustered->points[i]);
  return {std::string(name), average_pool(members), ModelProvenance::kSearchCluster,
          members.size()};
}

std::optional<SpeakerModel> build_speaker_model(
    std::string_view name, std::span<const FaceTrack* const> tagged_tracks,
    const EvidenceBundle& bundle) {
  std::set<const SpeechTurn*> seen;
  std::vector<const SpeechTurn*> turns;
  for (const FaceTrack* t : tagged_tracks) {
    for (const SpeechTurn* u : overlapping_turns(*t, bundle.turns)) {
      if (seen.insert(u).second) turns.push_back(u);
    }
  }
  if (turns.empty()) return std::nullopt;
  // Pool in a fixed order so the model does not depend on track order.
  std::sort(turns.begin(), turns.end(), [](const SpeechTurn* a, const SpeechTurn* b) {
    return a->turn_id < b->turn_id;
  });
  std::vector<const Embedding*> embeddings;
  embeddings.reserve(turns.size());
  for (const SpeechTurn* u : turns) embeddings.push_back(&u->speaker_embedding);
  return SpeakerModel{std::string(name), average_pool(embeddings), embeddings.size()};
}

FameMap classify_all(const EvidenceBundle& bundle, const FamousConfig& cfg) {
  cfg.check();
  std::vector<const SearchResultSet*> sets;
  sets.reserve(bundle.search.size());
  for (const auto& [key, set] : bundle.search) sets.push_back(&set);

  std::vector<FameStatus> statuses(sets.size());
  std::vector<std::exception_ptr> failures(sets.size());
  const auto n = static_cast<std::ptrdiff_t>(sets.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      statuses[i] = classify_famous(*sets[i], cfg);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  FameMap out;
  std::size_t i = 0;
  for (const auto& [key, set] : bundle.search) {
    out.emplace(key, NameFame{set.name, statuses[i++]});
  }
  return out;
}

std::vector<IdentityModel> build_famous_models(const EvidenceBundle& bundle,
                                               const FameMap& fame,
                                               const FamousConfig& cfg) {
  std::vector<IdentityModel> models;
  for (const auto& [key, entry] : fame) {
    if (entry.status.fame != Fame::kFamous) continue;
    const SearchResultSet* set = bundle.find_search(key);
    if (set == nullptr) continue;
    models.push_back(build_face_model(entry.display, *set, cfg));
  }
  return models;
}

}  // namespace vidlabel
