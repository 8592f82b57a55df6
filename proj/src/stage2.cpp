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

#include "vidlabel/stage2.hpp"

#include <algorithm>
#include <map>

#include "vidlabel/error.hpp"
#include "vidlabel/kernels.hpp"

namespace vidlabel {

std::string_view to_string(Stage2Order o) {
  switch (o) {
    case Stage2Order::kFusionThenQe: return "fusion_then_qe";
    case Stage2Order::kQeOnly: return "qe_only";
    case Stage2Order::kFusionOnly: return "fusion_only";
  }
  return "fusion_then_qe";
}

std::optional<Stage2Order> stage2_order_from_string(std::string_view s) {
  for (Stage2Order o :
       {Stage2Order::kFusionThenQe, Stage2Order::kQeOnly, Stage2Order::kFusionOnly}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

void Stage2Config::check() const {
  if (!is_valid_threshold(tau_fuse)) throw Error(ErrorKind::kConfig, "tau_fuse must lie in [-1, 1]");
  if (!is_valid_threshold(tau_qe)) throw Error(ErrorKind::kConfig, "tau_qe must lie in [-1, 1]");
  if (qe_iterations < 1) throw Error(ErrorKind::kConfig, "qe_iterations must be >= 1");
}

namespace {

struct TaggedGroup {
  std::string display;
  std::vector<const FaceTrack*> tracks;  // ascending track_id
};

// Tagged tracks grouped by name key. TagSet iterates by track_id, so each
// group's track list comes out sorted.
std::map<std::string, TaggedGroup> group_by_name(const EvidenceBundle& bundle,
                                                 const TagSet& tags) {
  std::map<std::string, TaggedGroup> groups;
  for (const auto& [track_id, tag] : tags) {
    const FaceTrack* track = bundle.find_track(track_id);
    if (track == nullptr) {
      throw Error(ErrorKind::kValidation, "tag references unknown track '" + track_id + "'");
    }
    auto& g = groups[normalize_name(tag.name)];
    if (g.tracks.empty()) g.display = tag.name;
    g.tracks.push_back(track);
  }
  return groups;
}

std::size_t track_index(const EvidenceBundle& bundle, const FaceTrack* t) {
  return static_cast<std::size_t>(t - bundle.tracks.data());
}

}  // namespace

std::vector<SpeakerModel> build_speaker_models(const EvidenceBundle& bundle,
                                               const TagSet& tags) {
  std::vector<SpeakerModel> out;
  for (const auto& [key, group] : group_by_name(bundle, tags)) {
    if (auto model = build_speaker_model(group.display, group.tracks, bundle)) {
      out.push_back(std::move(*model));
    }
  }
  return out;
}

std::vector<Tag> best_fusion_matches(const EvidenceBundle& bundle,
                                     std::span<const Embedding> pooled, const TagSet& tags,
                                     std::span<const IdentityModel> face_models,
                                     std::span<const SpeakerModel> speaker_models) {
  std::map<std::string, const SpeakerModel*> voices;
  for (const auto& s : speaker_models) voices.emplace(normalize_name(s.name), &s);

  // Identities holding both models, ordered by display name for tie-breaks.
  std::vector<std::pair<const IdentityModel*, const SpeakerModel*>> identities;
  for (const auto& f : face_models) {
    auto it = voices.find(normalize_name(f.name));
    if (it != voices.end()) identities.emplace_back(&f, it->second);
  }
  if (identities.empty()) return {};
  std::sort(identities.begin(), identities.end(),
            [](const auto& a, const auto& b) { return a.first->name < b.first->name; });

  std::vector<const FaceTrack*> candidates;
  std::vector<Embedding> face_rows;
  std::vector<std::vector<Embedding>> voice_groups;
  for (const auto& t : bundle.tracks) {
    if (!t.speaks() || tags.contains(t.track_id)) continue;
    const auto turns = overlapping_turns(t, bundle.turns);
    if (turns.empty()) continue;
    std::vector<Embedding> voice;
    voice.reserve(turns.size());
    for (const SpeechTurn* u : turns) voice.push_back(u->speaker_embedding);
    candidates.push_back(&t);
    face_rows.push_back(pooled[track_index(bundle, &t)]);
    voice_groups.push_back(std::move(voice));
  }
  if (candidates.empty()) return {};

  std::vector<Embedding> face_models_rows;
  std::vector<Embedding> voice_models_rows;
  for (const auto& [f, s] : identities) {
    face_models_rows.push_back(f->embedding);
    voice_models_rows.push_back(s->embedding);
  }
  const auto face_scores = kernels::similarity_matrix(
      kernels::EmbeddingMatrix(face_rows), kernels::EmbeddingMatrix(face_models_rows));
  const auto voice_scores = kernels::similarity_matrix(
      kernels::EmbeddingMatrix(kernels::pool_groups(voice_groups)),
      kernels::EmbeddingMatrix(voice_models_rows));

  std::vector<Tag> out;
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    std::size_t best = 0;
    double best_score = fuse_scores(face_scores.at(r, 0), voice_scores.at(r, 0));
    for (std::size_t c = 1; c < identities.size(); ++c) {
      const double fused = fuse_scores(face_scores.at(r, c), voice_scores.at(r, c));
      if (fused > best_score) {
        best = c;
        best_score = fused;
      }
    }
    out.push_back({candidates[r]->track_id, identities[best].first->name, best_score,
                   TagStage::kFusion});
  }
  std::sort(out.begin(), out.end(),
            [](const Tag& a, const Tag& b) { return a.track_id < b.track_id; });
  return out;
}

std::vector<Tag> fusion_tag(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                            const TagSet& tags, std::span<const IdentityModel> face_models,
                            std::span<const SpeakerModel> speaker_models, double tau_fuse) {
  auto matches = best_fusion_matches(bundle, pooled, tags, face_models, speaker_models);
  std::erase_if(matches, [&](const Tag& t) { return t.score < tau_fuse; });
  return matches;
}

std::vector<Tag> fusion_tag(const EvidenceBundle& bundle, const TagSet& tags,
                            std::span<const IdentityModel> face_models,
                            std::span<const SpeakerModel> speaker_models, double tau_fuse) {
  return fusion_tag(bundle, pool_tracks(bundle), tags, face_models, speaker_models, tau_fuse);
}

std::vector<IdentityModel> query_expand(const EvidenceBundle& bundle, const TagSet& tags,
                                        std::span<const IdentityModel> prior_models) {
  std::map<std::string, const IdentityModel*> priors;
  for (const auto& m : prior_models) priors.emplace(normalize_name(m.name), &m);

  std::vector<IdentityModel> out;
  for (const auto& [key, group] : group_by_name(bundle, tags)) {
    std::vector<const Embedding*> pool;
    std::string display = group.display;
    if (auto it = priors.find(key); it != priors.end()) {
      pool.push_back(&it->second->embedding);
      display = it->second->name;
    }
    for (const FaceTrack* t : group.tracks) {
      for (const auto& d : t->detections) pool.push_back(&d);
    }
    out.push_back({std::move(display), average_pool(pool), ModelProvenance::kQueryExpansion,
                   pool.size()});
  }
  return out;
}

std::vector<Tag> qe_tag(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                        const TagSet& tags, std::span<const IdentityModel> expanded,
                        double tau_qe) {
  auto matches =
      best_model_matches(bundle, pooled, expanded, tags, TagStage::kQueryExpansion);
  std::erase_if(matches, [&](const Tag& t) { return t.score < tau_qe; });
  return matches;
}

std::vector<Tag> qe_tag(const EvidenceBundle& bundle, const TagSet& tags,
                        std::span<const IdentityModel> expanded, double tau_qe) {
  return qe_tag(bundle, pool_tracks(bundle), tags, expanded, tau_qe);
}

TagSet run_stage2(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                  const TagSet& stage1, std::span<const IdentityModel> face_models,
                  const Stage2Config& cfg) {
  cfg.check();
  TagSet tags = stage1;

  if (cfg.order != Stage2Order::kQeOnly) {
    const auto speakers = build_speaker_models(bundle, tags);
    for (auto& t : fusion_tag(bundle, pooled, tags, face_models, speakers, cfg.tau_fuse)) {
      tags.insert(std::move(t));
    }
  }

  if (cfg.order != Stage2Order::kFusionOnly && !tags.empty()) {
    const std::size_t rounds = cfg.qe_until_fixpoint ? bundle.tracks.size() + 1
                                                     : static_cast<std::size_t>(cfg.qe_iterations);
    for (std::size_t round = 0; round < rounds; ++round) {
      const auto expanded = query_expand(bundle, tags, face_models);
      const auto added = qe_tag(bundle, pooled, tags, expanded, cfg.tau_qe);
      if (added.empty()) break;
      for (const auto& t : added) tags.insert(t);
    }
  }
  return tags;
}

TagSet run_stage2(const EvidenceBundle& bundle, const TagSet& stage1,
                  std::span<const IdentityModel> face_models, const Stage2Config& cfg) {
  return run_stage2(bundle, pool_tracks(bundle), stage1, face_models, cfg);
}

}  // namespace vidlabel
