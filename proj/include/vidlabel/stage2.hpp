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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vidlabel/evidence.hpp"
#include "vidlabel/identity.hpp"
#include "vidlabel/stage1.hpp"

namespace vidlabel {

enum class Stage2Order { kFusionThenQe, kQeOnly, kFusionOnly };

std::string_view to_string(Stage2Order o);
std::optional<Stage2Order> stage2_order_from_string(std::string_view s);

struct Stage2Config {
  double tau_fuse = 0.7;
  double tau_qe = 0.7;
  Stage2Order order = Stage2Order::kFusionThenQe;
  int qe_iterations = 1;
  // Keep expanding until an iteration adds nothing (qe_iterations ignored).
  bool qe_until_fixpoint = false;

  void check() const;
};

inline double fuse_scores(double face_score, double voice_score) {
  return 0.5 * (face_score + voice_score);
}

// Speaker model for every tagged name whose tagged tracks overlap speech,
// ordered by name key.
std::vector<SpeakerModel> build_speaker_models(const EvidenceBundle& bundle,
                                               const TagSet& tags);

// Per untagged speaking track with overlapping turns: the identity (among
// those with both a face and a speaker model) maximising the fused score.
// No threshold applied. Ordered by track_id.
std::vector<Tag> best_fusion_matches(const EvidenceBundle& bundle,
                                     std::span<const Embedding> pooled, const TagSet& tags,
                                     std::span<const IdentityModel> face_models,
                                     std::span<const SpeakerModel> speaker_models);

std::vector<Tag> fusion_tag(const EvidenceBundle& bundle, const TagSet& tags,
                            std::span<const IdentityModel> face_models,
                            std::span<const SpeakerModel> speaker_models, double tau_fuse);
std::vector<Tag> fusion_tag(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                            const TagSet& tags, std::span<const IdentityModel> face_models,
                            std::span<const SpeakerModel> speaker_models, double tau_fuse);

// One model per tagged name: every detection of its tagged tracks plus its
// prior model embedding (when one exists), pooled with equal weight.
// Independent of tag order. Ordered by name key.
std::vector<IdentityModel> query_expand(const EvidenceBundle& bundle, const TagSet& tags,
                                        std::span<const IdentityModel> prior_models = {});

std::vector<Tag> qe_tag(const EvidenceBundle& bundle, const TagSet& tags,
                        std::span<const IdentityModel> expanded, double tau_qe);
std::vector<Tag> qe_tag(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                        const TagSet& tags, std::span<const IdentityModel> expanded,
                        double tau_qe);

// Stage-1 tags plus fusion and/or query-expansion tags per cfg.order. Input
// tags are never altered.
TagSet run_stage2(const EvidenceBundle& bundle, const TagSet& stage1,
                  std::span<const IdentityModel> face_models, const Stage2Config& cfg);
TagSet run_stage2(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                  const TagSet& stage1, std::span<const IdentityModel> face_models,
                  const Stage2Config& cfg);

}  // namespace vidlabel
