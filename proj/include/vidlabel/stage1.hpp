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

#include "vidlabel/evidence.hpp"
#include "vidlabel/identity.hpp"

namespace vidlabel {

enum class TagStage { kFamousModel, kCorroboration, kFusion, kQueryExpansion };

std::string_view to_string(TagStage s);
std::optional<TagStage> tag_stage_from_string(std::string_view s);

struct Tag {
  std::string track_id;
  std::string name;
  double score = 0.0;
  TagStage stage = TagStage::kFamousModel;

  friend bool operator==(const Tag&, const Tag&) = default;
};

// At most one tag per track. Iteration is ordered by track_id.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(std::span<const Tag> tags);

  // False (and no change) when the track already carries a tag.
  bool insert(Tag tag);
  bool contains(std::string_view track_id) const;
  const Tag* find(std::string_view track_id) const;

  std::size_t size() const noexcept { return tags_.size(); }
  bool empty() const noexcept { return tags_.empty(); }
  std::vector<Tag> tags() const;

  auto begin() const { return tags_.begin(); }
  auto end() const { return tags_.end(); }

  friend bool operator==(const TagSet&, const TagSet&) = default;

 private:
  std::map<std::string, Tag, std::less<>> tags_;
};

// One tag per line: {"track_id","name","score","stage"}, ordered by track_id.
std::string tags_to_jsonl(const TagSet& tags);
TagSet tags_from_jsonl(std::string_view text);

// Thresholds live in [-1, 1 + 1e-6]: -1 admits everything, and a calibrated
// threshold sits 1e-6 above the best-scoring mistake.
inline bool is_valid_threshold(double t) { return t >= -1.0 && t <= 1.0 + 1e-6; }

struct Stage1Config {
  double tau_face = 0.5;
  double tau_verify = 0.7;
  int top_m_verify = 20;
  double delta_window = kDefaultWindowSeconds;

  void check() const;
};

// Pooled (mean, then normalised) detection embedding of every track, aligned
// with bundle.tracks.
std::vector<Embedding> pool_tracks(const EvidenceBundle& bundle);

// Argmax model for every track not in `exclude`, without thresholding. Ties
// go to the lexicographically smallest model name. Ordered by track_id.
std::vector<Tag> best_model_matches(const EvidenceBundle& bundle,
                                    std::span<const Embedding> pooled,
                                    std::span<const IdentityModel> models,
                                    const TagSet& exclude, TagStage stage);

std::vector<Tag> tag_famous(const EvidenceBundle& bundle,
                            std::span<const IdentityModel> models, double tau_face);
std::vector<Tag> tag_famous(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                            std::span<const IdentityModel> models, double tau_face,
                            const TagSet& exclude = {});

// Highest 1-to-1 similarity between a track and the first top_m entries;
// empty when there are no entries.
std::optional<double> verification_score(const Embedding& track,
                                         const SearchResultSet& results, int top_m);

// At most one corroboration tag for the occurrence: the best-scoring
// untagged window track reaching tau_verify (ties by track_id). The name
// must be known to the bundle's search map.
std::vector<Tag> corroborate(const NameOccurrence& occurrence, const EvidenceBundle& bundle,
                             const Stage1Config& cfg);
std::vector<Tag> corroborate(const NameOccurrence& occurrence, const EvidenceBundle& bundle,
                             std::span<const Embedding> pooled, const Stage1Config& cfg,
                             const TagSet& already_tagged);

// Written/spoken occurrences of less-famous names in processing order:
// time, then name key, then video, then input position.
std::vector<const NameOccurrence*> corroboration_queue(const EvidenceBundle& bundle,
                                                       const FameMap& fame);

TagSet run_stage1(const EvidenceBundle& bundle, const FameMap& fame,
                  std::span<const IdentityModel> models, const Stage1Config& cfg);
TagSet run_stage1(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                  const FameMap& fame, std::span<const IdentityModel> models,
                  const Stage1Config& cfg);

}  // namespace vidlabel
