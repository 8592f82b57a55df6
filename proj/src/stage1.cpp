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

#include "vidlabel/stage1.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "vidlabel/error.hpp"
#include "vidlabel/kernels.hpp"

namespace vidlabel {

std::string_view to_string(TagStage s) {
  switch (s) {
    case TagStage::kFamousModel: return "famous_model";
    case TagStage::kCorroboration: return "corroboration";
    case TagStage::kFusion: return "fusion";
    case TagStage::kQueryExpansion: return "query_expansion";
  }
  return "famous_model";
}

std::optional<TagStage> tag_stage_from_string(std::string_view s) {
  for (TagStage t : {TagStage::kFamousModel, TagStage::kCorroboration, TagStage::kFusion,
                     TagStage::kQueryExpansion}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

TagSet::TagSet(std::span<const Tag> tags) {
  for (const auto& t : tags) insert(t);
}

bool TagSet::insert(Tag tag) {
  auto key = tag.track_id;
  return tags_.emplace(std::move(key), std::move(tag)).second;
}

bool TagSet::contains(std::string_view track_id) const {
  return tags_.find(track_id) != tags_.end();
}

const Tag* TagSet::find(std::string_view track_id) const {
  auto it = tags_.find(track_id);
  return it == tags_.end() ? nullptr : &it->second;
}

std::vector<Tag> TagSet::tags() const {
  std::vector<Tag> out;
  out.reserve(tags_.size());
  for (const auto& [id, tag] : tags_) out.push_back(tag);
  return out;
}

std::string tags_to_jsonl(const TagSet& tags) {
  std::string out;
  for (const auto& [id, tag] : tags) {
    nlohmann::ordered_json line;
    line["track_id"] = tag.track_id;
    line["name"] = tag.name;
    line["score"] = tag.score;
    line["stage"] = std::string(to_string(tag.stage));
    out += line.dump();
    out += '\n';
  }
  return out;
}

TagSet tags_from_jsonl(std::string_view text) {
  TagSet out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "tags line " + std::to_string(lineno);
    try {
      const auto doc = nlohmann::json::parse(line);
      auto stage = tag_stage_from_string(doc.at("stage").get<std::string>());
      if (!stage) throw Error(ErrorKind::kParse, where + ": unknown stage");
      Tag tag{doc.at("track_id").get<std::string>(), doc.at("name").get<std::string>(),
              doc.at("score").get<double>(), *stage};
      if (!out.insert(std::move(tag))) {
        throw Error(ErrorKind::kValidation, where + ": track tagged twice");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    }
  }
  return out;
}

void Stage1Config::check() const {
  if (!is_valid_threshold(tau_face)) throw Error(ErrorKind::kConfig, "tau_face must lie in [-1, 1]");
  if (!is_valid_threshold(tau_verify)) throw Error(ErrorKind::kConfig, "tau_verify must lie in [-1, 1]");
  if (top_m_verify < 1) throw Error(ErrorKind::kConfig, "top_m_verify must be >= 1");
  if (!(delta_window >= 0.0)) throw Error(ErrorKind::kConfig, "delta_window must be >= 0");
}

std::vector<Embedding> pool_tracks(const EvidenceBundle& bundle) {
  std::vector<std::vector<Embedding>> groups;
  groups.reserve(bundle.tracks.size());
  for (const auto& t : bundle.tracks) groups.push_back(t.detections);
  return kernels::pool_groups(groups);
}

std::vector<Tag> best_model_matches(const EvidenceBundle& bundle,
                                    std::span<const Embedding> pooled,
                                    std::span<const IdentityModel> models,
                                    const TagSet& exclude, TagStage stage) {
  if (models.empty()) return {};

  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return models[a].name < models[b].name;
  });
  std::vector<Embedding> model_rows;
  model_rows.reserve(models.size());
  for (std::size_t m : order) model_rows.push_back(models[m].embedding);

  std::vector<std::size_t> candidates;
  std::vector<Embedding> track_rows;
  for (std::size_t i = 0; i < bundle.tracks.size(); ++i) {
    if (exclude.contains(bundle.tracks[i].track_id)) continue;
    candidates.push_back(i);
    track_rows.push_back(pooled[i]);
  }
  const auto scores = kernels::similarity_matrix(kernels::EmbeddingMatrix(track_rows),
                                                 kernels::EmbeddingMatrix(model_rows));

  std::vector<Tag> out;
  out.reserve(candidates.size());
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols; ++c) {
      if (scores.at(r, c) > scores.at(r, best)) best = c;
    }
    out.push_back({bundle.tracks[candidates[r]].track_id, models[order[best]].name,
                   scores.at(r, best), stage});
  }
  std::sort(out.begin(), out.end(),
            [](const Tag& a, const Tag& b) { return a.track_id < b.track_id; });
  return out;
}

std::vector<Tag> tag_famous(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                            std::span<const IdentityModel> models, double tau_face,
                            const TagSet& exclude) {
  auto matches = best_model_matches(bundle, pooled, models, exclude, TagStage::kFamousModel);
  std::erase_if(matches, [&](const Tag& t) { return t.score < tau_face; });
  return matches;
}

std::vector<Tag> tag_famous(const EvidenceBundle& bundle,
                            std::span<const IdentityModel> models, double tau_face) {
  return tag_famous(bundle, pool_tracks(bundle), models, tau_face);
}

std::optional<double> verification_score(const Embedding& track,
                                         const SearchResultSet& results, int top_m) {
  const std::size_t m =
      std::min(results.entries.size(), static_cast<std::size_t>(std::max(top_m, 0)));
  std::optional<double> best;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = cosine_similarity(track, results.entries[i].embedding);
    if (!best || s > *best) best = s;
  }
  return best;
}

std::vector<Tag> corroborate(const NameOccurrence& occurrence, const EvidenceBundle& bundle,
                             std::span<const Embedding> pooled, const Stage1Config& cfg,
                             const TagSet& already_tagged) {
  const auto window = tracks_in_window(occurrence, bundle.tracks, cfg.delta_window);
  const SearchResultSet* results = bundle.find_search(occurrence.name);
  if (results == nullptr) {
    throw Error(ErrorKind::kValidation, "no search results for '" + occurrence.name + "'");
  }

  std::optional<Tag> best;
  for (const FaceTrack* track : window) {
    if (already_tagged.contains(track->track_id)) continue;
    const auto index = static_cast<std::size_t>(track - bundle.tracks.data());
    const auto score = verification_score(pooled[index], *results, cfg.top_m_verify);
    if (!score || *score < cfg.tau_verify) continue;
    // Window is ordered by track_id, so strict > keeps the smallest id on ties.
    if (!best || *score > best->score) {
      best = Tag{track->track_id, results->name, *score, TagStage::kCorroboration};
    }
  }
  if (!best) return {};
  return {*best};
}

std::vector<Tag> corroborate(const NameOccurrence& occurrence, const EvidenceBundle& bundle,
                             const Stage1Config& cfg) {
  return corroborate(occurrence, bundle, pool_tracks(bundle), cfg, TagSet{});
}

std::vector<const NameOccurrence*> corroboration_queue(const EvidenceBundle& bundle,
                                                       const FameMap& fame) {
  struct Item {
    const NameOccurrence* occ;
    std::string key;
    std::size_t position;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < bundle.names.size(); ++i) {
    const auto& occ = bundle.names[i];
    if (occ.source == NameSource::kImdb) continue;
    auto key = normalize_name(occ.name);
    auto it = fame.find(key);
    if (it == fame.end() || it->second.status.fame != Fame::kLessFamous) continue;
    items.push_back({&occ, std::move(key), i});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    const std::string& va = a.occ->video_id ? *a.occ->video_id : std::string();
    const std::string& vb = b.occ->video_id ? *b.occ->video_id : std::string();
    return std::tie(*a.occ->time, a.key, va, a.position) <
           std::tie(*b.occ->time, b.key, vb, b.position);
  });
  std::vector<const NameOccurrence*> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.occ);
  return out;
}

TagSet run_stage1(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                  const FameMap& fame, std::span<const IdentityModel> models,
                  const Stage1Config& cfg) {
  cfg.check();
  TagSet tags(tag_famous(bundle, pooled, models, cfg.tau_face));
  for (const NameOccurrence* occ : corroboration_queue(bundle, fame)) {
    for (auto& tag : corroborate(*occ, bundle, pooled, cfg, tags)) tags.insert(std::move(tag));
  }
  return tags;
}

TagSet run_stage1(const EvidenceBundle& bundle, const FameMap& fame,
                  std::span<const IdentityModel> models, const Stage1Config& cfg) {
  return run_stage1(bundle, pool_tracks(bundle), fame, models, cfg);
}

}  // namespace vidlabel
