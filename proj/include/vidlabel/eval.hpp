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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidlabel/evidence.hpp"
#include "vidlabel/identity.hpp"
#include "vidlabel/stage1.hpp"

namespace vidlabel {

struct PipelineSettings;

struct MetricCounts {
  std::size_t true_tags = 0;
  std::size_t false_tags = 0;
  std::size_t total_annotated = 0;  // tracks with a real (non-unknown) name
  std::size_t classes_hit = 0;
  std::size_t classes_total = 0;

  friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

struct MetricReport {
  double precision = 1.0;  // 1.0 when no tags were made
  double recall = 0.0;
  double class_recall = 0.0;
  double mean_ap = 0.0;
  MetricCounts counts;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

nlohmann::ordered_json to_json(const MetricReport& r);

// True iff the ground truth names the same person (case/space-insensitive)
// and is not kUnknownName. Throws kMissingGroundTruth for unlisted tracks.
bool tag_is_correct(const Tag& tag, const GroundTruth& gt);

// Precision, recall and class recall; mean_ap is left at zero.
MetricReport score_tags(const TagSet& tags, const GroundTruth& gt);
MetricReport score_tags(std::span<const Tag> tags, const GroundTruth& gt);

// score_tags plus mean_average_precision.
MetricReport evaluate(const TagSet& tags, const GroundTruth& gt);

// Mean over correct positions k of (correct within first k) / k, divided
// by n_relevant. Zero when n_relevant is zero.
double average_precision(std::span<const bool> ranked_hits, std::size_t n_relevant);

struct IdentityRanking {
  std::string name;        // normalised
  std::vector<bool> hits;  // tags for `name`, best score first
  std::size_t n_relevant = 0;
};

// One ranking per ground-truth identity with at least one annotated track.
// Tags are ordered by descending score, then track_id.
std::vector<IdentityRanking> rank_by_identity(const TagSet& tags, const GroundTruth& gt);

double mean_average_precision(std::span<const IdentityRanking> rankings);
double mean_average_precision(const TagSet& tags, const GroundTruth& gt);

inline constexpr double kCalibrationEpsilon = 1e-6;

// Smallest threshold that admits no incorrect candidate: the highest
// incorrect score plus kCalibrationEpsilon, or -1 when every candidate is
// correct.
double calibrate_threshold(std::span<const Tag> candidates, const GroundTruth& gt);

struct FameCounts {
  std::size_t famous = 0;
  std::size_t less_famous = 0;
  std::size_t never_famous = 0;

  friend bool operator==(const FameCounts&, const FameCounts&) = default;
};

// Distinct names per occurrence source, split by fame.
std::map<NameSource, FameCounts> fame_census(std::span<const NameOccurrence> names,
                                             const FameMap& fame);
std::map<NameSource, FameCounts> fame_census(const EvidenceBundle& bundle,
                                             const FamousConfig& cfg);

inline constexpr const char* kComboStage1 = "stage1";
inline constexpr const char* kComboFusion = "stage1+fusion";
inline constexpr const char* kComboFusionQe = "stage1+fusion+qe";

struct SweepPoint {
  int alpha = 0;
  std::map<std::string, MetricReport> reports;  // keyed by combo name
};

// Whole pipeline re-run for each alpha, reported for Stage 1, Stage 1 +
// fusion and Stage 1 + fusion + QE. Output follows the order of `alphas`.
std::vector<SweepPoint> alpha_sweep(const EvidenceBundle& bundle, const GroundTruth& gt,
                                    std::span<const int> alphas,
                                    const PipelineSettings& settings);

// "alpha,stage_combo,precision,recall" rows.
std::string sweep_to_csv(std::span<const SweepPoint> sweep);

}  // namespace vidlabel
