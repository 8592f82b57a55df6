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

#include "vidlabel/eval.hpp"

#include <algorithm>
#include <exception>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

#include "vidlabel/error.hpp"
#include "vidlabel/pipeline.hpp"

namespace vidlabel {

nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json doc;
  doc["precision"] = r.precision;
  doc["recall"] = r.recall;
  doc["class_recall"] = r.class_recall;
  doc["mAP"] = r.mean_ap;
  doc["counts"] = {{"true_tags", r.counts.true_tags},
                   {"false_tags", r.counts.false_tags},
                   {"total_annotated", r.counts.total_annotated},
                   {"classes_hit", r.counts.classes_hit},
                   {"classes_total", r.counts.classes_total}};
  return doc;
}

namespace {

bool is_unknown(const std::string& name) { return name == kUnknownName; }

const std::string& truth_for(const std::string& track_id, const GroundTruth& gt) {
  auto it = gt.find(track_id);
  if (it == gt.end()) {
    throw Error(ErrorKind::kMissingGroundTruth, "no ground truth for track '" + track_id + "'");
  }
  return it->second;
}

}  // namespace

bool tag_is_correct(const Tag& tag, const GroundTruth& gt) {
  const std::string& truth = truth_for(tag.track_id, gt);
  return !is_unknown(truth) && normalize_name(truth) == normalize_name(tag.name);
}

MetricReport score_tags(std::span<const Tag> tags, const GroundTruth& gt) {
  MetricReport r;
  std::set<std::string> classes;
  for (const auto& [track_id, name] : gt) {
    if (is_unknown(name)) continue;
    ++r.counts.total_annotated;
    classes.insert(normalize_name(name));
  }
  r.counts.classes_total = classes.size();

  std::set<std::string> hit;
  for (const auto& tag : tags) {
    if (tag_is_correct(tag, gt)) {
      ++r.counts.true_tags;
      hit.insert(normalize_name(tag.name));
    } else {
      ++r.counts.false_tags;
    }
  }
  r.counts.classes_hit = hit.size();

  const std::size_t made = r.counts.true_tags + r.counts.false_tags;
  r.precision = made == 0 ? 1.0
                          : static_cast<double>(r.counts.true_tags) / static_cast<double>(made);
  r.recall = r.counts.total_annotated == 0
                 ? 0.0
                 : static_cast<double>(r.counts.true_tags) /
                       static_cast<double>(r.counts.total_annotated);
  r.class_recall = r.counts.classes_total == 0
                       ? 0.0
                       : static_cast<double>(r.counts.classes_hit) /
                             static_cast<double>(r.counts.classes_total);
  return r;
}

MetricReport score_tags(const TagSet& tags, const GroundTruth& gt) {
  const auto list = tags.tags();
  return score_tags(std::span<const Tag>(list), gt);
}

MetricReport evaluate(const TagSet& tags, const GroundTruth& gt) {
  MetricReport r = score_tags(tags, gt);
  r.mean_ap = mean_average_precision(tags, gt);
  return r;
}

double average_precision(std::span<const bool> ranked_hits, std::size_t n_relevant) {
  if (n_relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < ranked_hits.size(); ++k) {
    if (!ranked_hits[k]) continue;
    ++correct;
    sum += static_cast<double>(correct) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(n_relevant);
}

std::vector<IdentityRanking> rank_by_identity(const TagSet& tags, const GroundTruth& gt) {
  std::map<std::string, std::size_t> relevant;
  for (const auto& [track_id, name] : gt) {
    if (!is_unknown(name)) ++relevant[normalize_name(name)];
  }

  std::map<std::string, std::vector<const Tag*>> by_name;
  for (const auto& [track_id, tag] : tags) by_name[normalize_name(tag.name)].push_back(&tag);

  std::vector<IdentityRanking> out;
  for (const auto& [name, n_relevant] : relevant) {
    IdentityRanking ranking{name, {}, n_relevant};
    if (auto it = by_name.find(name); it != by_name.end()) {
      auto& list = it->second;
      std::sort(list.begin(), list.end(), [](const Tag* a, const Tag* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->track_id < b->track_id;
      });
      for (const Tag* t : list) ranking.hits.push_back(tag_is_correct(*t, gt));
    }
    out.push_back(std::move(ranking));
  }
  return out;
}

double mean_average_precision(std::span<const IdentityRanking> rankings) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& r : rankings) {
    if (r.n_relevant == 0) continue;
    auto flat = std::make_unique<bool[]>(r.hits.size());
    std::copy(r.hits.begin(), r.hits.end(), flat.get());
    sum += average_precision({flat.get(), r.hits.size()}, r.n_relevant);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

double mean_average_precision(const TagSet& tags, const GroundTruth& gt) {
  const auto rankings = rank_by_identity(tags, gt);
  return mean_average_precision(rankings);
}

double calibrate_threshold(std::span<const Tag> candidates, const GroundTruth& gt) {
  std::optional<double> worst;
  for (const auto& c : candidates) {
    if (tag_is_correct(c, gt)) continue;
    if (!worst || c.score > *worst) worst = c.score;
  }
  return worst ? *worst + kCalibrationEpsilon : -1.0;
}

std::map<NameSource, FameCounts> fame_census(std::span<const NameOccurrence> names,
                                             const FameMap& fame) {
  std::map<NameSource, std::set<std::string>> seen;
  std::map<NameSource, FameCounts> out;
  for (const auto& occ : names) {
    const std::string key = normalize_name(occ.name);
    auto it = fame.find(key);
    if (it == fame.end() || !seen[occ.source].insert(key).second) continue;
    FameCounts& c = out[occ.source];
    switch (it->second.status.fame) {
      case Fame::kFamous: ++c.famous; break;
      case Fame::kLessFamous: ++c.less_famous; break;
      case Fame::kNeverFamous: ++c.never_famous; break;
    }
  }
  return out;
}

std::map<NameSource, FameCounts> fame_census(const EvidenceBundle& bundle,
                                             const FamousConfig& cfg) {
  return fame_census(bundle.names, classify_all(bundle, cfg));
}

std::vector<SweepPoint> alpha_sweep(const EvidenceBundle& bundle, const GroundTruth& gt,
                                    std::span<const int> alphas,
                                    const PipelineSettings& settings) {
  if (alphas.empty()) throw Error(ErrorKind::kConfig, "alpha sweep range is empty");
  settings.check();
  const auto pooled = pool_tracks(bundle);

  std::vector<SweepPoint> out(alphas.size());
  std::vector<std::exception_ptr> failures(alphas.size());
  const auto n = static_cast<std::ptrdiff_t>(alphas.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      PipelineSettings s = settings;
      s.famous.alpha = alphas[static_cast<std::size_t>(i)];
      s.famous.check();
      const FameMap fame = classify_all(bundle, s.famous);
      const auto models = build_famous_models(bundle, fame, s.famous);
      const TagSet stage1 = run_stage1(bundle, pooled, fame, models, s.stage1);

      Stage2Config fusion = s.stage2;
      fusion.order = Stage2Order::kFusionOnly;
      Stage2Config full = s.stage2;
      full.order = Stage2Order::kFusionThenQe;

      SweepPoint& point = out[static_cast<std::size_t>(i)];
      point.alpha = s.famous.alpha;
      point.reports[kComboStage1] = evaluate(stage1, gt);
      point.reports[kComboFusion] =
          evaluate(run_stage2(bundle, pooled, stage1, models, fusion), gt);
      point.reports[kComboFusionQe] =
          evaluate(run_stage2(bundle, pooled, stage1, models, full), gt);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

std::string sweep_to_csv(std::span<const SweepPoint> sweep) {
  std::ostringstream out;
  out.precision(17);
  out << "alpha,stage_combo,precision,recall\n";
  for (const auto& point : sweep) {
    for (const char* combo : {kComboStage1, kComboFusion, kComboFusionQe}) {
      auto it = point.reports.find(combo);
      if (it == point.reports.end()) continue;
      out << point.alpha << ',' << combo << ',' << it->second.precision << ','
          << it->second.recall << '\n';
    }
  }
  return out.str();
}

}  // namespace vidlabel
