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

#include "vidlabel/pipeline.hpp"

#include <algorithm>
#include <system_error>

namespace vidlabel {

void PipelineSettings::check() const {
  famous.check();
  stage1.check();
  stage2.check();
}

PipelineResult run_pipeline(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                            const PipelineSettings& settings) {
  settings.check();
  PipelineResult r;
  r.fame = classify_all(bundle, settings.famous);
  r.face_models = build_famous_models(bundle, r.fame, settings.famous);
  r.stage1 = run_stage1(bundle, pooled, r.fame, r.face_models, settings.stage1);
  r.tags = run_stage2(bundle, pooled, r.stage1, r.face_models, settings.stage2);
  if (settings.stage2.order != Stage2Order::kQeOnly) {
    r.speaker_models = build_speaker_models(bundle, r.stage1);
  }
  if (settings.stage2.order != Stage2Order::kFusionOnly) {
    r.expanded_models = query_expand(bundle, r.tags, r.face_models);
  }
  return r;
}

PipelineResult run_pipeline(const EvidenceBundle& bundle, const PipelineSettings& settings) {
  return run_pipeline(bundle, pool_tracks(bundle), settings);
}

nlohmann::ordered_json to_json(const Thresholds& t) {
  nlohmann::ordered_json doc;
  doc["tau_face"] = t.tau_face;
  doc["tau_verify"] = t.tau_verify;
  doc["tau_fuse"] = t.tau_fuse;
  doc["tau_qe"] = t.tau_qe;
  return doc;
}

Thresholds thresholds_from_json(const nlohmann::json& doc) {
  Thresholds t;
  try {
    t.tau_face = doc.at("tau_face").get<double>();
    t.tau_verify = doc.at("tau_verify").get<double>();
    t.tau_fuse = doc.at("tau_fuse").get<double>();
    t.tau_qe = doc.at("tau_qe").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("thresholds: ") + e.what());
  }
  for (double v : {t.tau_face, t.tau_verify, t.tau_fuse, t.tau_qe}) {
    if (!is_valid_threshold(v)) throw Error(ErrorKind::kConfig, "thresholds: value out of range");
  }
  return t;
}

void apply(const Thresholds& t, PipelineSettings& settings) {
  settings.stage1.tau_face = t.tau_face;
  settings.stage1.tau_verify = t.tau_verify;
  settings.stage2.tau_fuse = t.tau_fuse;
  settings.stage2.tau_qe = t.tau_qe;
}

namespace {

// Every (occurrence, untagged window track) pair the corroboration step
// could score, regardless of order.
std::vector<Tag> verification_candidates(const EvidenceBundle& bundle,
                                         std::span<const Embedding> pooled,
                                         const FameMap& fame, const Stage1Config& cfg,
                                         const TagSet& famous_tags) {
  std::vector<Tag> out;
  for (const NameOccurrence* occ : corroboration_queue(bundle, fame)) {
    const SearchResultSet* results = bundle.find_search(occ->name);
    if (results == nullptr) continue;
    for (const FaceTrack* t : tracks_in_window(*occ, bundle.tracks, cfg.delta_window)) {
      if (famous_tags.contains(t->track_id)) continue;
      const auto index = static_cast<std::size_t>(t - bundle.tracks.data());
      if (auto s = verification_score(pooled[index], *results, cfg.top_m_verify)) {
        out.push_back({t->track_id, results->name, *s, TagStage::kCorroboration});
      }
    }
  }
  return out;
}

}  // namespace

Thresholds calibrate_pipeline(const EvidenceBundle& bundle, const GroundTruth& gt,
                              const PipelineSettings& settings) {
  settings.check();
  const auto pooled = pool_tracks(bundle);
  const FameMap fame = classify_all(bundle, settings.famous);
  const auto models = build_famous_models(bundle, fame, settings.famous);

  Thresholds t{settings.stage1.tau_face, settings.stage1.tau_verify, settings.stage2.tau_fuse,
               settings.stage2.tau_qe};

  const auto face_cands =
      best_model_matches(bundle, pooled, models, TagSet{}, TagStage::kFamousModel);
  t.tau_face = calibrate_threshold(face_cands, gt);
  const TagSet famous_tags(tag_famous(bundle, pooled, models, t.tau_face));

  t.tau_verify = calibrate_threshold(
      verification_candidates(bundle, pooled, fame, settings.stage1, famous_tags), gt);

  Stage1Config s1 = settings.stage1;
  s1.tau_face = t.tau_face;
  s1.tau_verify = t.tau_verify;
  TagSet tags = run_stage1(bundle, pooled, fame, models, s1);

  const Stage2Config& s2 = settings.stage2;
  if (s2.order != Stage2Order::kQeOnly) {
    const auto speakers = build_speaker_models(bundle, tags);
    const auto cands = best_fusion_matches(bundle, pooled, tags, models, speakers);
    t.tau_fuse = calibrate_threshold(cands, gt);
    for (const auto& c : cands) {
      if (c.score >= t.tau_fuse) tags.insert(c);
    }
  }

  if (s2.order != Stage2Order::kFusionOnly) {
    // A higher threshold admits fewer expansion tags, which changes the
    // models of later rounds, so iterate until the threshold settles.
    const std::size_t rounds = s2.qe_until_fixpoint ? bundle.tracks.size() + 1
                                                    : static_cast<std::size_t>(s2.qe_iterations);
    double tau = -1.0;
    for (int pass = 0; pass < 100; ++pass) {
      TagSet current = tags;
      std::vector<Tag> cands;
      for (std::size_t round = 0; round < rounds && !current.empty(); ++round) {
        const auto expanded = query_expand(bundle, current, models);
        const auto matches =
            best_model_matches(bundle, pooled, expanded, current, TagStage::kQueryExpansion);
        cands.insert(cands.end(), matches.begin(), matches.end());
        bool added = false;
        for (const auto& m : matches) {
          if (m.score >= tau) added = current.insert(m) || added;
        }
        if (!added) break;
      }
      const double next = std::max(tau, calibrate_threshold(cands, gt));
      if (next == tau) break;
      tau = next;
    }
    t.tau_qe = tau;
  }
  return t;
}

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

template <typename T>
void read_field(const json& obj, const char* key, T& field, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    field = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, where + "." + key + ": " + e.what());
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  const json& s = doc.at(key);
  if (!s.is_object()) throw Error(ErrorKind::kConfig, std::string(key) + ": expected an object");
  return s;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::kConfig, "config: expected an object");
  PipelineConfig cfg;

  std::string path;
  auto read_path = [&](const char* key) -> std::optional<fs::path> {
    if (!doc.contains(key)) return std::nullopt;
    read_field(doc, key, path, "config");
    return resolve(base_dir, path);
  };
  if (auto p = read_path("bundle")) cfg.bundle = *p;
  cfg.ground_truth = read_path("ground_truth");
  cfg.thresholds = read_path("thresholds");
  cfg.tags = read_path("tags");
  if (auto p = read_path("output_dir")) cfg.output_dir = *p;
  read_field(doc, "seed", cfg.seed, "config");

  auto& s = cfg.settings;
  const json& famous = section(doc, "famous");
  read_field(famous, "alpha", s.famous.alpha, "famous");
  read_field(famous, "cluster_distance", s.famous.cluster_distance, "famous");
  read_field(famous, "top_k_results", s.famous.top_k_results, "famous");

  const json& stage1 = section(doc, "stage1");
  read_field(stage1, "tau_face", s.stage1.tau_face, "stage1");
  read_field(stage1, "tau_verify", s.stage1.tau_verify, "stage1");
  read_field(stage1, "top_m_verify", s.stage1.top_m_verify, "stage1");
  read_field(stage1, "delta_window", s.stage1.delta_window, "stage1");

  const json& stage2 = section(doc, "stage2");
  read_field(stage2, "tau_fuse", s.stage2.tau_fuse, "stage2");
  read_field(stage2, "tau_qe", s.stage2.tau_qe, "stage2");
  read_field(stage2, "qe_iterations", s.stage2.qe_iterations, "stage2");
  read_field(stage2, "qe_until_fixpoint", s.stage2.qe_until_fixpoint, "stage2");
  if (stage2.contains("order")) {
    std::string order;
    read_field(stage2, "order", order, "stage2");
    auto o = stage2_order_from_string(order);
    if (!o) throw Error(ErrorKind::kConfig, "stage2.order: unknown value '" + order + "'");
    s.stage2.order = *o;
  }

  const json& eval = section(doc, "eval");
  read_field(eval, "metrics", cfg.metrics, "eval");
  read_field(eval, "sweep", cfg.sweep, "eval");

  const json& synth = section(doc, "synth");
  std::string preset = "standard";
  read_field(synth, "preset", preset, "synth");
  try {
    cfg.synth = synth_config_from_json(synth, synth_preset(preset, cfg.seed));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("synth: ") + e.what());
  }

  // An explicit thresholds file replaces the inline values.
  if (cfg.thresholds) apply(thresholds_from_json(read_json_file(*cfg.thresholds)), s);
  s.check();
  return cfg;
}

nlohmann::ordered_json to_json(const PipelineConfig& cfg) {
  const auto& s = cfg.settings;
  nlohmann::ordered_json doc;
  doc["famous"] = {{"alpha", s.famous.alpha},
                   {"cluster_distance", s.famous.cluster_distance},
                   {"top_k_results", s.famous.top_k_results}};
  doc["stage1"] = {{"tau_face", s.stage1.tau_face},
                   {"tau_verify", s.stage1.tau_verify},
                   {"top_m_verify", s.stage1.top_m_verify},
                   {"delta_window", s.stage1.delta_window}};
  doc["stage2"] = {{"tau_fuse", s.stage2.tau_fuse},
                   {"tau_qe", s.stage2.tau_qe},
                   {"order", std::string(to_string(s.stage2.order))},
                   {"qe_iterations", s.stage2.qe_iterations},
                   {"qe_until_fixpoint", s.stage2.qe_until_fixpoint}};
  doc["eval"] = {{"metrics", cfg.metrics}, {"sweep", cfg.sweep}};
  doc["seed"] = cfg.seed;
  return doc;
}

PipelineConfig load_config(const fs::path& path) {
  return config_from_json(read_json_file(path), path.parent_path());
}

ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return kExitConfig;
    case ErrorKind::kIo: return kExitIo;
    default: return kExitValidation;
  }
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const nlohmann::ordered_json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

EvidenceBundle load_input_bundle(const PipelineConfig& cfg) {
  if (cfg.bundle.empty()) throw Error(ErrorKind::kConfig, "no bundle path configured");
  return load_bundle(cfg.bundle);
}

std::optional<GroundTruth> input_ground_truth(const PipelineConfig& cfg,
                                              const EvidenceBundle& bundle) {
  if (cfg.ground_truth) return load_ground_truth(*cfg.ground_truth);
  return bundle.ground_truth;
}

GroundTruth require_ground_truth(const PipelineConfig& cfg, const EvidenceBundle& bundle,
                                 const char* command) {
  auto gt = input_ground_truth(cfg, bundle);
  if (!gt) throw Error(ErrorKind::kConfig, std::string(command) + " needs ground truth");
  return *gt;
}

nlohmann::ordered_json model_json(const std::string& name, const Embedding& e,
                                  std::size_t support) {
  nlohmann::ordered_json m;
  m["name"] = name;
  m["support_count"] = support;
  m["embedding"] = e.values();
  return m;
}

nlohmann::ordered_json census_json(const EvidenceBundle& bundle, const FameMap& fame) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [source, c] : fame_census(bundle.names, fame)) {
    doc[std::string(to_string(source))] = {{"famous", c.famous},
                                           {"less_famous", c.less_famous},
                                           {"never_famous", c.never_famous}};
  }
  return doc;
}

std::string final_combo(Stage2Order order) {
  switch (order) {
    case Stage2Order::kFusionThenQe: return kComboFusionQe;
    case Stage2Order::kFusionOnly: return kComboFusion;
    case Stage2Order::kQeOnly: return "stage1+qe";
  }
  return kComboFusionQe;
}

}  // namespace

void cmd_run(const PipelineConfig& cfg) {
  cfg.settings.check();
  const EvidenceBundle bundle = load_input_bundle(cfg);
  const auto gt = cfg.metrics ? input_ground_truth(cfg, bundle) : std::nullopt;
  const PipelineResult result = run_pipeline(bundle, cfg.settings);

  nlohmann::ordered_json models;
  models["face_models"] = nlohmann::ordered_json::array();
  for (const auto& m : result.face_models) {
    models["face_models"].push_back(model_json(m.name, m.embedding, m.support_count));
  }
  models["speaker_models"] = nlohmann::ordered_json::array();
  for (const auto& m : result.speaker_models) {
    models["speaker_models"].push_back(model_json(m.name, m.embedding, m.support_count));
  }
  models["expanded_models"] = nlohmann::ordered_json::array();
  for (const auto& m : result.expanded_models) {
    models["expanded_models"].push_back(model_json(m.name, m.embedding, m.support_count));
  }

  nlohmann::ordered_json report;
  report["config"] = to_json(cfg);
  report["fame"] = census_json(bundle, result.fame);
  report["counts"] = {{"tracks", bundle.tracks.size()},
                      {"face_models", result.face_models.size()},
                      {"stage1_tags", result.stage1.size()},
                      {"final_tags", result.tags.size()}};
  if (gt) {
    const MetricReport final_metrics = evaluate(result.tags, *gt);
    report["precision"] = final_metrics.precision;
    report["recall"] = final_metrics.recall;
    report["metrics"] = {{kComboStage1, to_json(evaluate(result.stage1, *gt))},
                         {final_combo(cfg.settings.stage2.order), to_json(final_metrics)}};
  }

  ensure_dir(cfg.output_dir);
  write_text_file(cfg.output_dir / "tags.jsonl", tags_to_jsonl(result.tags));
  write_json(cfg.output_dir / "models.json", models);
  write_json(cfg.output_dir / "report.json", report);
}

void cmd_sweep(const PipelineConfig& cfg) {
  if (cfg.sweep.empty()) throw Error(ErrorKind::kConfig, "sweep range is empty");
  cfg.settings.check();
  const EvidenceBundle bundle = load_input_bundle(cfg);
  const GroundTruth gt = require_ground_truth(cfg, bundle, "sweep");
  const auto points = alpha_sweep(bundle, gt, cfg.sweep, cfg.settings);

  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    nlohmann::ordered_json entry;
    entry["alpha"] = p.alpha;
    for (const char* combo : {kComboStage1, kComboFusion, kComboFusionQe}) {
      if (auto it = p.reports.find(combo); it != p.reports.end()) {
        entry[combo] = to_json(it->second);
      }
    }
    doc.push_back(std::move(entry));
  }
  ensure_dir(cfg.output_dir);
  write_text_file(cfg.output_dir / "curves.csv", sweep_to_csv(points));
  write_json(cfg.output_dir / "sweep.json", doc);
}

void cmd_synth(const PipelineConfig& cfg) {
  const SynthOutput out = generate_bundle(cfg.synth);
  ensure_dir(cfg.output_dir);
  save_bundle(out.bundle, cfg.output_dir / "bundle.json");
  save_ground_truth(out.ground_truth, cfg.output_dir / "ground_truth.json");
}

void cmd_calibrate(const PipelineConfig& cfg) {
  cfg.settings.check();
  const EvidenceBundle bundle = load_input_bundle(cfg);
  const GroundTruth gt = require_ground_truth(cfg, bundle, "calibrate");
  const Thresholds t = calibrate_pipeline(bundle, gt, cfg.settings);
  ensure_dir(cfg.output_dir);
  write_json(cfg.output_dir / "thresholds.json", to_json(t));
}

void cmd_eval(const PipelineConfig& cfg) {
  if (!cfg.tags) throw Error(ErrorKind::kConfig, "eval needs a tags file");
  const EvidenceBundle bundle = load_input_bundle(cfg);
  const GroundTruth gt = require_ground_truth(cfg, bundle, "eval");
  const TagSet tags = tags_from_jsonl(read_text_file(*cfg.tags));
  const MetricReport r = evaluate(tags, gt);

  nlohmann::ordered_json report;
  report["precision"] = r.precision;
  report["recall"] = r.recall;
  report["metrics"] = to_json(r);
  ensure_dir(cfg.output_dir);
  write_json(cfg.output_dir / "report.json", report);
}

}  // namespace vidlabel
