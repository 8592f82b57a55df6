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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidlabel/error.hpp"
#include "vidlabel/eval.hpp"
#include "vidlabel/evidence.hpp"
#include "vidlabel/identity.hpp"
#include "vidlabel/stage1.hpp"
#include "vidlabel/stage2.hpp"
#include "vidlabel/synth.hpp"

namespace vidlabel {

struct PipelineSettings {
  FamousConfig famous;
  Stage1Config stage1;
  Stage2Config stage2;

  void check() const;
};

struct PipelineResult {
  FameMap fame;
  std::vector<IdentityModel> face_models;
  std::vector<SpeakerModel> speaker_models;    // from Stage-1 tags, used by fusion
  std::vector<IdentityModel> expanded_models;  // from the final tags, when QE runs
  TagSet stage1;
  TagSet tags;  // final
};

PipelineResult run_pipeline(const EvidenceBundle& bundle, const PipelineSettings& settings);
PipelineResult run_pipeline(const EvidenceBundle& bundle, std::span<const Embedding> pooled,
                            const PipelineSettings& settings);

struct Thresholds {
  double tau_face = 0.0;
  double tau_verify = 0.0;
  double tau_fuse = 0.0;
  double tau_qe = 0.0;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

nlohmann::ordered_json to_json(const Thresholds& t);
Thresholds thresholds_from_json(const nlohmann::json& doc);
void apply(const Thresholds& t, PipelineSettings& settings);

// Picks each threshold in pipeline order (face, verify, fuse, qe) so that
// the pipeline makes no mistake on this bundle.
Thresholds calibrate_pipeline(const EvidenceBundle& bundle, const GroundTruth& gt,
                              const PipelineSettings& settings);

// Everything a CLI invocation needs, read from a JSON config file and then
// overridden by flags.
struct PipelineConfig {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> ground_truth;
  std::optional<std::filesystem::path> thresholds;
  std::optional<std::filesystem::path> tags;  // eval input
  std::filesystem::path output_dir = "out";
  PipelineSettings settings;
  bool metrics = true;
  std::vector<int> sweep{5, 10, 20, 30, 40, 60};
  std::uint64_t seed = 0;
  SynthConfig synth;
};

// kConfig on malformed values; paths are taken relative to `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& doc,
                                const std::filesystem::path& base_dir = {});
nlohmann::ordered_json to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitIo = 2,
  kExitValidation = 3,
};

ExitCode exit_code_for(ErrorKind kind);

// Subcommands. Each writes under cfg.output_dir and throws Error on failure.
// run: tags.jsonl, models.json, report.json
void cmd_run(const PipelineConfig& cfg);
// sweep: curves.csv, sweep.json
void cmd_sweep(const PipelineConfig& cfg);
// synth: bundle.json, ground_truth.json
void cmd_synth(const PipelineConfig& cfg);
// calibrate: thresholds.json
void cmd_calibrate(const PipelineConfig& cfg);
// eval: report.json for an existing tags file
void cmd_eval(const PipelineConfig& cfg);

}  // namespace vidlabel
