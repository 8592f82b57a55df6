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

// Command-line front end: run, sweep, synth, calibrate, eval.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vidlabel/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> bundle;
  std::optional<std::string> ground_truth;
  std::optional<std::string> thresholds;
  std::optional<std::string> tags;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  std::optional<int> alpha;
  std::optional<double> tau_face;
  std::optional<double> tau_verify;
  std::optional<double> tau_fuse;
  std::optional<double> tau_qe;
  std::optional<std::string> stage2_order;
  std::optional<double> delta_window;
  std::optional<std::vector<int>> sweep;
};

void add_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("-c,--config", o.config, "JSON config file");
  cmd.add_option("--bundle", o.bundle, "evidence bundle JSON");
  cmd.add_option("--ground-truth", o.ground_truth, "ground-truth JSON (track_id -> name)");
  cmd.add_option("--thresholds", o.thresholds, "thresholds JSON written by calibrate");
  cmd.add_option("--tags", o.tags, "tags.jsonl to evaluate");
  cmd.add_option("-o,--output", o.output, "output directory");
  cmd.add_option("--seed", o.seed, "synthetic data seed");
  cmd.add_option("--preset", o.preset, "synthetic preset: standard, polluted, default");
  cmd.add_option("--alpha", o.alpha, "famous threshold on largest cluster size");
  cmd.add_option("--tau-face", o.tau_face, "famous-model tag threshold");
  cmd.add_option("--tau-verify", o.tau_verify, "corroboration verification threshold");
  cmd.add_option("--tau-fuse", o.tau_fuse, "audio-visual fusion threshold");
  cmd.add_option("--tau-qe", o.tau_qe, "query-expansion threshold");
  cmd.add_option("--stage2-order", o.stage2_order, "fusion_then_qe, qe_only or fusion_only");
  cmd.add_option("--delta-window", o.delta_window, "name-occurrence window in seconds");
  cmd.add_option("--sweep", o.sweep, "alpha values for the sweep")->delimiter(',');
}

vidlabel::PipelineConfig build_config(const Overrides& o) {
  using namespace vidlabel;
  PipelineConfig cfg =
      o.config.empty() ? config_from_json(nlohmann::json::object()) : load_config(o.config);
  auto& s = cfg.settings;
  if (o.bundle) cfg.bundle = *o.bundle;
  if (o.ground_truth) cfg.ground_truth = *o.ground_truth;
  if (o.tags) cfg.tags = *o.tags;
  if (o.output) cfg.output_dir = *o.output;
  if (o.seed || o.preset) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.preset) {
      cfg.synth = synth_preset(*o.preset, cfg.seed);
    } else {
      cfg.synth.seed = cfg.seed;
    }
  }
  if (o.thresholds) {
    cfg.thresholds = *o.thresholds;
    apply(thresholds_from_json(read_json_file(*o.thresholds)), s);
  }
  if (o.alpha) s.famous.alpha = *o.alpha;
  if (o.tau_face) s.stage1.tau_face = *o.tau_face;
  if (o.tau_verify) s.stage1.tau_verify = *o.tau_verify;
  if (o.tau_fuse) s.stage2.tau_fuse = *o.tau_fuse;
  if (o.tau_qe) s.stage2.tau_qe = *o.tau_qe;
  if (o.delta_window) s.stage1.delta_window = *o.delta_window;
  if (o.stage2_order) {
    auto order = stage2_order_from_string(*o.stage2_order);
    if (!order) throw Error(ErrorKind::kConfig, "unknown --stage2-order '" + *o.stage2_order + "'");
    s.stage2.order = *order;
  }
  if (o.sweep) cfg.sweep = *o.sweep;
  s.check();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label people in video from names, search images and voices"};
  app.require_subcommand(1);

  Overrides o;
  using Command = void (*)(const vidlabel::PipelineConfig&);
  Command command = nullptr;
  const std::pair<const char*, std::pair<const char*, Command>> commands[] = {
      {"run", {"tag tracks; writes tags.jsonl, models.json, report.json", vidlabel::cmd_run}},
      {"sweep", {"alpha sweep; writes curves.csv, sweep.json", vidlabel::cmd_sweep}},
      {"synth", {"generate a bundle; writes bundle.json, ground_truth.json", vidlabel::cmd_synth}},
      {"calibrate", {"fit thresholds; writes thresholds.json", vidlabel::cmd_calibrate}},
      {"eval", {"score a tags file; writes report.json", vidlabel::cmd_eval}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    add_options(*sub, o);
    sub->callback([&command, fn = entry.second] { command = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return vidlabel::kExitConfig;
  }

  try {
    command(build_config(o));
  } catch (const vidlabel::Error& e) {
    std::cerr << "error [" << vidlabel::to_string(e.kind()) << "]: " << e.what() << '\n';
    return vidlabel::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return vidlabel::kExitValidation;
  }
  return vidlabel::kExitOk;
}
