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

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vidlabel/core.hpp"

namespace vidlabel {

inline constexpr std::string_view kBundleVersion = "1";
// Ground-truth label for people nobody could name. Tags on such tracks are
// always wrong.
inline constexpr std::string_view kUnknownName = "@unknown";
inline constexpr double kDefaultWindowSeconds = 5.0;
inline constexpr int kMaxSearchRank = 100;

struct Interval {
  double start = 0.0;
  double end = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct FaceTrack {
  std::string track_id;
  std::string video_id;
  std::string shot_id;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<Embedding> detections;
  std::vector<Interval> speaking;

  bool speaks() const noexcept { return !speaking.empty(); }
  friend bool operator==(const FaceTrack&, const FaceTrack&) = default;
};

struct SpeechTurn {
  std::string turn_id;
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;
  Embedding speaker_embedding;
  std::optional<std::string> asd_track_id;

  friend bool operator==(const SpeechTurn&, const SpeechTurn&) = default;
};

enum class NameSource { kImdb, kWritten, kSpoken };

std::string_view to_string(NameSource s);
std::optional<NameSource> name_source_from_string(std::string_view s);

struct NameOccurrence {
  std::string name;
  NameSource source = NameSource::kImdb;
  std::optional<std::string> video_id;
  std::optional<double> time;

  friend bool operator==(const NameOccurrence&, const NameOccurrence&) = default;
};

struct SearchEntry {
  int rank = 0;
  Embedding embedding;

  friend bool operator==(const SearchEntry&, const SearchEntry&) = default;
};

// Faces from the top-ranked image-search results for one queried name.
// Empty when the engine returned no usable face.
struct SearchResultSet {
  std::string name;
  std::vector<SearchEntry> entries;

  friend bool operator==(const SearchResultSet&, const SearchResultSet&) = default;
};

// track_id -> person name, or kUnknownName.
using GroundTruth = std::map<std::string, std::string>;

// Lower-cased, whitespace-collapsed, trimmed form used as the identity key.
std::string normalize_name(std::string_view name);

struct EvidenceBundle {
  int face_dim = 0;
  int speaker_dim = 0;
  std::vector<FaceTrack> tracks;
  std::vector<SpeechTurn> turns;
  std::vector<NameOccurrence> names;
  // Keyed by normalize_name(name); the set keeps the display form.
  std::map<std::string, SearchResultSet> search;
  std::optional<GroundTruth> ground_truth;

  const FaceTrack* find_track(std::string_view track_id) const;
  const SearchResultSet* find_search(std::string_view name) const;

  friend bool operator==(const EvidenceBundle&, const EvidenceBundle&) = default;
};

// Throws Error(kValidation) naming the first offending record.
void validate(const EvidenceBundle& bundle);

// Throws kParse for malformed documents and kValidation for invariant
// violations.
EvidenceBundle bundle_from_json(const nlohmann::json& doc);
nlohmann::json bundle_to_json(const EvidenceBundle& bundle);

EvidenceBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const EvidenceBundle& bundle, const std::filesystem::path& path);

GroundTruth ground_truth_from_json(const nlohmann::json& doc);
nlohmann::json ground_truth_to_json(const GroundTruth& gt);
GroundTruth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

// Reads a whole file as JSON; kIo if unreadable, kParse if malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Turns of the track's video whose span overlaps one of the track's
// speaking segments for a positive duration, ordered by (t_start, turn_id).
std::vector<const SpeechTurn*> overlapping_turns(const FaceTrack& track,
                                                 std::span<const SpeechTurn> turns);

// Tracks of the occurrence's video whose span meets [time - delta,
// time + delta] (closed), ordered by track_id. Throws kSourceHasNoTime for
// IMDB occurrences.
std::vector<const FaceTrack*> tracks_in_window(const NameOccurrence& occurrence,
                                               std::span<const FaceTrack> tracks,
                                               double delta = kDefaultWindowSeconds);

}  // namespace vidlabel
