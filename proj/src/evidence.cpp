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

#include "vidlabel/evidence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <tuple>

#include "vidlabel/error.hpp"

namespace vidlabel {

using nlohmann::json;

std::string_view to_string(NameSource s) {
  switch (s) {
    case NameSource::kImdb: return "imdb";
    case NameSource::kWritten: return "written";
    case NameSource::kSpoken: return "spoken";
  }
  return "imdb";
}

std::optional<NameSource> name_source_from_string(std::string_view s) {
  if (s == "imdb") return NameSource::kImdb;
  if (s == "written") return NameSource::kWritten;
  if (s == "spoken") return NameSource::kSpoken;
  return std::nullopt;
}

std::string normalize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

const FaceTrack* EvidenceBundle::find_track(std::string_view track_id) const {
  for (const auto& t : tracks) {
    if (t.track_id == track_id) return &t;
  }
  return nullptr;
}

const SearchResultSet* EvidenceBundle::find_search(std::string_view name) const {
  auto it = search.find(normalize_name(name));
  return it == search.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::kValidation, where + ": " + what);
}

bool finite(double x) { return std::isfinite(x); }

void check_dim(const Embedding& e, int dim, const std::string& where) {
  if (static_cast<int>(e.dim()) != dim) {
    std::ostringstream msg;
    msg << "embedding has dimension " << e.dim() << ", bundle declares " << dim;
    invalid(where, msg.str());
  }
}

}  // namespace

void validate(const EvidenceBundle& b) {
  if (b.face_dim <= 0) invalid("header", "face_dim must be positive");
  if (b.speaker_dim <= 0) invalid("header", "speaker_dim must be positive");

  std::map<std::string_view, const FaceTrack*> tracks;
  for (const auto& t : b.tracks) {
    const std::string where = "track '" + t.track_id + "'";
    if (t.track_id.empty()) invalid("track", "empty track_id");
    if (!tracks.emplace(t.track_id, &t).second) invalid(where, "duplicate track_id");
    if (t.video_id.empty()) invalid(where, "empty video_id");
    if (!finite(t.t_start) || !finite(t.t_end) || !(t.t_start < t.t_end)) {
      invalid(where, "requires t_start < t_end");
    }
    if (t.detections.empty()) invalid(where, "has no detections");
    for (const auto& d : t.detections) check_dim(d, b.face_dim, where);
    for (const auto& s : t.speaking) {
      if (!finite(s.start) || !finite(s.end) || !(s.start < s.end)) {
        invalid(where, "speaking segment requires start < end");
      }
      if (s.start < t.t_start || s.end > t.t_end) {
        invalid(where, "speaking segment outside the track span");
      }
    }
  }

  std::set<std::string_view> turn_ids;
  for (const auto& u : b.turns) {
    const std::string where = "turn '" + u.turn_id + "'";
    if (u.turn_id.empty()) invalid("turn", "empty turn_id");
    if (!turn_ids.insert(u.turn_id).second) invalid(where, "duplicate turn_id");
    if (u.video_id.empty()) invalid(where, "empty video_id");
    if (!finite(u.t_start) || !finite(u.t_end) || !(u.t_start < u.t_end)) {
      invalid(where, "requires t_start < t_end");
    }
    check_dim(u.speaker_embedding, b.speaker_dim, where);
    if (u.asd_track_id) {
      auto it = tracks.find(*u.asd_track_id);
      if (it == tracks.end()) {
        invalid(where, "asd_track_id '" + *u.asd_track_id + "' does not exist");
      }
      if (it->second->video_id != u.video_id) {
        invalid(where, "asd_track_id '" + *u.asd_track_id + "' is in another video");
      }
    }
  }

  for (const auto& [key, set] : b.search) {
    const std::string where = "search '" + set.name + "'";
    if (key.empty() || normalize_name(set.name) != key) {
      invalid(where, "key does not match the normalised name");
    }
    if (set.entries.size() > static_cast<std::size_t>(kMaxSearchRank)) {
      invalid(where, "more than 100 entries");
    }
    int previous = 0;
    for (const auto& e : set.entries) {
      if (e.rank < 1 || e.rank > kMaxSearchRank) invalid(where, "rank outside 1..100");
      if (e.rank <= previous) invalid(where, "ranks must be strictly increasing");
      previous = e.rank;
      check_dim(e.embedding, b.face_dim, where);
    }
  }

  for (std::size_t i = 0; i < b.names.size(); ++i) {
    const auto& n = b.names[i];
    const std::string where = "name occurrence #" + std::to_string(i) + " '" + n.name + "'";
    if (normalize_name(n.name).empty()) invalid(where, "empty name");
    if (n.source == NameSource::kImdb) {
      if (n.time) invalid(where, "imdb occurrences carry no time");
    } else {
      if (!n.time || !finite(*n.time)) invalid(where, "written/spoken occurrences need a time");
      if (!n.video_id || n.video_id->empty()) {
        invalid(where, "written/spoken occurrences need a video_id");
      }
    }
    if (b.find_search(n.name) == nullptr) invalid(where, "no search result set");
  }

  if (b.ground_truth) {
    for (const auto& [track_id, name] : *b.ground_truth) {
      const std::string where = "ground truth '" + track_id + "'";
      if (!tracks.contains(track_id)) invalid(where, "unknown track");
      if (normalize_name(name).empty()) invalid(where, "empty name");
    }
  }
}

namespace {

// Tracks which record is being decoded so type errors can name it.
struct Decoder {
  std::string where = "document";

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kParse, where + ": " + what);
  }

  const json& at(const json& obj, const char* key) const {
    if (!obj.is_object()) fail("expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }

  std::string string(const json& v) const {
    if (!v.is_string()) fail("expected a string");
    return v.get<std::string>();
  }

  double number(const json& v) const {
    if (!v.is_number()) fail("expected a number");
    return v.get<double>();
  }

  int integer(const json& v) const {
    if (!v.is_number_integer()) fail("expected an integer");
    return v.get<int>();
  }

  const json& array(const json& v) const {
    if (!v.is_array()) fail("expected an array");
    return v;
  }

  Embedding embedding(const json& v) const {
    std::vector<double> values;
    for (const auto& x : array(v)) values.push_back(number(x));
    try {
      return Embedding::from_unit(std::move(values));
    } catch (const Error& e) {
      throw Error(ErrorKind::kValidation, where + ": " + e.what());
    }
  }
};

json embedding_json(const Embedding& e) {
  return json(std::vector<double>(e.values().begin(), e.values().end()));
}

}  // namespace

EvidenceBundle bundle_from_json(const json& doc) {
  Decoder d;
  EvidenceBundle b;

  d.where = "header";
  const json& version = d.at(doc, "version");
  if (!version.is_string() || version.get<std::string>() != kBundleVersion) {
    throw Error(ErrorKind::kValidation, "header: version must be \"1\"");
  }
  b.face_dim = d.integer(d.at(doc, "face_dim"));
  b.speaker_dim = d.integer(d.at(doc, "speaker_dim"));

  for (const auto& t : d.array(d.at(doc, "tracks"))) {
    d.where = "track";
    FaceTrack track;
    track.track_id = d.string(d.at(t, "track_id"));
    d.where = "track '" + track.track_id + "'";
    track.video_id = d.string(d.at(t, "video_id"));
    track.shot_id = d.string(d.at(t, "shot_id"));
    track.t_start = d.number(d.at(t, "t_start"));
    track.t_end = d.number(d.at(t, "t_end"));
    for (const auto& e : d.array(d.at(t, "detections"))) {
      track.detections.push_back(d.embedding(e));
    }
    if (t.contains("speaking")) {
      for (const auto& s : d.array(t.at("speaking"))) {
        if (!s.is_array() || s.size() != 2) d.fail("speaking segment must be [start, end]");
        track.speaking.push_back({d.number(s[0]), d.number(s[1])});
      }
    }
    b.tracks.push_back(std::move(track));
  }

  if (doc.contains("turns")) {
    for (const auto& u : d.array(doc.at("turns"))) {
      d.where = "turn";
      SpeechTurn turn;
      turn.turn_id = d.string(d.at(u, "turn_id"));
      d.where = "turn '" + turn.turn_id + "'";
      turn.video_id = d.string(d.at(u, "video_id"));
      turn.t_start = d.number(d.at(u, "t_start"));
      turn.t_end = d.number(d.at(u, "t_end"));
      turn.speaker_embedding = d.embedding(d.at(u, "embedding"));
      if (u.contains("asd_track_id") && !u.at("asd_track_id").is_null()) {
        turn.asd_track_id = d.string(u.at("asd_track_id"));
      }
      b.turns.push_back(std::move(turn));
    }
  }

  if (doc.contains("names")) {
    std::size_t i = 0;
    for (const auto& n : d.array(doc.at("names"))) {
      d.where = "name occurrence #" + std::to_string(i++);
      NameOccurrence occ;
      occ.name = d.string(d.at(n, "name"));
      const std::string source = d.string(d.at(n, "source"));
      auto parsed = name_source_from_string(source);
      if (!parsed) {
        throw Error(ErrorKind::kValidation, d.where + ": unknown source '" + source + "'");
      }
      occ.source = *parsed;
      if (n.contains("video_id") && !n.at("video_id").is_null()) {
        occ.video_id = d.string(n.at("video_id"));
      }
      if (n.contains("time") && !n.at("time").is_null()) occ.time = d.number(n.at("time"));
      b.names.push_back(std::move(occ));
    }
  }

  if (doc.contains("search")) {
    const json& search = doc.at("search");
    d.where = "search";
    if (!search.is_object()) d.fail("expected an object keyed by name");
    for (const auto& [name, entries] : search.items()) {
      d.where = "search '" + name + "'";
      SearchResultSet set{name, {}};
      for (const auto& e : d.array(entries)) {
        set.entries.push_back({d.integer(d.at(e, "rank")), d.embedding(d.at(e, "embedding"))});
      }
      const std::string key = normalize_name(name);
      if (!b.search.emplace(key, std::move(set)).second) {
        throw Error(ErrorKind::kValidation,
                    d.where + ": collides with another search name after normalisation");
      }
    }
  }

  if (doc.contains("ground_truth") && !doc.at("ground_truth").is_null()) {
    b.ground_truth = ground_truth_from_json(doc.at("ground_truth"));
  }

  validate(b);
  return b;
}

json bundle_to_json(const EvidenceBundle& b) {
  json doc;
  doc["version"] = std::string(kBundleVersion);
  doc["face_dim"] = b.face_dim;
  doc["speaker_dim"] = b.speaker_dim;

  json tracks = json::array();
  for (const auto& t : b.tracks) {
    json detections = json::array();
    for (const auto& e : t.detections) detections.push_back(embedding_json(e));
    json speaking = json::array();
    for (const auto& s : t.speaking) speaking.push_back({s.start, s.end});
    tracks.push_back({{"track_id", t.track_id},
                      {"video_id", t.video_id},
                      {"shot_id", t.shot_id},
                      {"t_start", t.t_start},
                      {"t_end", t.t_end},
                      {"detections", std::move(detections)},
                      {"speaking", std::move(speaking)}});
  }
  doc["tracks"] = std::move(tracks);

  json turns = json::array();
  for (const auto& u : b.turns) {
    json turn = {{"turn_id", u.turn_id},
                 {"video_id", u.video_id},
                 {"t_start", u.t_start},
                 {"t_end", u.t_end},
                 {"embedding", embedding_json(u.speaker_embedding)}};
    if (u.asd_track_id) turn["asd_track_id"] = *u.asd_track_id;
    turns.push_back(std::move(turn));
  }
  doc["turns"] = std::move(turns);

  json names = json::array();
  for (const auto& n : b.names) {
    json occ = {{"name", n.name}, {"source", std::string(to_string(n.source))}};
    if (n.video_id) occ["video_id"] = *n.video_id;
    if (n.time) occ["time"] = *n.time;
    names.push_back(std::move(occ));
  }
  doc["names"] = std::move(names);

  json search = json::object();
  for (const auto& [key, set] : b.search) {
    json entries = json::array();
    for (const auto& e : set.entries) {
      entries.push_back({{"rank", e.rank}, {"embedding", embedding_json(e.embedding)}});
    }
    search[set.name] = std::move(entries);
  }
  doc["search"] = std::move(search);

  if (b.ground_truth) doc["ground_truth"] = ground_truth_to_json(*b.ground_truth);
  return doc;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

EvidenceBundle load_bundle(const std::filesystem::path& path) {
  return bundle_from_json(read_json_file(path));
}

void save_bundle(const EvidenceBundle& bundle, const std::filesystem::path& path) {
  write_text_file(path, bundle_to_json(bundle).dump(1) + "\n");
}

GroundTruth ground_truth_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorKind::kParse, "ground truth: expected an object of track_id -> name");
  }
  GroundTruth gt;
  for (const auto& [track_id, name] : doc.items()) {
    if (!name.is_string()) {
      throw Error(ErrorKind::kParse, "ground truth '" + track_id + "': expected a string");
    }
    gt.emplace(track_id, name.get<std::string>());
  }
  return gt;
}

json ground_truth_to_json(const GroundTruth& gt) {
  json doc = json::object();
  for (const auto& [track_id, name] : gt) doc[track_id] = name;
  return doc;
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_json(read_json_file(path));
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  write_text_file(path, ground_truth_to_json(gt).dump(1) + "\n");
}

std::vector<const SpeechTurn*> overlapping_turns(const FaceTrack& track,
                                                 std::span<const SpeechTurn> turns) {
  std::vector<const SpeechTurn*> out;
  for (const auto& u : turns) {
    if (u.video_id != track.video_id) continue;
    const bool overlaps = std::any_of(
        track.speaking.begin(), track.speaking.end(), [&](const Interval& s) {
          return std::min(s.end, u.t_end) - std::max(s.start, u.t_start) > 0.0;
        });
    if (overlaps) out.push_back(&u);
  }
  std::sort(out.begin(), out.end(), [](const SpeechTurn* a, const SpeechTurn* b) {
    return std::tie(a->t_start, a->turn_id) < std::tie(b->t_start, b->turn_id);
  });
  return out;
}

std::vector<const FaceTrack*> tracks_in_window(const NameOccurrence& occurrence,
                                               std::span<const FaceTrack> tracks,
                                               double delta) {
  if (occurrence.source == NameSource::kImdb || !occurrence.time) {
    throw Error(ErrorKind::kSourceHasNoTime,
                "occurrence of '" + occurrence.name + "' has no time");
  }
  const double lo = *occurrence.time - delta;
  const double hi = *occurrence.time + delta;
  std::vector<const FaceTrack*> out;
  for (const auto& t : tracks) {
    if (occurrence.video_id && t.video_id != *occurrence.video_id) continue;
    if (t.t_start <= hi && t.t_end >= lo) out.push_back(&t);
  }
  std::sort(out.begin(), out.end(), [](const FaceTrack* a, const FaceTrack* b) {
    return a->track_id < b->track_id;
  });
  return out;
}

}  // namespace vidlabel
