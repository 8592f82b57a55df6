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

#include "vidlabel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <tuple>

#include "vidlabel/error.hpp"

namespace vidlabel {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t below(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  Embedding unit(int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = normal();
    return l2_normalize(std::move(v));
  }

  // Rotates v by `angle` radians toward a uniformly random direction
  // orthogonal to it.
  Embedding rotate(const Embedding& v, double angle) {
    if (angle == 0.0) return v;
    const std::size_t dim = v.dim();
    std::vector<double> r(dim);
    while (true) {
      for (double& x : r) x = normal();
      double along = 0.0;
      for (std::size_t k = 0; k < dim; ++k) along += r[k] * v[k];
      double norm = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        r[k] -= along * v[k];
        norm += r[k] * r[k];
      }
      if (norm > 1e-12) break;
    }
    const double rn = std::sqrt([&] {
      double s = 0.0;
      for (double x : r) s += x * x;
      return s;
    }());
    std::vector<double> out(dim);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (std::size_t k = 0; k < dim; ++k) out[k] = c * v[k] + s * r[k] / rn;
    return l2_normalize(std::move(out));
  }

  Embedding perturb(const Embedding& v, double sigma) {
    if (sigma == 0.0) return v;
    return rotate(v, sigma * normal());
  }

 private:
  std::mt19937_64 engine_;
};

struct Person {
  std::string display;  // kUnknownName for unnamed people
  Embedding face;
  Embedding voice;
  Embedding video_centre;
};

struct Appearance {
  std::size_t person;
  int video;
  double t_start;
  // Bystanders in someone else's slot never hold the floor.
  bool silent = false;
};

constexpr double kSlotSeconds = 20.0;
constexpr double kTrackSeconds = 10.0;

std::string padded(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, value);
  return buf;
}

}  // namespace

void SynthConfig::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfig, "synth: " + what); };
  if (n_identities < 0 || n_tracks_per_identity < 0 || impostor_tracks < 0 ||
      n_unknown_tracks < 0) {
    fail("counts must be >= 0");
  }
  if (detections_per_track < 1) fail("detections_per_track must be >= 1");
  if (n_videos < 1) fail("n_videos must be >= 1");
  if (face_dim < 2 || speaker_dim < 2) fail("embedding dimensions must be >= 2");
  if (!(embedding_noise >= 0.0) || !(pose_spread >= 0.0) || !(domain_gap >= 0.0)) {
    fail("noise, pose spread and domain gap must be >= 0");
  }
  for (double f : {speech_fraction, mention_fraction, co_window_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) fail("fractions must lie in [0, 1]");
  }
  if (!fame_profile.empty() &&
      fame_profile.size() != static_cast<std::size_t>(n_identities)) {
    fail("fame_profile needs one entry per identity");
  }
  for (const auto& p : fame_profile) {
    if (p.search_cluster_size < 0 || p.distractor_count < 0 || p.impostor_cluster_size < 0) {
      fail("fame_profile counts must be >= 0");
    }
    if (p.search_cluster_size + p.distractor_count + p.impostor_cluster_size > kMaxSearchRank) {
      fail("a name cannot have more than 100 search results");
    }
  }
}

std::string synth_identity_name(int i) { return padded("Person ", i, 3); }

SynthOutput generate_bundle(const SynthConfig& cfg) {
  cfg.check();
  Rng rng(cfg.seed);
  const auto n = static_cast<std::size_t>(cfg.n_identities);
  std::vector<FameProfile> profiles = cfg.fame_profile;
  if (profiles.empty()) profiles.assign(n, FameProfile{40, 10, 0, true});

  std::vector<Person> people;
  for (std::size_t i = 0; i < n; ++i) {
    Person p;
    p.display = synth_identity_name(static_cast<int>(i));
    p.face = rng.unit(cfg.face_dim);
    p.voice = rng.unit(cfg.speaker_dim);
    p.video_centre = rng.rotate(p.face, cfg.domain_gap);
    people.push_back(std::move(p));
  }
  std::vector<std::size_t> impostor_of(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    if (profiles[i].impostor_cluster_size == 0) continue;
    Person p;
    p.display = std::string(kUnknownName);
    p.face = rng.unit(cfg.face_dim);
    p.voice = rng.unit(cfg.speaker_dim);
    p.video_centre = rng.rotate(p.face, cfg.domain_gap);
    impostor_of[i] = people.size();
    people.push_back(std::move(p));
  }

  // Named and impostor appearances get their own time slots, shuffled
  // within each video.
  std::vector<std::vector<std::size_t>> slots(static_cast<std::size_t>(cfg.n_videos));
  std::vector<Appearance> appearances;
  auto add_person_tracks = [&](std::size_t person, int count, std::size_t offset) {
    for (int k = 0; k < count; ++k) {
      const int video = static_cast<int>((offset + static_cast<std::size_t>(k)) %
                                         static_cast<std::size_t>(cfg.n_videos));
      slots[static_cast<std::size_t>(video)].push_back(appearances.size());
      appearances.push_back({person, video, 0.0});
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (profiles[i].in_video) add_person_tracks(i, cfg.n_tracks_per_identity, i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (impostor_of[i] != std::numeric_limits<std::size_t>::max()) {
      add_person_tracks(impostor_of[i], cfg.impostor_tracks, i);
    }
  }
  std::vector<std::size_t> slot_count(slots.size());
  for (std::size_t v = 0; v < slots.size(); ++v) {
    rng.shuffle(slots[v]);
    for (std::size_t s = 0; s < slots[v].size(); ++s) {
      appearances[slots[v][s]].t_start = static_cast<double>(s) * kSlotSeconds + 2.0;
    }
    slot_count[v] = slots[v].size();
  }

  // Background people: either sharing an existing slot (and so a name's
  // time window) or in a slot of their own.
  for (int u = 0; u < cfg.n_unknown_tracks; ++u) {
    Person p;
    p.display = std::string(kUnknownName);
    p.face = rng.unit(cfg.face_dim);
    p.voice = rng.unit(cfg.speaker_dim);
    p.video_centre = p.face;
    const std::size_t person = people.size();
    people.push_back(std::move(p));
    const auto video = rng.below(slots.size());
    double t_start = 0.0;
    bool shared = false;
    if (slot_count[video] > 0 && rng.uniform() < cfg.co_window_fraction) {
      t_start = static_cast<double>(rng.below(slot_count[video])) * kSlotSeconds + 3.0;
      shared = true;
    } else {
      t_start = static_cast<double>(slot_count[video]++) * kSlotSeconds + 2.0;
    }
    appearances.push_back({person, static_cast<int>(video), t_start, shared});
  }

  SynthOutput out;
  EvidenceBundle& b = out.bundle;
  b.face_dim = cfg.face_dim;
  b.speaker_dim = cfg.speaker_dim;

  std::vector<int> track_counter(slots.size(), 0);
  std::vector<int> turn_counter(slots.size(), 0);
  std::vector<std::size_t> first_track_index(n, std::numeric_limits<std::size_t>::max());
  b.tracks.reserve(appearances.size());
  for (const auto& a : appearances) {
    const Person& person = people[a.person];
    const auto v = static_cast<std::size_t>(a.video);
    const std::string video_id = padded("video_", a.video, 2);
    FaceTrack t;
    t.track_id = padded(("v" + std::to_string(a.video) + "_t").c_str(), track_counter[v]++, 4);
    t.video_id = video_id;
    t.shot_id = padded("shot_", static_cast<int>(a.t_start / kSlotSeconds), 4);
    t.t_start = a.t_start;
    t.t_end = a.t_start + kTrackSeconds;
    const Embedding centre = rng.perturb(person.video_centre, cfg.pose_spread);
    for (int d = 0; d < cfg.detections_per_track; ++d) {
      t.detections.push_back(rng.perturb(centre, cfg.embedding_noise));
    }
    if (rng.uniform() < cfg.speech_fraction && !a.silent) {
      t.speaking.push_back({t.t_start + 1.0, t.t_end - 1.0});
      SpeechTurn u;
      u.turn_id = padded(("v" + std::to_string(a.video) + "_u").c_str(), turn_counter[v]++, 4);
      u.video_id = video_id;
      u.t_start = t.t_start + 1.0;
      u.t_end = t.t_end - 1.0;
      u.speaker_embedding = rng.perturb(person.voice, cfg.embedding_noise);
      u.asd_track_id = t.track_id;
      b.turns.push_back(std::move(u));
    }
    out.ground_truth.emplace(t.track_id, person.display);
    if (a.person < n && first_track_index[a.person] == std::numeric_limits<std::size_t>::max()) {
      first_track_index[a.person] = b.tracks.size();
    }
    b.tracks.push_back(std::move(t));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Person& person = people[i];
    b.names.push_back({person.display, NameSource::kImdb, std::nullopt, std::nullopt});
    const bool mentioned = rng.uniform() < cfg.mention_fraction;
    if (mentioned && first_track_index[i] != std::numeric_limits<std::size_t>::max()) {
      const FaceTrack& t = b.tracks[first_track_index[i]];
      b.names.push_back({person.display, i % 2 == 0 ? NameSource::kWritten : NameSource::kSpoken,
                         t.video_id, t.t_start + 1.0});
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const FameProfile& profile = profiles[i];
    enum Kind { kTrue, kImpostor, kDistractor };
    std::vector<Kind> kinds;
    kinds.insert(kinds.end(), static_cast<std::size_t>(profile.search_cluster_size), kTrue);
    kinds.insert(kinds.end(), static_cast<std::size_t>(profile.impostor_cluster_size), kImpostor);
    kinds.insert(kinds.end(), static_cast<std::size_t>(profile.distractor_count), kDistractor);
    rng.shuffle(kinds);
    SearchResultSet set{people[i].display, {}};
    int rank = 1;
    for (Kind k : kinds) {
      Embedding e;
      switch (k) {
        case kTrue: e = rng.perturb(people[i].face, cfg.embedding_noise); break;
        case kImpostor: e = rng.perturb(people[impostor_of[i]].face, cfg.embedding_noise); break;
        case kDistractor: e = rng.unit(cfg.face_dim); break;
      }
      set.entries.push_back({rank++, std::move(e)});
    }
    b.search.emplace(normalize_name(set.name), std::move(set));
  }

  std::sort(b.tracks.begin(), b.tracks.end(),
            [](const FaceTrack& x, const FaceTrack& y) { return x.track_id < y.track_id; });
  std::sort(b.turns.begin(), b.turns.end(),
            [](const SpeechTurn& x, const SpeechTurn& y) { return x.turn_id < y.turn_id; });
  validate(b);
  return out;
}

SynthConfig standard_fixture(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_identities = 20;
  cfg.fame_profile = {
      // famous
      {76, 10, 0}, {85, 5, 0}, {64, 12, 0}, {55, 15, 0}, {48, 8, 0},
      {70, 6, 0}, {42, 20, 0}, {90, 4, 0}, {38, 14, 0}, {60, 9, 0},
      // less famous, a few true faces among the distractors
      {2, 18, 0}, {3, 12, 0}, {1, 15, 0}, {4, 10, 0}, {2, 8, 0}, {3, 16, 0},
      // only unrelated faces: less famous, never corroborated
      {0, 12, 0}, {0, 7, 0},
      // never famous
      {0, 0, 0}, {0, 0, 0},
  };
  cfg.n_tracks_per_identity = 8;
  cfg.detections_per_track = 4;
  cfg.embedding_noise = 0.15;
  cfg.domain_gap = 1.0;
  cfg.pose_spread = 0.45;
  cfg.speech_fraction = 0.5;
  cfg.mention_fraction = 1.0;
  cfg.n_unknown_tracks = 20;
  cfg.co_window_fraction = 0.5;
  cfg.n_videos = 3;
  cfg.face_dim = 128;
  cfg.speaker_dim = 64;
  return cfg;
}

SynthConfig polluted_fixture(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.fame_profile = {
      // always famous
      {76, 10, 0}, {85, 5, 0}, {66, 12, 0}, {70, 6, 0},
      // famous only at lower alpha
      {45, 10, 0}, {35, 15, 0}, {25, 10, 0}, {15, 20, 0},
      // truly less famous
      {2, 18, 0}, {3, 12, 0},
      // IMDB-only names whose largest cluster is an impostor
      {1, 10, 8, false}, {0, 12, 6, false}, {2, 6, 17, false}, {1, 9, 13, false},
  };
  cfg.n_identities = static_cast<int>(cfg.fame_profile.size());
  cfg.n_tracks_per_identity = 6;
  cfg.detections_per_track = 3;
  cfg.embedding_noise = 0.15;
  cfg.domain_gap = 0.3;
  cfg.pose_spread = 0.3;
  cfg.speech_fraction = 0.5;
  cfg.mention_fraction = 1.0;
  cfg.impostor_tracks = 4;
  cfg.n_unknown_tracks = 10;
  cfg.co_window_fraction = 0.3;
  cfg.n_videos = 2;
  cfg.face_dim = 128;
  cfg.speaker_dim = 64;
  return cfg;
}

SynthConfig synth_preset(const std::string& name, std::uint64_t seed) {
  if (name == "standard") return standard_fixture(seed);
  if (name == "polluted") return polluted_fixture(seed);
  if (name == "default") {
    SynthConfig cfg;
    cfg.seed = seed;
    return cfg;
  }
  throw Error(ErrorKind::kConfig, "unknown synth preset '" + name + "'");
}

nlohmann::ordered_json to_json(const SynthConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["seed"] = cfg.seed;
  doc["n_identities"] = cfg.n_identities;
  auto profile = nlohmann::ordered_json::array();
  for (const auto& p : cfg.fame_profile) {
    profile.push_back({{"search_cluster_size", p.search_cluster_size},
                       {"distractor_count", p.distractor_count},
                       {"impostor_cluster_size", p.impostor_cluster_size},
                       {"in_video", p.in_video}});
  }
  doc["fame_profile"] = std::move(profile);
  doc["n_tracks_per_identity"] = cfg.n_tracks_per_identity;
  doc["detections_per_track"] = cfg.detections_per_track;
  doc["embedding_noise"] = cfg.embedding_noise;
  doc["domain_gap"] = cfg.domain_gap;
  doc["pose_spread"] = cfg.pose_spread;
  doc["speech_fraction"] = cfg.speech_fraction;
  doc["mention_fraction"] = cfg.mention_fraction;
  doc["impostor_tracks"] = cfg.impostor_tracks;
  doc["n_unknown_tracks"] = cfg.n_unknown_tracks;
  doc["co_window_fraction"] = cfg.co_window_fraction;
  doc["n_videos"] = cfg.n_videos;
  doc["face_dim"] = cfg.face_dim;
  doc["speaker_dim"] = cfg.speaker_dim;
  return doc;
}

SynthConfig synth_config_from_json(const nlohmann::json& doc, SynthConfig cfg) {
  if (!doc.is_object()) throw Error(ErrorKind::kConfig, "synth: expected an object");
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed", cfg.seed);
    get("n_identities", cfg.n_identities);
    get("n_tracks_per_identity", cfg.n_tracks_per_identity);
    get("detections_per_track", cfg.detections_per_track);
    get("embedding_noise", cfg.embedding_noise);
    get("domain_gap", cfg.domain_gap);
    get("pose_spread", cfg.pose_spread);
    get("speech_fraction", cfg.speech_fraction);
    get("mention_fraction", cfg.mention_fraction);
    get("impostor_tracks", cfg.impostor_tracks);
    get("n_unknown_tracks", cfg.n_unknown_tracks);
    get("co_window_fraction", cfg.co_window_fraction);
    get("n_videos", cfg.n_videos);
    get("face_dim", cfg.face_dim);
    get("speaker_dim", cfg.speaker_dim);
    if (doc.contains("fame_profile")) {
      cfg.fame_profile.clear();
      for (const auto& p : doc.at("fame_profile")) {
        cfg.fame_profile.push_back({p.at("search_cluster_size").get<int>(),
                                    p.value("distractor_count", 0),
                                    p.value("impostor_cluster_size", 0),
                                    p.value("in_video", true)});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("synth: ") + e.what());
  }
  return cfg;
}

Partition naive_cluster_reference(std::span<const Embedding> points, double threshold) {
  auto distance = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < points[i].dim(); ++k) s += points[i][k] * points[j][k];
    return 1.0 - s;
  };

  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < points.size(); ++i) clusters.push_back({i});

  while (clusters.size() > 1) {
    struct Pair {
      double d;
      std::size_t a, b;         // positions in `clusters`
      std::size_t lo, hi;       // smallest members, lo < hi
    };
    std::vector<Pair> pairs;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double sum = 0.0;
        for (std::size_t i : clusters[a]) {
          for (std::size_t j : clusters[b]) sum += distance(i, j);
        }
        const double d = sum / static_cast<double>(clusters[a].size() * clusters[b].size());
        const std::size_t ma = *std::min_element(clusters[a].begin(), clusters[a].end());
        const std::size_t mb = *std::min_element(clusters[b].begin(), clusters[b].end());
        pairs.push_back({d, a, b, std::min(ma, mb), std::max(ma, mb)});
        best = std::min(best, d);
      }
    }
    if (best > threshold) break;
    const Pair* chosen = nullptr;
    for (const auto& p : pairs) {
      if (p.d > best + kTolerance) continue;
      if (chosen == nullptr || std::tie(p.lo, p.hi) < std::tie(chosen->lo, chosen->hi)) {
        chosen = &p;
      }
    }
    const std::size_t a = chosen->a;
    const std::size_t b = chosen->b;
    clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(b));
  }

  Partition out{std::move(clusters)};
  for (auto& c : out.clusters) std::sort(c.begin(), c.end());
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return out;
}

double brute_force_ap(std::span<const bool> ranked_hits, std::size_t n_relevant) {
  if (n_relevant == 0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 1; k <= ranked_hits.size(); ++k) {
    if (!ranked_hits[k - 1]) continue;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < k; ++j) correct += ranked_hits[j] ? 1 : 0;
    total += static_cast<double>(correct) / static_cast<double>(k);
  }
  return total / static_cast<double>(n_relevant);
}

}  // namespace vidlabel
