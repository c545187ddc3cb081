#include "vsum/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vsum/io_util.hpp"

namespace vsum::data {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// text helpers

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("fmt_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(context + ": bad number '" + std::string(s) + "'");
  return v;
}

long parse_int(std::string_view s, const std::string& context) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(context + ": bad integer '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

struct LineReader {
  std::vector<std::string> lines;
  std::string context;
  size_t next = 0;

  LineReader(const fs::path& path) : context(path.string()) {
    std::istringstream in(io::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }

  bool done() const { return next >= lines.size(); }
  std::string_view peek() const { return lines[next]; }
  std::string_view take() { return lines[next++]; }

  std::string where() const { return context + ":" + std::to_string(next + 1); }

  // consumes a "key: value" line and returns the value
  std::string_view field(std::string_view key) {
    if (done()) throw ParseError(where() + ": expected '" + std::string(key) + ":'");
    std::string_view line = take();
    const std::string prefix = std::string(key) + ":";
    if (line.substr(0, prefix.size()) != prefix)
      throw ParseError(context + ":" + std::to_string(next) + ": expected '" + prefix + "'");
    std::string_view v = line.substr(prefix.size());
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    return v;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// feature files

namespace {
constexpr std::string_view kFeatureMagic = "VSFT";
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::string_view kCheckpointMagic = "VSCK";
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::string_view kAnnotationHeader = "# vsum annotation v1";
constexpr std::string_view kSummaryHeader = "# vsum summary v1";
}  // namespace

void save_features(const fs::path& path, const linalg::FeatureSequence& x, double fps) {
  io::ByteWriter w;
  w.bytes(kFeatureMagic);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(x.rows));
  w.u32(static_cast<std::uint32_t>(x.cols));
  w.f64(fps);
  for (double v : x.data) w.f64(v);
  io::atomic_write_file(path, w.buf);
}

std::pair<linalg::FeatureSequence, double> load_features(const fs::path& path) {
  const std::string bytes = io::read_file(path);
  io::ByteReader r(bytes, "features " + path.string());
  r.expect_magic(kFeatureMagic);
  const std::uint32_t version = r.u32();
  if (version != kFeatureVersion)
    throw VersionError("features " + path.string() + ": unsupported version " +
                       std::to_string(version));
  const int rows = static_cast<int>(r.u32());
  const int cols = static_cast<int>(r.u32());
  const double fps = r.f64();
  linalg::FeatureSequence x(rows, cols);
  for (double& v : x.data) v = r.f64();
  r.expect_end();
  return {std::move(x), fps};
}

// ---------------------------------------------------------------------------
// annotation files

void save_annotation(const fs::path& path, const AnnotationTrack& track, int total_frames) {
  std::string out;
  out += kAnnotationHeader;
  out += '\n';
  switch (track.kind) {
    case AnnotationTrack::Kind::Keyframes: out += "format: keyframes\n"; break;
    case AnnotationTrack::Kind::Keyshots: out += "format: keyshots\n"; break;
    case AnnotationTrack::Kind::Scores: out += "format: scores\n"; break;
  }
  out += "frames: " + std::to_string(total_frames) + "\n";
  switch (track.kind) {
    case AnnotationTrack::Kind::Keyframes: {
      out += "data:";
      for (int f : track.keyframes) out += " " + std::to_string(f);
      out += '\n';
      break;
    }
    case AnnotationTrack::Kind::Keyshots: {
      for (const temporal::Interval& s : track.keyshots)
        out += "shot: " + std::to_string(s.start) + " " + std::to_string(s.end) + "\n";
      break;
    }
    case AnnotationTrack::Kind::Scores: {
      out += "data:";
      for (double v : track.scores) out += " " + fmt_double(v);
      out += '\n';
      break;
    }
  }
  io::atomic_write_file(path, out);
}

std::pair<AnnotationTrack, int> load_annotation(const fs::path& path) {
  LineReader r(path);
  if (r.done() || r.take() != kAnnotationHeader)
    throw ParseError(path.string() + ":1: missing annotation header");
  const std::string format(r.field("format"));
  const int frames = static_cast<int>(parse_int(r.field("frames"), r.where()));

  AnnotationTrack track;
  if (format == "keyframes") {
    track.kind = AnnotationTrack::Kind::Keyframes;
    for (std::string_view tok : split_ws(r.field("data")))
      track.keyframes.push_back(static_cast<int>(parse_int(tok, r.where())));
  } else if (format == "keyshots") {
    track.kind = AnnotationTrack::Kind::Keyshots;
    while (!r.done() && !r.peek().empty()) {
      const auto toks = split_ws(r.field("shot"));
      if (toks.size() != 2) throw ParseError(r.where() + ": shot needs 'start end'");
      track.keyshots.push_back({static_cast<int>(parse_int(toks[0], r.where())),
                                static_cast<int>(parse_int(toks[1], r.where()))});
    }
  } else if (format == "scores") {
    track.kind = AnnotationTrack::Kind::Scores;
    for (std::string_view tok : split_ws(r.field("data")))
      track.scores.push_back(parse_double(tok, r.where()));
  } else {
    throw ParseError(path.string() + ": unknown annotation format '" + format + "'");
  }
  return {std::move(track), frames};
}

// ---------------------------------------------------------------------------
// manifests and datasets

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json j;
  j["name"] = manifest.name;
  j["feature_dim"] = manifest.feature_dim;
  j["videos"] = json::array();
  for (const DatasetManifest::Entry& e : manifest.videos) {
    json v;
    v["id"] = e.id;
    v["features"] = e.feature_path;
    v["annotations"] = e.annotation_paths;
    j["videos"].push_back(v);
  }
  io::atomic_write_file(path, j.dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  try {
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.feature_dim = j.at("feature_dim").get<int>();
    for (const json& v : j.at("videos")) {
      DatasetManifest::Entry e;
      e.id = v.at("id").get<std::string>();
      e.feature_path = v.at("features").get<std::string>();
      for (const json& a : v.at("annotations")) e.annotation_paths.push_back(a.get<std::string>());
      m.videos.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
}

void validate(const VideoRecord& record) {
  const std::string who = "video " + record.id;
  if (record.frames() < 1) throw ParseError(who + ": empty feature sequence");
  if (!linalg::all_finite(record.features)) throw ParseError(who + ": non-finite feature value");
  if (!(record.fps_original > 0)) throw ParseError(who + ": fps must be positive");
  const int T = record.frames();
  for (size_t i = 0; i < record.annotations.size(); ++i) {
    const AnnotationTrack& track = record.annotations[i];
    const std::string field = who + ": annotation " + std::to_string(i);
    switch (track.kind) {
      case AnnotationTrack::Kind::Scores: {
        if (static_cast<int>(track.scores.size()) != T)
          throw ParseError(field + ": scores length " + std::to_string(track.scores.size()) +
                           " does not match " + std::to_string(T) + " frames");
        for (double v : track.scores)
          if (!(v >= 0.0 && v <= 1.0))
            throw ParseError(field + ": score " + fmt_double(v) + " outside [0, 1]");
        break;
      }
      case AnnotationTrack::Kind::Keyframes: {
        for (size_t k = 0; k < track.keyframes.size(); ++k) {
          const int f = track.keyframes[k];
          if (f < 0 || f >= T) throw ParseError(field + ": keyframe index out of range");
          if (k > 0 && f <= track.keyframes[k - 1])
            throw ParseError(field + ": keyframes must be sorted and distinct");
        }
        break;
      }
      case AnnotationTrack::Kind::Keyshots: {
        try {
          temporal::validate_keyshots(track.keyshots, T);
        } catch (const Error& e) {
          throw ParseError(field + ": " + e.what());
        }
        break;
      }
    }
  }
}

std::vector<VideoRecord> load_dataset(const fs::path& manifest_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  std::vector<VideoRecord> records;
  records.reserve(manifest.videos.size());
  for (const DatasetManifest::Entry& e : manifest.videos) {
    VideoRecord record;
    record.id = e.id;
    record.source_dataset = manifest.name;
    try {
      std::tie(record.features, record.fps_original) = load_features(dir / e.feature_path);
      if (record.features.cols != manifest.feature_dim)
        throw ParseError("feature dim " + std::to_string(record.features.cols) +
                         " does not match manifest dim " + std::to_string(manifest.feature_dim));
      for (const std::string& ap : e.annotation_paths) {
        auto [track, frames] = load_annotation(dir / ap);
        if (frames != record.frames())
          throw ParseError("annotation " + ap + " covers " + std::to_string(frames) +
                           " frames, features have " + std::to_string(record.frames()));
        record.annotations.push_back(std::move(track));
      }
    } catch (const ParseError& err) {
      throw ParseError("video " + e.id + ": " + err.what());
    }
    validate(record);
    records.push_back(std::move(record));
  }
  return records;
}

namespace {

std::string kind_tag(AnnotationTrack::Kind kind) {
  switch (kind) {
    case AnnotationTrack::Kind::Keyframes: return "keyframes";
    case AnnotationTrack::Kind::Keyshots: return "keyshots";
    case AnnotationTrack::Kind::Scores: return "scores";
  }
  return "?";
}

}  // namespace

fs::path save_dataset(const fs::path& dir, const std::string& name,
                      const std::vector<VideoRecord>& records) {
  fs::create_directories(dir);
  DatasetManifest manifest;
  manifest.name = name;
  manifest.feature_dim = records.empty() ? 0 : records.front().features.cols;
  for (const VideoRecord& record : records) {
    DatasetManifest::Entry e;
    e.id = record.id;
    e.feature_path = record.id + ".vsf";
    save_features(dir / e.feature_path, record.features, record.fps_original);
    for (size_t i = 0; i < record.annotations.size(); ++i) {
      const AnnotationTrack& track = record.annotations[i];
      const std::string ap =
          record.id + "." + std::to_string(i) + "." + kind_tag(track.kind) + ".ann";
      save_annotation(dir / ap, track, record.frames());
      e.annotation_paths.push_back(ap);
    }
    manifest.videos.push_back(std::move(e));
  }
  const fs::path manifest_path = dir / (name + ".json");
  save_manifest(manifest_path, manifest);
  return manifest_path;
}

// ---------------------------------------------------------------------------
// checkpoints

void save_checkpoint(const fs::path& path, const models::ModelCheckpoint& ck) {
  io::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(ck.kind);
  w.u32(static_cast<std::uint32_t>(ck.dims.size()));
  for (const auto& [key, value] : ck.dims) {
    w.str(key);
    w.u64(static_cast<std::uint64_t>(value));
  }
  w.u32(static_cast<std::uint32_t>(ck.meta.size()));
  for (const auto& [key, value] : ck.meta) {
    w.str(key);
    w.str(value);
  }
  w.u32(static_cast<std::uint32_t>(ck.weights.size()));
  for (const auto& [name, m] : ck.weights) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(m.rows));
    w.u32(static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) w.f64(v);
  }
  io::atomic_write_file(path, w.buf);
}

models::ModelCheckpoint load_checkpoint(const fs::path& path) {
  const std::string bytes = io::read_file(path);
  io::ByteReader r(bytes, "checkpoint " + path.string());
  r.expect_magic(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint " + path.string() + ": unsupported version " +
                       std::to_string(version));
  models::ModelCheckpoint ck;
  ck.kind = r.str();
  const std::uint32_t n_dims = r.u32();
  for (std::uint32_t i = 0; i < n_dims; ++i) {
    const std::string key = r.str();
    ck.dims[key] = static_cast<std::int64_t>(r.u64());
  }
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    const std::string key = r.str();
    ck.meta[key] = r.str();
  }
  const std::uint32_t n_weights = r.u32();
  for (std::uint32_t i = 0; i < n_weights; ++i) {
    const std::string name = r.str();
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    linalg::Matrix m(rows, cols);
    for (double& v : m.data) v = r.f64();
    ck.weights.emplace_back(name, std::move(m));
  }
  r.expect_end();
  return ck;
}

// ---------------------------------------------------------------------------
// summaries

void save_summary(const fs::path& path, const models::Summary& summary) {
  std::string out;
  out += kSummaryHeader;
  out += '\n';
  out += "frames: " + std::to_string(summary.total_frames) + "\n";
  out += "budget: " + std::to_string(summary.budget) + "\n";
  for (const temporal::Interval& s : summary.keyshots)
    out += "shot: " + std::to_string(s.start) + " " + std::to_string(s.end) + "\n";
  out += "keyframes:";
  for (int f : summary.keyframes) out += " " + std::to_string(f);
  out += '\n';
  io::atomic_write_file(path, out);
}

models::Summary load_summary(const fs::path& path) {
  LineReader r(path);
  if (r.done() || r.take() != kSummaryHeader)
    throw ParseError(path.string() + ":1: missing summary header");
  models::Summary s;
  s.total_frames = static_cast<int>(parse_int(r.field("frames"), r.where()));
  s.budget = static_cast<int>(parse_int(r.field("budget"), r.where()));
  while (!r.done() && r.peek().substr(0, 5) == "shot:") {
    const auto toks = split_ws(r.field("shot"));
    if (toks.size() != 2) throw ParseError(r.where() + ": shot needs 'start end'");
    s.keyshots.push_back({static_cast<int>(parse_int(toks[0], r.where())),
                          static_cast<int>(parse_int(toks[1], r.where()))});
  }
  for (std::string_view tok : split_ws(r.field("keyframes")))
    s.keyframes.push_back(static_cast<int>(parse_int(tok, r.where())));
  return s;
}

// ---------------------------------------------------------------------------
// subsampling

VideoRecord subsample(const VideoRecord& record, double target_fps) {
  if (!(target_fps > 0)) throw ContractError("subsample: target_fps must be positive");
  if (target_fps > record.fps_original)
    throw ContractError("subsample: target_fps above the original rate");
  const int stride = static_cast<int>(std::floor(record.fps_original / target_fps));
  const int T = record.frames();
  const int kept = (T - 1) / stride + 1;

  VideoRecord out;
  out.id = record.id;
  out.source_dataset = record.source_dataset;
  out.fps_original = target_fps;
  out.features = linalg::FeatureSequence(kept, record.features.cols);
  for (int k = 0; k < kept; ++k) {
    const auto src = record.features.row(k * stride);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
  }

  // nearest kept index, earlier on exact ties
  const auto snap = [stride, kept](int frame) {
    const int q = frame / stride;
    const int r = frame % stride;
    const int k = q + (2 * r > stride ? 1 : 0);
    return std::min(k, kept - 1);
  };

  for (const AnnotationTrack& track : record.annotations) {
    AnnotationTrack t;
    t.kind = track.kind;
    switch (track.kind) {
      case AnnotationTrack::Kind::Scores: {
        t.scores.reserve(kept);
        for (int k = 0; k < kept; ++k) t.scores.push_back(track.scores[k * stride]);
        break;
      }
      case AnnotationTrack::Kind::Keyframes: {
        for (int f : track.keyframes) t.keyframes.push_back(snap(f));
        std::sort(t.keyframes.begin(), t.keyframes.end());
        t.keyframes.erase(std::unique(t.keyframes.begin(), t.keyframes.end()),
                          t.keyframes.end());
        break;
      }
      case AnnotationTrack::Kind::Keyshots: {
        for (const temporal::Interval& s : track.keyshots) {
          int lo = (s.start + stride - 1) / stride;
          int hi = s.end / stride;
          if (lo > hi) lo = hi = snap((s.start + s.end) / 2);
          lo = std::min(lo, kept - 1);
          hi = std::min(hi, kept - 1);
          if (!t.keyshots.empty() && lo <= t.keyshots.back().end)
            t.keyshots.back().end = std::max(t.keyshots.back().end, hi);
          else
            t.keyshots.push_back({lo, hi});
        }
        break;
      }
    }
    out.annotations.push_back(std::move(t));
  }
  validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// synthetic corpus

void validate(const SyntheticConfig& cfg) {
  if (cfg.n_videos < 1 || cfg.feature_dim < 1 || cfg.n_clusters < 1 || cfg.teacher_hidden < 1)
    throw ContractError("synthetic config: counts must be positive");
  if (cfg.frames_min < 1 || cfg.frames_max < cfg.frames_min)
    throw ContractError("synthetic config: bad frame range");
  if (cfg.segment_min < 1 || cfg.segment_max < cfg.segment_min)
    throw ContractError("synthetic config: bad segment range");
  if (cfg.noise_sigma < 0) throw ContractError("synthetic config: noise_sigma must be >= 0");
  if (!(cfg.budget_fraction > 0) || cfg.budget_fraction > 1)
    throw ContractError("synthetic config: budget_fraction must be in (0, 1]");
  if (cfg.kts_target_len < 1) throw ContractError("synthetic config: kts_target_len must be >= 1");
}

temporal::Segmentation canonical_segmentation(const linalg::FeatureSequence& x,
                                              int kts_target_len, double budget_fraction) {
  const int budget = temporal::budget_frames(x.rows, budget_fraction);
  int target = kts_target_len;
  while (true) {
    const int max_segments = std::max(4, 3 * x.rows / target);
    temporal::Segmentation seg = temporal::kts_segment(x, target, max_segments);
    int smallest = x.rows;
    for (int i = 0; i < seg.count(); ++i) smallest = std::min(smallest, seg.segment(i).length());
    if (smallest <= budget || target <= 2) return seg;
    target = std::max(2, target / 2);
  }
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);

  models::VsLstmModel teacher =
      models::make_vslstm(cfg.feature_dim, cfg.teacher_hidden, rng, cfg.teacher_init_scale);

  linalg::Matrix centroids(cfg.n_clusters, cfg.feature_dim);
  {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double& v : centroids.data) v = unit(rng);
  }

  std::uniform_int_distribution<int> frames_dist(cfg.frames_min, cfg.frames_max);
  std::uniform_int_distribution<int> seg_len_dist(cfg.segment_min, cfg.segment_max);
  std::uniform_int_distribution<int> cluster_dist(0, cfg.n_clusters - 1);
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticCorpus corpus;
  for (int v = 0; v < cfg.n_videos; ++v) {
    const int T = frames_dist(rng);
    linalg::FeatureSequence x(T, cfg.feature_dim);
    int t = 0;
    int prev_cluster = -1;
    while (t < T) {
      const int len = std::min(seg_len_dist(rng), T - t);
      int cluster = cluster_dist(rng);
      if (cfg.n_clusters > 1 && cluster == prev_cluster) cluster = (cluster + 1) % cfg.n_clusters;
      prev_cluster = cluster;
      for (int s = 0; s < len; ++s, ++t)
        for (int c = 0; c < cfg.feature_dim; ++c)
          x.at(t, c) = centroids.at(cluster, c) + cfg.noise_sigma * noise(rng);
    }

    temporal::ImportanceCurve curve = models::vslstm_predict(teacher, x);
    double lo = curve[0], hi = curve[0];
    for (double s : curve) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    if (hi - lo < 1e-12) {
      std::fill(curve.begin(), curve.end(), 0.5);
    } else {
      for (double& s : curve) s = (s - lo) / (hi - lo);
    }

    const temporal::Segmentation seg =
        canonical_segmentation(x, cfg.kts_target_len, cfg.budget_fraction);
    const int budget = temporal::budget_frames(T, cfg.budget_fraction);
    auto [shots, keyframes] = temporal::scores_to(curve, seg, budget);

    VideoRecord record;
    char id[16];
    std::snprintf(id, sizeof(id), "v%03d", v);
    record.id = id;
    record.fps_original = 2.0;
    record.features = std::move(x);
    record.source_dataset = "synthetic";

    AnnotationTrack scores_track;
    scores_track.kind = AnnotationTrack::Kind::Scores;
    scores_track.scores = std::move(curve);
    AnnotationTrack shots_track;
    shots_track.kind = AnnotationTrack::Kind::Keyshots;
    shots_track.keyshots = std::move(shots);
    AnnotationTrack keyframe_track;
    keyframe_track.kind = AnnotationTrack::Kind::Keyframes;
    keyframe_track.keyframes = std::move(keyframes);
    record.annotations.push_back(std::move(scores_track));
    record.annotations.push_back(std::move(shots_track));
    record.annotations.push_back(std::move(keyframe_track));

    validate(record);
    corpus.videos.push_back(std::move(record));
  }

  corpus.teacher = models::to_checkpoint(teacher);
  corpus.teacher.meta["role"] = "synthetic-teacher";
  corpus.teacher.meta["seed"] = std::to_string(cfg.seed);
  return corpus;
}

}  // namespace vsum::data
