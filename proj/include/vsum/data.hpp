#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsum/models.hpp"
#include "vsum/temporal.hpp"

namespace vsum::data {

// One ground-truth annotation in one of the three canonical formats.
struct AnnotationTrack {
  enum class Kind { Keyframes, Keyshots, Scores };
  Kind kind = Kind::Scores;
  temporal::KeyframeSet keyframes;
  temporal::Keyshots keyshots;
  temporal::ImportanceCurve scores;
};

struct VideoRecord {
  std::string id;
  double fps_original = 2.0;
  linalg::FeatureSequence features;
  std::vector<AnnotationTrack> annotations;
  std::string source_dataset;

  int frames() const { return features.rows; }
};

// Full validation battery: finiteness, lengths, ranges. Errors name the
// video id and the offending field.
void validate(const VideoRecord& record);

struct DatasetManifest {
  struct Entry {
    std::string id;
    std::string feature_path;                   // relative to the manifest
    std::vector<std::string> annotation_paths;  // relative to the manifest
  };
  std::string name;
  int feature_dim = 0;
  std::vector<Entry> videos;
};

// ---------------------------------------------------------------------------
// files

// features: magic VSFT, version, T, dim, fps, row-major f64
void save_features(const std::filesystem::path& path, const linalg::FeatureSequence& x,
                   double fps);
std::pair<linalg::FeatureSequence, double> load_features(const std::filesystem::path& path);

// annotations: line-oriented text, format tag + frame count + data lines
void save_annotation(const std::filesystem::path& path, const AnnotationTrack& track,
                     int total_frames);
std::pair<AnnotationTrack, int> load_annotation(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

std::vector<VideoRecord> load_dataset(const std::filesystem::path& manifest_path);

// Writes one feature file and one annotation file per track per video, plus
// the manifest, into dir; returns the manifest path.
std::filesystem::path save_dataset(const std::filesystem::path& dir, const std::string& name,
                                   const std::vector<VideoRecord>& records);

// checkpoints: magic VSCK, version, kind, dims, meta, named weight matrices
void save_checkpoint(const std::filesystem::path& path, const models::ModelCheckpoint& ck);
models::ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

void save_summary(const std::filesystem::path& path, const models::Summary& summary);
models::Summary load_summary(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// frame-rate subsampling

// Keeps every floor(fps_original / target_fps)-th frame starting at frame 0.
// Keyframes snap to the nearest kept frame (earlier on ties), keyshots are
// re-expressed on the kept grid (merged when they collide), curves sampled.
VideoRecord subsample(const VideoRecord& record, double target_fps);

// ---------------------------------------------------------------------------
// synthetic teacher-student corpus

struct SyntheticConfig {
  int n_videos = 50;
  int frames_min = 60;
  int frames_max = 200;
  int feature_dim = 16;
  int n_clusters = 4;
  int segment_min = 5;
  int segment_max = 20;
  int teacher_hidden = 16;
  double teacher_init_scale = 0.5;
  double noise_sigma = 0.1;
  double budget_fraction = 0.15;
  int kts_target_len = 10;
  std::uint64_t seed = 0;
};

void validate(const SyntheticConfig& cfg);

struct SyntheticCorpus {
  std::vector<VideoRecord> videos;
  models::ModelCheckpoint teacher;
};

// Piecewise-constant cluster features plus Gaussian noise, labeled by a
// frozen random teacher vsLSTM (scores min-max rescaled to [0,1] per video);
// keyshot/keyframe tracks derived with the budget via scores_to.
SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg);

// The segmentation every consumer of a record agrees on: KTS at
// target_mean_len, halving the target until the summary budget can fit at
// least one interval.
temporal::Segmentation canonical_segmentation(const linalg::FeatureSequence& x,
                                              int kts_target_len, double budget_fraction);

}  // namespace vsum::data
