#pragma once

#include <map>
#include <string>
#include <vector>

#include "vsum/adapt.hpp"
#include "vsum/data.hpp"
#include "vsum/eval_metrics.hpp"
#include "vsum/models.hpp"

namespace vsum::eval {

enum class Setting { Canonical, Augmented, Transfer };
enum class ModelKind { VsLstm, DppLstm, DppLstmSingle, MlpShot, MlpFrame };

std::string to_string(Setting s);
std::string to_string(ModelKind k);
Setting setting_from_string(const std::string& s);
ModelKind model_kind_from_string(const std::string& s);

struct VideoKey {
  std::string dataset;
  std::string id;
  friend auto operator<=>(const VideoKey&, const VideoKey&) = default;
};

// Train/val/test assignment. Canonical draws everything from the target
// dataset; augmented adds the auxiliary datasets to train/val; transfer
// trains on auxiliaries only and tests on the whole target.
struct SplitSpec {
  Setting setting = Setting::Canonical;
  std::string target_dataset;
  std::vector<VideoKey> train;
  std::vector<VideoKey> val;
  std::vector<VideoKey> test;
  std::uint64_t seed = 0;
};

SplitSpec make_split(const std::map<std::string, std::vector<std::string>>& dataset_videos,
                     const std::string& target, Setting setting, double test_fraction,
                     double val_fraction, std::uint64_t seed);

// Throws ConfigError when test overlaps train/val, canonical mixes datasets,
// or transfer leaks the target into training.
void validate_split(const SplitSpec& split);

// Targets and reference summaries derived from a record's stored annotation
// tracks (scores pass through; keyshots/keyframes go through the format
// conversions; multiple keyframe tracks collapse by >= 50% consensus).
struct PreparedVideo {
  VideoKey key;
  linalg::FeatureSequence features;
  temporal::Segmentation seg;
  temporal::ImportanceCurve curve;
  temporal::KeyframeSet keyframes;  // filled when needs_keyframes
  std::vector<temporal::Keyshots> refs;
};

PreparedVideo prepare_video(const data::VideoRecord& rec, bool needs_keyframes,
                            int kts_target_len, double budget_fraction);

struct ExperimentConfig {
  ModelKind model = ModelKind::VsLstm;
  autodiff::SgdConfig sgd;
  models::TrainOptions train_options;
  int hidden = 16;
  int embed_dim = 16;  // phi_t dimension for the dpp models
  int window_k = 5;
  double init_scale = autodiff::kDefaultInitScale;
  int kts_target_len = 10;
  int runs = 1;
  bool adapt_features = false;
  bool adapt_pooled_anchor = false;  // align everything to the pooled corpus
  double adapt_ridge = -1.0;         // < 0: auto_ridge per fit
};

struct RunResult {
  models::TrainReport train_report;
  double test_f = 0.0;
  std::vector<std::pair<std::string, double>> per_video_f;  // "dataset/id" -> F
};

struct ExperimentReport {
  SplitSpec split;
  std::vector<RunResult> runs;
  double mean_f = 0.0;
  double std_f = 0.0;  // sample standard deviation over runs
  std::vector<std::pair<std::string, adapt::LinearTransform>> transforms;
};

// Trains on split.train (early stopping on split.val), reports F on
// split.test; run r uses seed sgd.seed + r for init and epoch shuffling.
ExperimentReport run_experiment(const std::vector<data::VideoRecord>& records,
                                const SplitSpec& split, const ExperimentConfig& cfg);

}  // namespace vsum::eval
