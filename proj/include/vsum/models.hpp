#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vsum/autodiff.hpp"
#include "vsum/dpp.hpp"
#include "vsum/eval_metrics.hpp"
#include "vsum/temporal.hpp"

namespace vsum::models {

using Mlp = std::vector<autodiff::DenseLayerParams>;

// Bidirectional LSTM with a scalar importance head f_i over
// (h_fwd, h_bwd, x_t).
struct VsLstmModel {
  autodiff::BiLstmParams bilstm;
  Mlp f_i;

  int feature_dim() const { return bilstm.input_size(); }
  int hidden_size() const { return bilstm.hidden_size(); }
};

// vsLSTM plus a similarity head f_s emitting embeddings phi_t; the two heads
// consume the same concatenated (h_fwd, h_bwd, x_t) input.
struct DppLstmModel {
  autodiff::BiLstmParams bilstm;
  Mlp f_i;
  Mlp f_s;

  int feature_dim() const { return bilstm.input_size(); }
  int hidden_size() const { return bilstm.hidden_size(); }
  int embed_dim() const { return f_s.back().output_size(); }
};

// Ablation: similarity head only, kernel L = Phi Phi^T.
struct DppLstmSingleModel {
  autodiff::BiLstmParams bilstm;
  Mlp f_s;

  int feature_dim() const { return bilstm.input_size(); }
  int hidden_size() const { return bilstm.hidden_size(); }
  int embed_dim() const { return f_s.back().output_size(); }
};

enum class BaselineVariant { Shot, Frame };

// Two-hidden-layer sigmoid MLP over shot-mean features (Shot) or a
// window_k-frame concatenated window (Frame).
struct MlpBaseline {
  BaselineVariant variant = BaselineVariant::Shot;
  Mlp net;
  int window_k = 5;  // Frame only; odd
  int feature_dim = 0;
};

// Serializable snapshot of any model plus training metadata.
struct ModelCheckpoint {
  std::string kind;  // vslstm | dpplstm | dpplstm-single | mlp-shot | mlp-frame
  std::map<std::string, std::int64_t> dims;
  std::vector<std::pair<std::string, linalg::Matrix>> weights;
  std::map<std::string, std::string> meta;
};

struct TrainReport {
  std::vector<double> train_loss;  // one entry per epoch, stages concatenated
  std::vector<double> val_f;       // validation F-score after each epoch
  int stage1_epochs = 0;           // dppLSTM: epochs belonging to stage 1
  int stopped_epoch = 0;           // total epochs actually run
  int best_epoch = 0;              // 1-based argmax of val_f (earliest on ties)
  double best_val_f = 0.0;
  ModelCheckpoint best_checkpoint;
};

// Budgeted summary of one video.
struct Summary {
  temporal::Keyshots keyshots;
  temporal::KeyframeSet keyframes;
  int total_frames = 0;
  int budget = 0;  // frames
};

void validate_budget(const Summary& s);

struct TrainVideo {
  const linalg::FeatureSequence* features = nullptr;
  const temporal::Segmentation* seg = nullptr;  // needed by mlp-shot targets
  temporal::ImportanceCurve curve;              // regression target in [0,1]
  temporal::KeyframeSet keyframes;              // dpp stage-2 target
};

struct ValVideo {
  const linalg::FeatureSequence* features = nullptr;
  const temporal::Segmentation* seg = nullptr;
  std::vector<temporal::Keyshots> refs;
};

struct TrainOptions {
  double budget_fraction = 0.15;
  eval::AggMode agg = eval::AggMode::Mean;
  double stage2_lr_factor = 0.1;  // stage-2 rate = factor * stage-1 rate
};

// ---------------------------------------------------------------------------
// construction

VsLstmModel make_vslstm(int feature_dim, int hidden, std::mt19937_64& rng,
                        double init_scale = autodiff::kDefaultInitScale);
DppLstmModel make_dpplstm(int feature_dim, int hidden, int embed_dim, std::mt19937_64& rng,
                          double init_scale = autodiff::kDefaultInitScale);
DppLstmSingleModel make_dpplstm_single(int feature_dim, int hidden, int embed_dim,
                                       std::mt19937_64& rng,
                                       double init_scale = autodiff::kDefaultInitScale);
MlpBaseline make_mlp_baseline(BaselineVariant variant, int feature_dim, int hidden,
                              int window_k, std::mt19937_64& rng,
                              double init_scale = autodiff::kDefaultInitScale);

// Flat parameter views in the canonical (checkpoint) order.
autodiff::ParamPack parameters(VsLstmModel& m);
autodiff::ParamPack parameters(DppLstmModel& m);
autodiff::ParamPack parameters(DppLstmSingleModel& m);
autodiff::ParamPack parameters(MlpBaseline& m);

// ---------------------------------------------------------------------------
// inference

temporal::ImportanceCurve vslstm_predict(const VsLstmModel& m, const linalg::FeatureSequence& x);

dpp::DppKernel dpplstm_build_kernel(const DppLstmModel& m, const linalg::FeatureSequence& x);
dpp::DppKernel dpplstm_single_build_kernel(const DppLstmSingleModel& m,
                                           const linalg::FeatureSequence& x);

// Per-shot scores for the Shot variant (length = seg.count()); per-frame
// scores for the Frame variant (length = T, window padded by edge
// replication).
std::vector<double> baseline_predict(const MlpBaseline& m, const linalg::FeatureSequence& x,
                                     const temporal::Segmentation& seg);

// scores -> knapsack keyshots + argmax keyframes under floor(fraction * T)
Summary summarize_scores(const temporal::ImportanceCurve& scores,
                         const temporal::Segmentation& seg, double budget_fraction);

Summary vslstm_summarize(const VsLstmModel& m, const linalg::FeatureSequence& x,
                         const temporal::Segmentation& seg, double budget_fraction);

// Greedy MAP keyframes -> keyshots, then fills any remaining budget with the
// best non-selected intervals ranked by mean f_i score.
Summary dpplstm_summarize(const DppLstmModel& m, const linalg::FeatureSequence& x,
                          const temporal::Segmentation& seg, double budget_fraction);

// Same flow with L = Phi Phi^T and diag(L) as the fill-in scores.
Summary dpplstm_single_summarize(const DppLstmSingleModel& m, const linalg::FeatureSequence& x,
                                 const temporal::Segmentation& seg, double budget_fraction);

Summary baseline_summarize(const MlpBaseline& m, const linalg::FeatureSequence& x,
                           const temporal::Segmentation& seg, double budget_fraction);

// ---------------------------------------------------------------------------
// training

TrainReport vslstm_train(VsLstmModel& m, const std::vector<TrainVideo>& train,
                         const std::vector<ValVideo>& val, const autodiff::SgdConfig& cfg,
                         const TrainOptions& opts = {});

// Stage 1 fits bilstm + f_i on the importance curves; stage 2 maximizes the
// DPP log likelihood of the keyframe targets over all parameters.
TrainReport dpplstm_train_stagewise(DppLstmModel& m, const std::vector<TrainVideo>& train,
                                    const std::vector<ValVideo>& val,
                                    const autodiff::SgdConfig& cfg,
                                    const TrainOptions& opts = {});

TrainReport dpplstm_single_train(DppLstmSingleModel& m, const std::vector<TrainVideo>& train,
                                 const std::vector<ValVideo>& val,
                                 const autodiff::SgdConfig& cfg, const TrainOptions& opts = {});

TrainReport baseline_train(MlpBaseline& m, const std::vector<TrainVideo>& train,
                           const std::vector<ValVideo>& val, const autodiff::SgdConfig& cfg,
                           const TrainOptions& opts = {});

// ---------------------------------------------------------------------------
// differentiable losses (exposed for gradient checking)

// Mean squared error of the f_i scores against targets; gradients in the
// canonical parameter order.
double vslstm_loss_and_grad(VsLstmModel& m, const linalg::FeatureSequence& x,
                            const temporal::ImportanceCurve& targets,
                            autodiff::GradientBundle* grads);

// Negative DPP log likelihood -[logdet(L_z*) - logdet(L+I)] of the keyframe
// subset under the kernel built from the current parameters.
double dpplstm_nll_and_grad(DppLstmModel& m, const linalg::FeatureSequence& x,
                            const temporal::KeyframeSet& keyframes,
                            autodiff::GradientBundle* grads);

double dpplstm_single_nll_and_grad(DppLstmSingleModel& m, const linalg::FeatureSequence& x,
                                   const temporal::KeyframeSet& keyframes,
                                   autodiff::GradientBundle* grads);

// ---------------------------------------------------------------------------
// checkpoints (serialized by the data module)

ModelCheckpoint to_checkpoint(VsLstmModel& m);
ModelCheckpoint to_checkpoint(DppLstmModel& m);
ModelCheckpoint to_checkpoint(DppLstmSingleModel& m);
ModelCheckpoint to_checkpoint(MlpBaseline& m);

VsLstmModel vslstm_from_checkpoint(const ModelCheckpoint& ck);
DppLstmModel dpplstm_from_checkpoint(const ModelCheckpoint& ck);
DppLstmSingleModel dpplstm_single_from_checkpoint(const ModelCheckpoint& ck);
MlpBaseline baseline_from_checkpoint(const ModelCheckpoint& ck);

// Mean multi-user F over a validation set for a frozen model checkpoint kind.
double mean_summary_f(const std::vector<ValVideo>& videos,
                      const std::function<Summary(const ValVideo&)>& summarize,
                      eval::AggMode agg);

}  // namespace vsum::models
