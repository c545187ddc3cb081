#include "vsum/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace vsum::eval {

std::string to_string(Setting s) {
  switch (s) {
    case Setting::Canonical: return "canonical";
    case Setting::Augmented: return "augmented";
    case Setting::Transfer: return "transfer";
  }
  return "?";
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::VsLstm: return "vslstm";
    case ModelKind::DppLstm: return "dpplstm";
    case ModelKind::DppLstmSingle: return "dpplstm-single";
    case ModelKind::MlpShot: return "mlp-shot";
    case ModelKind::MlpFrame: return "mlp-frame";
  }
  return "?";
}

Setting setting_from_string(const std::string& s) {
  if (s == "canonical") return Setting::Canonical;
  if (s == "augmented") return Setting::Augmented;
  if (s == "transfer") return Setting::Transfer;
  throw ConfigError("unknown setting '" + s + "'");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "vslstm") return ModelKind::VsLstm;
  if (s == "dpplstm") return ModelKind::DppLstm;
  if (s == "dpplstm-single") return ModelKind::DppLstmSingle;
  if (s == "mlp-shot") return ModelKind::MlpShot;
  if (s == "mlp-frame") return ModelKind::MlpFrame;
  throw ConfigError("unknown model '" + s + "'");
}

// ---------------------------------------------------------------------------
// splits

namespace {

std::vector<VideoKey> keys_of(const std::string& dataset, const std::vector<std::string>& ids) {
  std::vector<VideoKey> keys;
  keys.reserve(ids.size());
  for (const std::string& id : ids) keys.push_back({dataset, id});
  return keys;
}

// deterministic seeded shuffle
void shuffle_keys(std::vector<VideoKey>& keys, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);
}

}  // namespace

SplitSpec make_split(const std::map<std::string, std::vector<std::string>>& dataset_videos,
                     const std::string& target, Setting setting, double test_fraction,
                     double val_fraction, std::uint64_t seed) {
  const auto it = dataset_videos.find(target);
  if (it == dataset_videos.end()) throw ConfigError("make_split: unknown target '" + target + "'");
  if (!(test_fraction > 0) || test_fraction >= 1)
    throw ConfigError("make_split: test_fraction must be in (0, 1)");
  if (!(val_fraction > 0) || val_fraction >= 1)
    throw ConfigError("make_split: val_fraction must be in (0, 1)");

  SplitSpec split;
  split.setting = setting;
  split.target_dataset = target;
  split.seed = seed;

  std::vector<VideoKey> target_keys = keys_of(target, it->second);
  shuffle_keys(target_keys, seed);

  std::vector<VideoKey> pool;  // training + validation material
  if (setting == Setting::Transfer) {
    split.test = target_keys;
  } else {
    const int n_test =
        std::max(1, static_cast<int>(std::round(test_fraction * target_keys.size())));
    if (n_test >= static_cast<int>(target_keys.size()))
      throw ConfigError("make_split: target dataset too small for the test fraction");
    split.test.assign(target_keys.begin(), target_keys.begin() + n_test);
    pool.assign(target_keys.begin() + n_test, target_keys.end());
  }
  if (setting != Setting::Canonical) {
    for (const auto& [name, ids] : dataset_videos) {
      if (name == target) continue;
      const std::vector<VideoKey> aux = keys_of(name, ids);
      pool.insert(pool.end(), aux.begin(), aux.end());
    }
  }
  if (pool.empty()) throw ConfigError("make_split: no training material for this setting");

  shuffle_keys(pool, seed + 1);
  const int n_val = std::max(1, static_cast<int>(std::round(val_fraction * pool.size())));
  if (n_val >= static_cast<int>(pool.size()))
    throw ConfigError("make_split: pool too small to carve a validation set");
  split.val.assign(pool.begin(), pool.begin() + n_val);
  split.train.assign(pool.begin() + n_val, pool.end());

  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  validate_split(split);
  return split;
}

void validate_split(const SplitSpec& split) {
  if (split.train.empty() || split.val.empty() || split.test.empty())
    throw ConfigError("split: train, val and test must all be non-empty");

  std::set<VideoKey> seen(split.train.begin(), split.train.end());
  seen.insert(split.val.begin(), split.val.end());
  for (const VideoKey& k : split.test)
    if (seen.count(k))
      throw ConfigError("split: test video " + k.dataset + "/" + k.id +
                        " also appears in train/val");

  if (split.setting == Setting::Canonical) {
    for (const VideoKey& k : seen)
      if (k.dataset != split.target_dataset)
        throw ConfigError("split: canonical setting must stay inside the target dataset");
  }
  if (split.setting == Setting::Transfer) {
    for (const VideoKey& k : seen)
      if (k.dataset == split.target_dataset)
        throw ConfigError("split: transfer setting must exclude the target from train/val");
  }
  for (const VideoKey& k : split.test)
    if (k.dataset != split.target_dataset)
      throw ConfigError("split: test videos must come from the target dataset");
}

// ---------------------------------------------------------------------------
// annotation derivation (Supplement-style conversions on the training side)

namespace {

using data::AnnotationTrack;
using data::VideoRecord;

const AnnotationTrack* first_of(const VideoRecord& r, AnnotationTrack::Kind kind) {
  for (const AnnotationTrack& t : r.annotations)
    if (t.kind == kind) return &t;
  return nullptr;
}

// >= 50% consensus over all keyframe tracks
temporal::KeyframeSet consensus_keyframes(const VideoRecord& r) {
  std::vector<int> votes(r.frames(), 0);
  int n_tracks = 0;
  for (const AnnotationTrack& t : r.annotations) {
    if (t.kind != AnnotationTrack::Kind::Keyframes) continue;
    ++n_tracks;
    for (int f : t.keyframes) ++votes[f];
  }
  temporal::KeyframeSet out;
  for (int f = 0; f < r.frames(); ++f)
    if (2 * votes[f] >= n_tracks && votes[f] > 0) out.push_back(f);
  return out;
}

temporal::ImportanceCurve derive_curve(const VideoRecord& r, const temporal::Segmentation& seg,
                                       int budget) {
  if (const AnnotationTrack* t = first_of(r, AnnotationTrack::Kind::Scores)) return t->scores;
  if (const AnnotationTrack* t = first_of(r, AnnotationTrack::Kind::Keyshots))
    return temporal::keyshots_to(t->keyshots, r.frames()).second;
  if (first_of(r, AnnotationTrack::Kind::Keyframes))
    return temporal::keyframes_to(consensus_keyframes(r), seg, budget).second;
  throw ConfigError("video " + r.id + ": no annotations to derive an importance curve from");
}

temporal::KeyframeSet derive_keyframes(const VideoRecord& r, const temporal::Segmentation& seg,
                                       int budget) {
  if (first_of(r, AnnotationTrack::Kind::Keyframes)) return consensus_keyframes(r);
  if (const AnnotationTrack* t = first_of(r, AnnotationTrack::Kind::Scores))
    return temporal::scores_to(t->scores, seg, budget).second;
  if (const AnnotationTrack* t = first_of(r, AnnotationTrack::Kind::Keyshots))
    return temporal::keyshots_to(t->keyshots, r.frames()).first;
  throw ConfigError("video " + r.id + ": no annotations to derive keyframes from");
}

std::vector<temporal::Keyshots> derive_refs(const VideoRecord& r,
                                            const temporal::Segmentation& seg, int budget) {
  std::vector<temporal::Keyshots> refs;
  for (const AnnotationTrack& t : r.annotations) {
    switch (t.kind) {
      case AnnotationTrack::Kind::Keyshots: refs.push_back(t.keyshots); break;
      case AnnotationTrack::Kind::Scores:
        refs.push_back(temporal::scores_to(t.scores, seg, budget).first);
        break;
      case AnnotationTrack::Kind::Keyframes:
        refs.push_back(temporal::keyframes_to(t.keyframes, seg, budget).first);
        break;
    }
  }
  if (refs.empty())
    throw ConfigError("video " + r.id + ": no annotations to evaluate against");
  return refs;
}

}  // namespace

PreparedVideo prepare_video(const data::VideoRecord& rec, bool needs_keyframes,
                            int kts_target_len, double budget_fraction) {
  PreparedVideo p;
  p.key = {rec.source_dataset, rec.id};
  p.seg = data::canonical_segmentation(rec.features, kts_target_len, budget_fraction);
  const int budget = temporal::budget_frames(rec.frames(), budget_fraction);
  p.curve = derive_curve(rec, p.seg, budget);
  if (needs_keyframes) p.keyframes = derive_keyframes(rec, p.seg, budget);
  p.refs = derive_refs(rec, p.seg, budget);
  p.features = rec.features;
  return p;
}

// ---------------------------------------------------------------------------
// the harness

ExperimentReport run_experiment(const std::vector<data::VideoRecord>& records,
                                const SplitSpec& split, const ExperimentConfig& cfg) {
  validate_split(split);
  if (cfg.runs < 1) throw ConfigError("run_experiment: runs must be >= 1");

  std::map<VideoKey, const VideoRecord*> index;
  for (const VideoRecord& r : records) index[{r.source_dataset, r.id}] = &r;
  const auto find = [&](const VideoKey& k) -> const VideoRecord& {
    const auto it = index.find(k);
    if (it == index.end())
      throw ConfigError("split references unknown video " + k.dataset + "/" + k.id);
    return *it->second;
  };

  ExperimentReport report;
  report.split = split;

  // feature adaptation: auxiliary datasets aligned to the target (or
  // everything aligned to the pooled corpus)
  std::map<std::string, adapt::LinearTransform> transforms;
  if (cfg.adapt_features && split.setting != Setting::Canonical) {
    std::map<std::string, std::vector<const VideoRecord*>> by_dataset;
    for (const auto& [key, rec] : index) by_dataset[key.dataset].push_back(rec);

    const auto stack_rows = [](const std::vector<const VideoRecord*>& recs) {
      int total = 0;
      for (const VideoRecord* r : recs) total += r->frames();
      linalg::Matrix all(total, recs.front()->features.cols);
      int row = 0;
      for (const VideoRecord* r : recs)
        for (int t = 0; t < r->frames(); ++t, ++row) {
          const auto src = r->features.row(t);
          std::copy(src.begin(), src.end(), all.row(row).begin());
        }
      return all;
    };

    if (cfg.adapt_pooled_anchor) {
      std::vector<const VideoRecord*> everything;
      for (const auto& [name, recs] : by_dataset)
        everything.insert(everything.end(), recs.begin(), recs.end());
      const linalg::Matrix pooled = stack_rows(everything);
      const double ridge =
          cfg.adapt_ridge >= 0 ? cfg.adapt_ridge : adapt::auto_ridge(linalg::covariance(pooled));
      for (const auto& [name, recs] : by_dataset)
        transforms.emplace(name,
                           adapt::fit_align(stack_rows(recs), pooled, ridge, name + "->pooled"));
    } else {
      const linalg::Matrix target_rows = stack_rows(by_dataset.at(split.target_dataset));
      const double ridge = cfg.adapt_ridge >= 0
                               ? cfg.adapt_ridge
                               : adapt::auto_ridge(linalg::covariance(target_rows));
      for (const auto& [name, recs] : by_dataset) {
        if (name == split.target_dataset) continue;
        transforms.emplace(name, adapt::fit_align(stack_rows(recs), target_rows, ridge,
                                                  name + "->" + split.target_dataset));
      }
    }
    for (auto& [name, t] : transforms) report.transforms.emplace_back(name, t);
  }

  // prepare every referenced video once: segmentation on the original
  // features, targets and references from the stored annotations
  const bool needs_keyframes =
      cfg.model == ModelKind::DppLstm || cfg.model == ModelKind::DppLstmSingle;
  const auto prepare = [&](const VideoKey& key) {
    const VideoRecord& rec = find(key);
    PreparedVideo p = prepare_video(rec, needs_keyframes, cfg.kts_target_len,
                                    cfg.train_options.budget_fraction);
    const auto it = transforms.find(key.dataset);
    if (it != transforms.end()) p.features = adapt::apply_transform(it->second, rec.features);
    return p;
  };

  std::vector<PreparedVideo> train_videos, val_videos, test_videos;
  for (const VideoKey& k : split.train) train_videos.push_back(prepare(k));
  for (const VideoKey& k : split.val) val_videos.push_back(prepare(k));
  for (const VideoKey& k : split.test) test_videos.push_back(prepare(k));

  std::vector<models::TrainVideo> train;
  for (const PreparedVideo& p : train_videos)
    train.push_back({&p.features, &p.seg, p.curve, p.keyframes});
  std::vector<models::ValVideo> val;
  for (const PreparedVideo& p : val_videos) val.push_back({&p.features, &p.seg, p.refs});

  const int feature_dim = train_videos.front().features.cols;

  for (int run = 0; run < cfg.runs; ++run) {
    autodiff::SgdConfig sgd = cfg.sgd;
    sgd.seed = cfg.sgd.seed + static_cast<std::uint64_t>(run);
    std::mt19937_64 init_rng(sgd.seed ^ 0x5deece66dULL);

    RunResult result;
    std::function<models::Summary(const linalg::FeatureSequence&, const temporal::Segmentation&)>
        summarize;

    switch (cfg.model) {
      case ModelKind::VsLstm: {
        models::VsLstmModel m = models::make_vslstm(feature_dim, cfg.hidden, init_rng,
                                                    cfg.init_scale);
        result.train_report = models::vslstm_train(m, train, val, sgd, cfg.train_options);
        summarize = [m = std::move(m), &cfg](const linalg::FeatureSequence& x,
                                             const temporal::Segmentation& seg) {
          return models::vslstm_summarize(m, x, seg, cfg.train_options.budget_fraction);
        };
        break;
      }
      case ModelKind::DppLstm: {
        models::DppLstmModel m =
            models::make_dpplstm(feature_dim, cfg.hidden, cfg.embed_dim, init_rng, cfg.init_scale);
        result.train_report = models::dpplstm_train_stagewise(m, train, val, sgd,
                                                              cfg.train_options);
        summarize = [m = std::move(m), &cfg](const linalg::FeatureSequence& x,
                                             const temporal::Segmentation& seg) {
          return models::dpplstm_summarize(m, x, seg, cfg.train_options.budget_fraction);
        };
        break;
      }
      case ModelKind::DppLstmSingle: {
        models::DppLstmSingleModel m = models::make_dpplstm_single(
            feature_dim, cfg.hidden, cfg.embed_dim, init_rng, cfg.init_scale);
        result.train_report = models::dpplstm_single_train(m, train, val, sgd, cfg.train_options);
        summarize = [m = std::move(m), &cfg](const linalg::FeatureSequence& x,
                                             const temporal::Segmentation& seg) {
          return models::dpplstm_single_summarize(m, x, seg, cfg.train_options.budget_fraction);
        };
        break;
      }
      case ModelKind::MlpShot:
      case ModelKind::MlpFrame: {
        models::MlpBaseline m = models::make_mlp_baseline(
            cfg.model == ModelKind::MlpShot ? models::BaselineVariant::Shot
                                            : models::BaselineVariant::Frame,
            feature_dim, cfg.hidden, cfg.window_k, init_rng, cfg.init_scale);
        result.train_report = models::baseline_train(m, train, val, sgd, cfg.train_options);
        summarize = [m = std::move(m), &cfg](const linalg::FeatureSequence& x,
                                             const temporal::Segmentation& seg) {
          return models::baseline_summarize(m, x, seg, cfg.train_options.budget_fraction);
        };
        break;
      }
    }

    double total = 0.0;
    for (const PreparedVideo& p : test_videos) {
      const models::Summary s = summarize(p.features, p.seg);
      models::validate_budget(s);
      const double f =
          eval_multi_user(s.keyshots, p.refs, p.features.rows, cfg.train_options.agg).f_score;
      result.per_video_f.emplace_back(p.key.dataset + "/" + p.key.id, f);
      total += f;
    }
    result.test_f = total / static_cast<double>(test_videos.size());
    report.runs.push_back(std::move(result));
  }

  double mean = 0.0;
  for (const RunResult& r : report.runs) mean += r.test_f;
  mean /= static_cast<double>(report.runs.size());
  double var = 0.0;
  for (const RunResult& r : report.runs) var += (r.test_f - mean) * (r.test_f - mean);
  report.mean_f = mean;
  report.std_f = report.runs.size() > 1
                     ? std::sqrt(var / static_cast<double>(report.runs.size() - 1))
                     : 0.0;
  return report;
}

}  // namespace vsum::eval
