#include "vsum/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "vsum/adapt.hpp"
#include "vsum/data.hpp"
#include "vsum/experiment.hpp"
#include "vsum/io_util.hpp"
#include "vsum/models.hpp"

namespace vsum::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shared flags most verbs understand.
struct CommonOpts {
  std::string out;
  std::uint64_t seed = 0;
  double budget = 0.15;
  double fps = 2.0;  // 0 disables resampling
  int kts_len = 10;
};

fs::path resolve_data_path(const std::string& p) {
  fs::path path(p);
  if (!path.is_absolute() && !fs::exists(path)) {
    if (const char* root = std::getenv("VSUM_DATA_ROOT")) {
      const fs::path alt = fs::path(root) / path;
      if (fs::exists(alt)) return alt;
    }
  }
  return path;
}

fs::path ensure_out_dir(std::string& out, const std::string& verb, std::uint64_t seed) {
  if (out.empty()) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&tt));
    out = "runs/" + verb + "-" + stamp + "-seed" + std::to_string(seed);
  }
  fs::create_directories(out);
  return fs::path(out);
}

void write_command_record(const fs::path& dir, const std::string& verb, const json& options) {
  json j;
  j["verb"] = verb;
  j["options"] = options;
  io::atomic_write_file(dir / "command.json", j.dump(2) + "\n");
}

std::vector<data::VideoRecord> load_records(const std::string& manifest, double fps) {
  std::vector<data::VideoRecord> records = data::load_dataset(resolve_data_path(manifest));
  if (fps > 0) {
    for (data::VideoRecord& r : records)
      if (fps < r.fps_original) r = data::subsample(r, fps);
  }
  return records;
}

json train_report_json(const models::TrainReport& r) {
  json j;
  j["train_loss"] = r.train_loss;
  j["val_f"] = r.val_f;
  j["stage1_epochs"] = r.stage1_epochs;
  j["stopped_epoch"] = r.stopped_epoch;
  j["best_epoch"] = r.best_epoch;
  j["best_val_f"] = r.best_val_f;
  return j;
}

std::string train_curve_csv(const models::TrainReport& r) {
  std::string csv = "epoch,train_loss,val_f\n";
  for (size_t e = 0; e < r.train_loss.size(); ++e)
    csv += std::to_string(e + 1) + "," + std::to_string(r.train_loss[e]) + "," +
           std::to_string(r.val_f[e]) + "\n";
  return csv;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const data::SyntheticConfig& cfg, const std::string& name, std::string out) {
  const fs::path dir = ensure_out_dir(out, "synth", cfg.seed);
  data::SyntheticCorpus corpus = data::generate_synthetic(cfg);
  for (data::VideoRecord& r : corpus.videos) r.source_dataset = name;
  const fs::path manifest = data::save_dataset(dir, name, corpus.videos);
  data::save_checkpoint(dir / "teacher.vsc", corpus.teacher);

  json options;
  options["name"] = name;
  options["videos"] = cfg.n_videos;
  options["frames_min"] = cfg.frames_min;
  options["frames_max"] = cfg.frames_max;
  options["dim"] = cfg.feature_dim;
  options["clusters"] = cfg.n_clusters;
  options["segment_min"] = cfg.segment_min;
  options["segment_max"] = cfg.segment_max;
  options["teacher_hidden"] = cfg.teacher_hidden;
  options["teacher_scale"] = cfg.teacher_init_scale;
  options["noise"] = cfg.noise_sigma;
  options["budget"] = cfg.budget_fraction;
  options["kts_len"] = cfg.kts_target_len;
  options["seed"] = cfg.seed;
  write_command_record(dir, "synth", options);

  std::cout << "wrote " << corpus.videos.size() << " videos to " << manifest.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  CommonOpts common;
  std::string data;
  std::string model = "vslstm";
  int hidden = 16;
  int embed = 0;  // 0: same as hidden
  int window = 5;
  double init_scale = autodiff::kDefaultInitScale;
  double lr = 0.05;
  int epochs = 100;
  int patience = 5;
  double momentum = 0.9;
  double clip = 5.0;
  double val_frac = 0.2;
  std::string agg = "mean";
};

int cmd_train(const TrainOpts& o) {
  const eval::ModelKind kind = eval::model_kind_from_string(o.model);
  const eval::AggMode agg =
      o.agg == "max" ? eval::AggMode::Max : eval::AggMode::Mean;
  std::string out = o.common.out;
  const fs::path dir = ensure_out_dir(out, "train", o.common.seed);

  std::vector<data::VideoRecord> records = load_records(o.data, o.common.fps);
  if (records.size() < 2) throw ConfigError("train: need at least 2 videos");

  // seeded split into train and validation
  std::vector<int> order(records.size());
  for (size_t i = 0; i < records.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 rng(o.common.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_val =
      std::max(1, static_cast<int>(std::round(o.val_frac * static_cast<double>(records.size()))));
  if (n_val >= static_cast<int>(records.size()))
    throw ConfigError("train: validation fraction leaves no training videos");

  const bool needs_keyframes =
      kind == eval::ModelKind::DppLstm || kind == eval::ModelKind::DppLstmSingle;
  std::vector<eval::PreparedVideo> prepared;
  prepared.reserve(records.size());
  for (const data::VideoRecord& r : records)
    prepared.push_back(eval::prepare_video(r, needs_keyframes, o.common.kts_len, o.common.budget));

  std::vector<models::TrainVideo> train;
  std::vector<models::ValVideo> val;
  for (size_t i = 0; i < order.size(); ++i) {
    const eval::PreparedVideo& p = prepared[order[i]];
    if (static_cast<int>(i) < n_val)
      val.push_back({&p.features, &p.seg, p.refs});
    else
      train.push_back({&p.features, &p.seg, p.curve, p.keyframes});
  }

  autodiff::SgdConfig sgd;
  sgd.learning_rate = o.lr;
  sgd.epochs_max = o.epochs;
  sgd.patience_k = o.patience;
  sgd.momentum = o.momentum;
  sgd.grad_clip = o.clip;
  sgd.seed = o.common.seed;
  models::TrainOptions topts;
  topts.budget_fraction = o.common.budget;
  topts.agg = agg;

  const int dim = records.front().features.cols;
  const int embed = o.embed > 0 ? o.embed : o.hidden;
  std::mt19937_64 init_rng(o.common.seed ^ 0x5deece66dULL);

  models::TrainReport report;
  models::ModelCheckpoint best;
  switch (kind) {
    case eval::ModelKind::VsLstm: {
      models::VsLstmModel m = models::make_vslstm(dim, o.hidden, init_rng, o.init_scale);
      report = models::vslstm_train(m, train, val, sgd, topts);
      break;
    }
    case eval::ModelKind::DppLstm: {
      models::DppLstmModel m = models::make_dpplstm(dim, o.hidden, embed, init_rng, o.init_scale);
      report = models::dpplstm_train_stagewise(m, train, val, sgd, topts);
      break;
    }
    case eval::ModelKind::DppLstmSingle: {
      models::DppLstmSingleModel m =
          models::make_dpplstm_single(dim, o.hidden, embed, init_rng, o.init_scale);
      report = models::dpplstm_single_train(m, train, val, sgd, topts);
      break;
    }
    case eval::ModelKind::MlpShot:
    case eval::ModelKind::MlpFrame: {
      models::MlpBaseline m = models::make_mlp_baseline(
          kind == eval::ModelKind::MlpShot ? models::BaselineVariant::Shot
                                           : models::BaselineVariant::Frame,
          dim, o.hidden, o.window, init_rng, o.init_scale);
      report = models::baseline_train(m, train, val, sgd, topts);
      break;
    }
  }
  best = report.best_checkpoint;
  best.meta["model"] = o.model;
  best.meta["seed"] = std::to_string(o.common.seed);

  data::save_checkpoint(dir / "checkpoint.vsc", best);
  io::atomic_write_file(dir / "train_report.json", train_report_json(report).dump(2) + "\n");
  io::atomic_write_file(dir / "train_curve.csv", train_curve_csv(report));

  json options;
  options["data"] = o.data;
  options["model"] = o.model;
  options["hidden"] = o.hidden;
  options["embed"] = embed;
  options["window"] = o.window;
  options["init_scale"] = o.init_scale;
  options["lr"] = o.lr;
  options["epochs"] = o.epochs;
  options["patience"] = o.patience;
  options["momentum"] = o.momentum;
  options["clip"] = o.clip;
  options["val_frac"] = o.val_frac;
  options["agg"] = o.agg;
  options["budget"] = o.common.budget;
  options["fps"] = o.common.fps;
  options["kts_len"] = o.common.kts_len;
  options["seed"] = o.common.seed;
  write_command_record(dir, "train", options);

  std::cout << "trained " << o.model << ": best val F " << report.best_val_f << " at epoch "
            << report.best_epoch << " (" << report.stopped_epoch << " epochs run)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// summarize

struct SummarizeOpts {
  CommonOpts common;
  std::string data;
  std::string checkpoint;
};

models::Summary summarize_with_checkpoint(const models::ModelCheckpoint& ck,
                                          const linalg::FeatureSequence& x,
                                          const temporal::Segmentation& seg, double budget) {
  if (ck.kind == "vslstm")
    return models::vslstm_summarize(models::vslstm_from_checkpoint(ck), x, seg, budget);
  if (ck.kind == "dpplstm")
    return models::dpplstm_summarize(models::dpplstm_from_checkpoint(ck), x, seg, budget);
  if (ck.kind == "dpplstm-single")
    return models::dpplstm_single_summarize(models::dpplstm_single_from_checkpoint(ck), x, seg,
                                            budget);
  if (ck.kind == "mlp-shot" || ck.kind == "mlp-frame")
    return models::baseline_summarize(models::baseline_from_checkpoint(ck), x, seg, budget);
  throw ConfigError("unknown checkpoint kind '" + ck.kind + "'");
}

int cmd_summarize(const SummarizeOpts& o) {
  std::string out = o.common.out;
  const fs::path dir = ensure_out_dir(out, "summarize", o.common.seed);
  const models::ModelCheckpoint ck = data::load_checkpoint(resolve_data_path(o.checkpoint));
  // rebuild the model once; per-video dispatch only reuses it through the
  // checkpoint to keep this path simple
  const std::vector<data::VideoRecord> records = load_records(o.data, o.common.fps);

  for (const data::VideoRecord& r : records) {
    const temporal::Segmentation seg =
        data::canonical_segmentation(r.features, o.common.kts_len, o.common.budget);
    const models::Summary s = summarize_with_checkpoint(ck, r.features, seg, o.common.budget);
    models::validate_budget(s);
    data::save_summary(dir / (r.id + ".summary.txt"), s);
  }

  json options;
  options["data"] = o.data;
  options["checkpoint"] = o.checkpoint;
  options["budget"] = o.common.budget;
  options["fps"] = o.common.fps;
  options["kts_len"] = o.common.kts_len;
  write_command_record(dir, "summarize", options);

  std::cout << "wrote " << records.size() << " summaries to " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  CommonOpts common;
  std::vector<std::string> data;
  std::string summaries;  // summary-comparison mode
  bool experiment = false;
  std::string target;
  std::string setting = "canonical";
  std::string model = "vslstm";
  std::string agg = "mean";
  std::string adapt = "off";
  std::string adapt_anchor = "target";
  double ridge = -1.0;
  int runs = 5;
  int hidden = 16;
  int embed = 0;
  int window = 5;
  double init_scale = autodiff::kDefaultInitScale;
  double lr = 0.05;
  int epochs = 100;
  int patience = 5;
  double momentum = 0.9;
  double clip = 5.0;
  double val_frac = 0.2;
  double test_frac = 0.2;
};

int cmd_eval_summaries(const EvalOpts& o) {
  std::string out = o.common.out;
  const fs::path dir = ensure_out_dir(out, "eval", o.common.seed);
  const eval::AggMode agg = o.agg == "max" ? eval::AggMode::Max : eval::AggMode::Mean;
  const std::vector<data::VideoRecord> records = load_records(o.data.front(), o.common.fps);

  std::string jsonl;
  std::string csv = "video,precision,recall,f\n";
  std::string text = "per-video F against stored references\n";
  double total = 0.0;
  for (const data::VideoRecord& r : records) {
    const eval::PreparedVideo p =
        eval::prepare_video(r, false, o.common.kts_len, o.common.budget);
    const models::Summary s =
        data::load_summary(resolve_data_path(o.summaries) / (r.id + ".summary.txt"));
    if (s.total_frames != r.frames())
      throw ConfigError("summary for " + r.id + " covers a different frame count");
    const eval::EvalReport rep = eval::eval_multi_user(s.keyshots, p.refs, r.frames(), agg);
    total += rep.f_score;
    json line;
    line["type"] = "video";
    line["video"] = r.id;
    line["precision"] = rep.precision;
    line["recall"] = rep.recall;
    line["f"] = rep.f_score;
    jsonl += line.dump() + "\n";
    csv += r.id + "," + std::to_string(rep.precision) + "," + std::to_string(rep.recall) + "," +
           std::to_string(rep.f_score) + "\n";
    text += "  " + r.id + ": F " + std::to_string(rep.f_score) + "\n";
  }
  const double mean_f = total / static_cast<double>(records.size());
  text += "mean F: " + std::to_string(mean_f) + "\n";
  json line;
  line["type"] = "aggregate";
  line["mean_f"] = mean_f;
  jsonl += line.dump() + "\n";

  io::atomic_write_file(dir / "report.txt", text);
  io::atomic_write_file(dir / "report.jsonl", jsonl);
  io::atomic_write_file(dir / "per_video.csv", csv);

  json options;
  options["data"] = o.data.front();
  options["summaries"] = o.summaries;
  options["agg"] = o.agg;
  options["budget"] = o.common.budget;
  options["fps"] = o.common.fps;
  options["kts_len"] = o.common.kts_len;
  write_command_record(dir, "eval", options);

  std::cout << "mean F " << mean_f << " over " << records.size() << " videos\n";
  return 0;
}

int cmd_eval(const EvalOpts& o) {
  if (!o.experiment) {
    if (o.summaries.empty() || o.data.empty())
      throw ConfigError("eval: pass --experiment, or --summaries with --data");
    return cmd_eval_summaries(o);
  }
  if (o.data.empty()) throw ConfigError("eval: --data manifests required");
  std::string out = o.common.out;
  const fs::path dir = ensure_out_dir(out, "eval", o.common.seed);

  std::vector<data::VideoRecord> records;
  std::map<std::string, std::vector<std::string>> dataset_videos;
  for (const std::string& manifest : o.data) {
    std::vector<data::VideoRecord> part = load_records(manifest, o.common.fps);
    for (data::VideoRecord& r : part) {
      dataset_videos[r.source_dataset].push_back(r.id);
      records.push_back(std::move(r));
    }
  }
  const std::string target = o.target.empty() ? records.front().source_dataset : o.target;

  eval::ExperimentConfig cfg;
  cfg.model = eval::model_kind_from_string(o.model);
  cfg.sgd.learning_rate = o.lr;
  cfg.sgd.epochs_max = o.epochs;
  cfg.sgd.patience_k = o.patience;
  cfg.sgd.momentum = o.momentum;
  cfg.sgd.grad_clip = o.clip;
  cfg.sgd.seed = o.common.seed;
  cfg.train_options.budget_fraction = o.common.budget;
  cfg.train_options.agg = o.agg == "max" ? eval::AggMode::Max : eval::AggMode::Mean;
  cfg.hidden = o.hidden;
  cfg.embed_dim = o.embed > 0 ? o.embed : o.hidden;
  cfg.window_k = o.window;
  cfg.init_scale = o.init_scale;
  cfg.kts_target_len = o.common.kts_len;
  cfg.runs = o.runs;
  cfg.adapt_features = o.adapt == "on";
  cfg.adapt_pooled_anchor = o.adapt_anchor == "pooled";
  cfg.adapt_ridge = o.ridge;

  const eval::SplitSpec split =
      eval::make_split(dataset_videos, target, eval::setting_from_string(o.setting), o.test_frac,
                       o.val_frac, o.common.seed);
  const eval::ExperimentReport report = eval::run_experiment(records, split, cfg);

  // plain-text report
  std::string text;
  text += "model: " + o.model + "\nsetting: " + o.setting + "\ntarget: " + target + "\n";
  text += "runs: " + std::to_string(cfg.runs) + "\n";
  text += "mean F: " + std::to_string(report.mean_f) + "\n";
  text += "std F: " + std::to_string(report.std_f) + "\n";
  for (size_t i = 0; i < report.runs.size(); ++i)
    text += "  run " + std::to_string(i) + ": test F " +
            std::to_string(report.runs[i].test_f) + "\n";
  io::atomic_write_file(dir / "report.txt", text);

  // line-delimited records
  std::string jsonl;
  for (size_t i = 0; i < report.runs.size(); ++i) {
    const eval::RunResult& run = report.runs[i];
    json line;
    line["type"] = "run";
    line["run"] = i;
    line["test_f"] = run.test_f;
    line["best_epoch"] = run.train_report.best_epoch;
    line["best_val_f"] = run.train_report.best_val_f;
    line["stopped_epoch"] = run.train_report.stopped_epoch;
    jsonl += line.dump() + "\n";
    for (const auto& [video, f] : run.per_video_f) {
      json v;
      v["type"] = "video";
      v["run"] = i;
      v["video"] = video;
      v["f"] = f;
      jsonl += v.dump() + "\n";
    }
  }
  {
    json agg;
    agg["type"] = "aggregate";
    agg["mean_f"] = report.mean_f;
    agg["std_f"] = report.std_f;
    jsonl += agg.dump() + "\n";
  }
  io::atomic_write_file(dir / "report.jsonl", jsonl);

  // plot-ready per-epoch validation F
  std::string csv = "run,epoch,val_f\n";
  for (size_t i = 0; i < report.runs.size(); ++i) {
    const std::vector<double>& vf = report.runs[i].train_report.val_f;
    for (size_t e = 0; e < vf.size(); ++e)
      csv += std::to_string(i) + "," + std::to_string(e + 1) + "," + std::to_string(vf[e]) + "\n";
  }
  io::atomic_write_file(dir / "val_f.csv", csv);

  for (const auto& [name, transform] : report.transforms)
    adapt::save_transform(dir / ("transform_" + name + ".vst"), transform);

  json options;
  options["data"] = o.data;
  options["target"] = target;
  options["setting"] = o.setting;
  options["model"] = o.model;
  options["agg"] = o.agg;
  options["adapt"] = o.adapt;
  options["adapt_anchor"] = o.adapt_anchor;
  options["ridge"] = o.ridge;
  options["runs"] = o.runs;
  options["hidden"] = o.hidden;
  options["embed"] = cfg.embed_dim;
  options["window"] = o.window;
  options["init_scale"] = o.init_scale;
  options["lr"] = o.lr;
  options["epochs"] = o.epochs;
  options["patience"] = o.patience;
  options["momentum"] = o.momentum;
  options["clip"] = o.clip;
  options["val_frac"] = o.val_frac;
  options["test_frac"] = o.test_frac;
  options["budget"] = o.common.budget;
  options["fps"] = o.common.fps;
  options["kts_len"] = o.common.kts_len;
  options["seed"] = o.common.seed;
  write_command_record(dir, "eval", options);

  std::cout << "mean F " << report.mean_f << " +- " << report.std_f << " over " << cfg.runs
            << " runs\n";
  return 0;
}

// ---------------------------------------------------------------------------
// convert

struct ConvertOpts {
  CommonOpts common;
  std::string in;
  std::string features;
  std::string boundaries;  // comma-separated interval starts
  int budget_frames = -1;  // -1: floor(budget * T)
  int max_segments = 0;    // 0: 3T / kts_len
};

int cmd_convert(const ConvertOpts& o) {
  std::string out = o.common.out;
  const fs::path dir = ensure_out_dir(out, "convert", o.common.seed);
  auto [track, frames] = data::load_annotation(resolve_data_path(o.in));

  const auto segmentation = [&]() -> temporal::Segmentation {
    if (!o.boundaries.empty()) {
      temporal::Segmentation seg;
      seg.total = frames;
      std::string tok;
      std::istringstream in(o.boundaries);
      while (std::getline(in, tok, ',')) seg.starts.push_back(std::stoi(tok));
      temporal::validate(seg);
      return seg;
    }
    if (!o.features.empty()) {
      auto [x, fps] = data::load_features(resolve_data_path(o.features));
      if (x.rows != frames)
        throw ConfigError("convert: feature frames do not match the annotation");
      const int max_segments =
          o.max_segments > 0 ? o.max_segments : std::max(4, 3 * frames / o.common.kts_len);
      return temporal::kts_segment(x, o.common.kts_len, max_segments);
    }
    throw ConfigError("convert: need --boundaries or --features for this conversion");
  };

  const int budget = o.budget_frames >= 0 ? o.budget_frames
                                          : temporal::budget_frames(frames, o.common.budget);
  const fs::path stem = fs::path(o.in).stem();

  const auto write_track = [&](const std::string& tag, const data::AnnotationTrack& t) {
    data::save_annotation(dir / (stem.string() + "." + tag + ".ann"), t, frames);
  };

  switch (track.kind) {
    case data::AnnotationTrack::Kind::Keyframes: {
      const temporal::Segmentation seg = segmentation();
      auto [shots, curve] = temporal::keyframes_to(track.keyframes, seg, budget);
      data::AnnotationTrack shots_track;
      shots_track.kind = data::AnnotationTrack::Kind::Keyshots;
      shots_track.keyshots = shots;
      data::AnnotationTrack scores_track;
      scores_track.kind = data::AnnotationTrack::Kind::Scores;
      scores_track.scores = curve;
      write_track("keyshots", shots_track);
      write_track("scores", scores_track);
      break;
    }
    case data::AnnotationTrack::Kind::Keyshots: {
      auto [keyframes, curve] = temporal::keyshots_to(track.keyshots, frames);
      data::AnnotationTrack kf_track;
      kf_track.kind = data::AnnotationTrack::Kind::Keyframes;
      kf_track.keyframes = keyframes;
      data::AnnotationTrack scores_track;
      scores_track.kind = data::AnnotationTrack::Kind::Scores;
      scores_track.scores = curve;
      write_track("keyframes", kf_track);
      write_track("scores", scores_track);
      break;
    }
    case data::AnnotationTrack::Kind::Scores: {
      const temporal::Segmentation seg = segmentation();
      auto [shots, keyframes] = temporal::scores_to(track.scores, seg, budget);
      data::AnnotationTrack shots_track;
      shots_track.kind = data::AnnotationTrack::Kind::Keyshots;
      shots_track.keyshots = shots;
      data::AnnotationTrack kf_track;
      kf_track.kind = data::AnnotationTrack::Kind::Keyframes;
      kf_track.keyframes = keyframes;
      write_track("keyshots", shots_track);
      write_track("keyframes", kf_track);
      break;
    }
  }

  json options;
  options["in"] = o.in;
  options["features"] = o.features;
  options["boundaries"] = o.boundaries;
  options["budget_frames"] = budget;
  options["kts_len"] = o.common.kts_len;
  write_command_record(dir, "convert", options);

  std::cout << "converted " << o.in << " into " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// adapt

struct AdaptOpts {
  CommonOpts common;
  std::string source;
  std::string target;
  double ridge = -1.0;  // <0: auto
};

int cmd_adapt(const AdaptOpts& o) {
  std::string out = o.common.out;
  const fs::path dir = ensure_out_dir(out, "adapt", o.common.seed);

  const auto stack = [&](const std::string& manifest, std::string& name) {
    const std::vector<data::VideoRecord> records = load_records(manifest, o.common.fps);
    if (records.empty()) throw ConfigError("adapt: empty dataset " + manifest);
    name = records.front().source_dataset;
    int total = 0;
    for (const data::VideoRecord& r : records) total += r.frames();
    linalg::Matrix all(total, records.front().features.cols);
    int row = 0;
    for (const data::VideoRecord& r : records)
      for (int t = 0; t < r.frames(); ++t, ++row) {
        const auto src = r.features.row(t);
        std::copy(src.begin(), src.end(), all.row(row).begin());
      }
    return all;
  };

  std::string source_name, target_name;
  const linalg::Matrix source = stack(o.source, source_name);
  const linalg::Matrix target = stack(o.target, target_name);
  const double ridge =
      o.ridge >= 0 ? o.ridge : adapt::auto_ridge(linalg::covariance(target));
  const adapt::LinearTransform transform =
      adapt::fit_align(source, target, ridge, source_name + "->" + target_name);
  adapt::save_transform(dir / "transform.vst", transform);

  const linalg::Matrix cov_t = linalg::covariance(target);
  const double before = linalg::frobenius_distance(linalg::covariance(source), cov_t);
  const double after =
      linalg::frobenius_distance(linalg::covariance(adapt::apply_transform(transform, source)),
                                 cov_t);
  std::string text = "source: " + source_name + "\ntarget: " + target_name + "\n";
  text += "ridge: " + std::to_string(ridge) + "\n";
  text += "cov distance before: " + std::to_string(before) + "\n";
  text += "cov distance after: " + std::to_string(after) + "\n";
  io::atomic_write_file(dir / "report.txt", text);

  json options;
  options["source"] = o.source;
  options["target"] = o.target;
  options["ridge"] = ridge;
  options["fps"] = o.common.fps;
  write_command_record(dir, "adapt", options);

  std::cout << "cov distance " << before << " -> " << after << "\n";
  return 0;
}

void add_common(CLI::App* cmd, CommonOpts& c, bool with_budget = true) {
  cmd->add_option("--out", c.out, "output directory (default: runs/<verb>-<stamp>-seed<seed>)");
  cmd->add_option("--seed", c.seed, "random seed");
  if (with_budget) cmd->add_option("--budget", c.budget, "summary budget fraction");
  cmd->add_option("--fps", c.fps, "resample inputs to this rate (0 disables)");
  cmd->add_option("--kts-len", c.kts_len, "target mean segment length in frames");
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"sequence summarization engine"};
  app.require_subcommand(1);

  data::SyntheticConfig synth_cfg;
  std::string synth_out;
  std::string synth_name = "synthetic";
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic teacher-student corpus");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--name", synth_name, "dataset name (manifest file name)");
  synth->add_option("--videos", synth_cfg.n_videos, "number of videos");
  synth->add_option("--frames-min", synth_cfg.frames_min, "shortest video");
  synth->add_option("--frames-max", synth_cfg.frames_max, "longest video");
  synth->add_option("--dim", synth_cfg.feature_dim, "feature dimension");
  synth->add_option("--clusters", synth_cfg.n_clusters, "feature clusters");
  synth->add_option("--segment-min", synth_cfg.segment_min, "shortest generated segment");
  synth->add_option("--segment-max", synth_cfg.segment_max, "longest generated segment");
  synth->add_option("--teacher-hidden", synth_cfg.teacher_hidden, "teacher LSTM width");
  synth->add_option("--teacher-scale", synth_cfg.teacher_init_scale, "teacher init scale");
  synth->add_option("--noise", synth_cfg.noise_sigma, "feature noise sigma");
  synth->add_option("--budget", synth_cfg.budget_fraction, "summary budget fraction");
  synth->add_option("--kts-len", synth_cfg.kts_target_len, "target mean segment length");
  synth->add_option("--seed", synth_cfg.seed, "random seed");

  TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "fit a model on a dataset");
  train->add_option("--data", train_opts.data, "dataset manifest")->required();
  train->add_option("--model", train_opts.model,
                    "vslstm|dpplstm|dpplstm-single|mlp-shot|mlp-frame");
  train->add_option("--hidden", train_opts.hidden, "hidden size");
  train->add_option("--embed", train_opts.embed, "phi dimension (0: hidden)");
  train->add_option("--window", train_opts.window, "mlp-frame window (odd)");
  train->add_option("--init-scale", train_opts.init_scale, "weight init scale");
  train->add_option("--lr", train_opts.lr, "learning rate");
  train->add_option("--epochs", train_opts.epochs, "max epochs");
  train->add_option("--patience", train_opts.patience, "early-stopping patience");
  train->add_option("--momentum", train_opts.momentum, "SGD momentum");
  train->add_option("--clip", train_opts.clip, "gradient clip (global L2)");
  train->add_option("--val-frac", train_opts.val_frac, "validation fraction");
  train->add_option("--agg", train_opts.agg, "mean|max multi-reference aggregation");
  add_common(train, train_opts.common);

  SummarizeOpts sum_opts;
  CLI::App* summarize = app.add_subcommand("summarize", "write summaries from a checkpoint");
  summarize->add_option("--data", sum_opts.data, "dataset manifest")->required();
  summarize->add_option("--checkpoint", sum_opts.checkpoint, "model checkpoint")->required();
  add_common(summarize, sum_opts.common);

  EvalOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate summaries or run an experiment");
  eval_cmd->add_option("--data", eval_opts.data, "dataset manifest(s)");
  eval_cmd->add_option("--summaries", eval_opts.summaries, "summary directory to score");
  eval_cmd->add_flag("--experiment", eval_opts.experiment, "train/test experiment harness");
  eval_cmd->add_option("--target", eval_opts.target, "target dataset name");
  eval_cmd->add_option("--setting", eval_opts.setting, "canonical|augmented|transfer");
  eval_cmd->add_option("--model", eval_opts.model,
                       "vslstm|dpplstm|dpplstm-single|mlp-shot|mlp-frame");
  eval_cmd->add_option("--agg", eval_opts.agg, "mean|max");
  eval_cmd->add_option("--adapt", eval_opts.adapt, "on|off feature adaptation");
  eval_cmd->add_option("--adapt-anchor", eval_opts.adapt_anchor, "target|pooled");
  eval_cmd->add_option("--ridge", eval_opts.ridge, "adaptation ridge (<0: auto)");
  eval_cmd->add_option("--runs", eval_opts.runs, "repeated seeded runs");
  eval_cmd->add_option("--hidden", eval_opts.hidden, "hidden size");
  eval_cmd->add_option("--embed", eval_opts.embed, "phi dimension (0: hidden)");
  eval_cmd->add_option("--window", eval_opts.window, "mlp-frame window");
  eval_cmd->add_option("--init-scale", eval_opts.init_scale, "weight init scale");
  eval_cmd->add_option("--lr", eval_opts.lr, "learning rate");
  eval_cmd->add_option("--epochs", eval_opts.epochs, "max epochs");
  eval_cmd->add_option("--patience", eval_opts.patience, "early-stopping patience");
  eval_cmd->add_option("--momentum", eval_opts.momentum, "SGD momentum");
  eval_cmd->add_option("--clip", eval_opts.clip, "gradient clip");
  eval_cmd->add_option("--val-frac", eval_opts.val_frac, "validation fraction");
  eval_cmd->add_option("--test-frac", eval_opts.test_frac, "test fraction");
  add_common(eval_cmd, eval_opts.common);

  ConvertOpts conv_opts;
  CLI::App* convert = app.add_subcommand("convert", "convert between annotation formats");
  convert->add_option("--in", conv_opts.in, "annotation file")->required();
  convert->add_option("--features", conv_opts.features, "feature file for KTS segmentation");
  convert->add_option("--boundaries", conv_opts.boundaries, "explicit interval starts, e.g. 0,2,4");
  convert->add_option("--budget-frames", conv_opts.budget_frames,
                      "frame budget (default: floor(budget * T))");
  convert->add_option("--max-segments", conv_opts.max_segments, "KTS segment cap");
  add_common(convert, conv_opts.common);

  AdaptOpts adapt_opts;
  CLI::App* adapt_cmd = app.add_subcommand("adapt", "fit a covariance-alignment transform");
  adapt_cmd->add_option("--source", adapt_opts.source, "source dataset manifest")->required();
  adapt_cmd->add_option("--target", adapt_opts.target, "target dataset manifest")->required();
  adapt_cmd->add_option("--ridge", adapt_opts.ridge, "ridge (<0: auto)");
  add_common(adapt_cmd, adapt_opts.common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) return cmd_synth(synth_cfg, synth_name, synth_out);
    if (*train) return cmd_train(train_opts);
    if (*summarize) return cmd_summarize(sum_opts);
    if (*eval_cmd) return cmd_eval(eval_opts);
    if (*convert) return cmd_convert(conv_opts);
    if (*adapt_cmd) return cmd_adapt(adapt_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace vsum::cli
