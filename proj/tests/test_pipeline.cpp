#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "vsum/cli.hpp"
#include "vsum/data.hpp"
#include "vsum/experiment.hpp"
#include "vsum/io_util.hpp"

using namespace vsum;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"vsum"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    files[fs::relative(entry.path(), dir).string()] = io::read_file(entry.path());
  }
  return files;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("cli convert reproduces the 6-frame worked example") {
  TempDir dir("vsum_convert_test");

  {
    std::ofstream out(dir.path / "keyframes.ann");
    out << "# vsum annotation v1\nformat: keyframes\nframes: 6\ndata: 1 5\n";
  }
  REQUIRE(run_cli({"convert", "--in", (dir.path / "keyframes.ann").string(), "--out",
                   (dir.path / "out1").string(), "--boundaries", "0,2,4", "--budget-frames",
                   "5"}) == 0);
  {
    const auto [shots, frames] = data::load_annotation(dir.path / "out1/keyframes.keyshots.ann");
    CHECK(shots.keyshots == temporal::Keyshots{{0, 1}, {4, 5}});  // [1 1 0 0 1 1]
    const auto [scores, sf] = data::load_annotation(dir.path / "out1/keyframes.scores.ann");
    CHECK(scores.scores == temporal::ImportanceCurve{1, 1, 0, 0, 1, 1});
  }

  {
    std::ofstream out(dir.path / "keyshots.ann");
    out << "# vsum annotation v1\nformat: keyshots\nframes: 6\nshot: 0 1\nshot: 4 5\n";
  }
  REQUIRE(run_cli({"convert", "--in", (dir.path / "keyshots.ann").string(), "--out",
                   (dir.path / "out2").string()}) == 0);
  {
    const auto [kf, frames] = data::load_annotation(dir.path / "out2/keyshots.keyframes.ann");
    CHECK(kf.keyframes == temporal::KeyframeSet{1, 5});  // [0 1 0 0 0 1]
  }

  {
    std::ofstream out(dir.path / "scores.ann");
    out << "# vsum annotation v1\nformat: scores\nframes: 6\n"
        << "data: 0.5 0.9 0.1 0.2 0.7 0.8\n";
  }
  REQUIRE(run_cli({"convert", "--in", (dir.path / "scores.ann").string(), "--out",
                   (dir.path / "out3").string(), "--boundaries", "0,2,4", "--budget-frames",
                   "5"}) == 0);
  {
    const auto [shots, frames] = data::load_annotation(dir.path / "out3/scores.keyshots.ann");
    CHECK(shots.keyshots == temporal::Keyshots{{0, 1}, {4, 5}});
    const auto [kf, kframes] = data::load_annotation(dir.path / "out3/scores.keyframes.ann");
    CHECK(kf.keyframes == temporal::KeyframeSet{1, 5});
  }
}

TEST_CASE("cli rejects unknown verbs and missing required options") {
  CHECK(run_cli({"frobnicate"}) != 0);
  CHECK(run_cli({"train"}) != 0);  // --data is required
}

TEST_CASE("synth is byte-identical across two runs with one seed") {
  TempDir dir("vsum_synth_det");
  const std::vector<std::string> args{
      "synth",    "--out",  (dir.path / "c").string(), "--videos", "3", "--frames-min", "24",
      "--frames-max", "40", "--dim", "4", "--seed", "7"};
  REQUIRE(run_cli(args) == 0);
  const auto first = dir_contents(dir.path / "c");
  REQUIRE(run_cli(args) == 0);
  const auto second = dir_contents(dir.path / "c");
  CHECK(first == second);
  CHECK(first.count("synthetic.json") == 1);
  CHECK(first.count("teacher.vsc") == 1);
  CHECK(first.count("command.json") == 1);
}

TEST_CASE("synth -> train -> summarize -> eval completes end to end") {
  TempDir dir("vsum_e2e");
  REQUIRE(run_cli({"synth", "--out", (dir.path / "corpus").string(), "--videos", "6",
                   "--frames-min", "24", "--frames-max", "40", "--dim", "4", "--seed", "3"}) == 0);
  const std::string manifest = (dir.path / "corpus/synthetic.json").string();

  REQUIRE(run_cli({"train", "--data", manifest, "--model", "vslstm", "--hidden", "6", "--epochs",
                   "4", "--lr", "0.1", "--seed", "1", "--out", (dir.path / "run").string()}) == 0);
  CHECK(fs::exists(dir.path / "run/checkpoint.vsc"));
  CHECK(fs::exists(dir.path / "run/train_report.json"));
  CHECK(fs::exists(dir.path / "run/train_curve.csv"));
  CHECK(fs::exists(dir.path / "run/command.json"));

  REQUIRE(run_cli({"summarize", "--data", manifest, "--checkpoint",
                   (dir.path / "run/checkpoint.vsc").string(), "--out",
                   (dir.path / "summaries").string()}) == 0);
  CHECK(fs::exists(dir.path / "summaries/v000.summary.txt"));

  REQUIRE(run_cli({"eval", "--data", manifest, "--summaries", (dir.path / "summaries").string(),
                   "--out", (dir.path / "eval").string()}) == 0);
  CHECK(fs::exists(dir.path / "eval/report.txt"));
  CHECK(fs::exists(dir.path / "eval/report.jsonl"));

  // every summary respects its recorded budget
  for (const auto& entry : fs::directory_iterator(dir.path / "summaries")) {
    if (entry.path().extension() != ".txt") continue;
    const models::Summary s = data::load_summary(entry.path());
    CHECK(temporal::keyshot_duration(s.keyshots) <= s.budget);
  }
}

TEST_CASE("cli adapt writes a transform that helps") {
  TempDir dir("vsum_adapt_cli");
  REQUIRE(run_cli({"synth", "--out", (dir.path / "a").string(), "--videos", "4", "--frames-min",
                   "30", "--frames-max", "40", "--dim", "4", "--seed", "5"}) == 0);
  REQUIRE(run_cli({"synth", "--out", (dir.path / "b").string(), "--videos", "4", "--frames-min",
                   "30", "--frames-max", "40", "--dim", "4", "--seed", "9"}) == 0);
  REQUIRE(run_cli({"adapt", "--source", (dir.path / "a/synthetic.json").string(), "--target",
                   (dir.path / "b/synthetic.json").string(), "--out",
                   (dir.path / "t").string()}) == 0);
  CHECK(fs::exists(dir.path / "t/transform.vst"));
  const adapt::LinearTransform t = adapt::load_transform(dir.path / "t/transform.vst");
  CHECK(t.matrix.rows == 4);
}

TEST_CASE("experiment harness runs canonical and transfer settings") {
  TempDir dir("vsum_experiment");
  data::SyntheticConfig cfg_a;
  cfg_a.n_videos = 8;
  cfg_a.frames_min = 24;
  cfg_a.frames_max = 36;
  cfg_a.feature_dim = 4;
  cfg_a.seed = 21;
  data::SyntheticCorpus a = data::generate_synthetic(cfg_a);
  for (auto& r : a.videos) r.source_dataset = "alpha";
  data::SyntheticConfig cfg_b = cfg_a;
  cfg_b.seed = 22;
  cfg_b.n_videos = 6;
  data::SyntheticCorpus b = data::generate_synthetic(cfg_b);
  for (auto& r : b.videos) r.source_dataset = "beta";

  std::vector<data::VideoRecord> records;
  std::map<std::string, std::vector<std::string>> ids;
  for (auto& r : a.videos) {
    ids["alpha"].push_back(r.id);
    records.push_back(std::move(r));
  }
  for (auto& r : b.videos) {
    ids["beta"].push_back(r.id);
    records.push_back(std::move(r));
  }

  eval::ExperimentConfig cfg;
  cfg.model = eval::ModelKind::VsLstm;
  cfg.hidden = 4;
  cfg.sgd.epochs_max = 3;
  cfg.sgd.learning_rate = 0.1;
  cfg.runs = 2;

  const eval::SplitSpec canonical =
      eval::make_split(ids, "alpha", eval::Setting::Canonical, 0.2, 0.2, 1);
  const eval::ExperimentReport rep = eval::run_experiment(records, canonical, cfg);
  CHECK(rep.runs.size() == 2);
  CHECK(rep.mean_f >= 0.0);
  CHECK(rep.mean_f <= 100.0);
  for (const auto& run : rep.runs)
    CHECK(run.per_video_f.size() == canonical.test.size());

  // transfer with adaptation exercises the transform path
  cfg.adapt_features = true;
  cfg.runs = 1;
  const eval::SplitSpec transfer =
      eval::make_split(ids, "beta", eval::Setting::Transfer, 0.2, 0.2, 2);
  const eval::ExperimentReport rep2 = eval::run_experiment(records, transfer, cfg);
  CHECK(rep2.transforms.size() == 1);  // alpha aligned onto beta
  CHECK(rep2.transforms.front().first == "alpha");
  CHECK(rep2.runs.front().per_video_f.size() == 6);
}

TEST_CASE("multiple keyframe tracks collapse by majority consensus") {
  data::VideoRecord r;
  r.id = "multi";
  r.source_dataset = "toy";
  r.fps_original = 2.0;
  r.features = linalg::Matrix(12, 2);
  for (int t = 0; t < 12; ++t) {
    r.features.at(t, 0) = t < 6 ? 0.0 : 3.0;  // one visual change point
    r.features.at(t, 1) = t < 6 ? 1.0 : -1.0;
  }
  for (const std::vector<int>& votes :
       {std::vector<int>{2, 7}, std::vector<int>{2, 9}, std::vector<int>{2, 7, 11}}) {
    data::AnnotationTrack track;
    track.kind = data::AnnotationTrack::Kind::Keyframes;
    track.keyframes = votes;
    r.annotations.push_back(track);
  }
  // frame 2 appears in 3/3 tracks, frame 7 in 2/3; 9 and 11 miss the majority
  const eval::PreparedVideo p = eval::prepare_video(r, true, 4, 0.5);
  CHECK(p.keyframes == temporal::KeyframeSet{2, 7});
}

TEST_CASE("records without annotations cannot be prepared") {
  data::VideoRecord r;
  r.id = "bare";
  r.source_dataset = "toy";
  r.features = linalg::Matrix(10, 2);
  CHECK_THROWS_AS(eval::prepare_video(r, false, 5, 0.15), ConfigError);
}

TEST_CASE("experiment rejects a split whose test videos were trained on") {
  data::SyntheticConfig cfg_a;
  cfg_a.n_videos = 4;
  cfg_a.frames_min = 24;
  cfg_a.frames_max = 30;
  cfg_a.feature_dim = 3;
  cfg_a.seed = 31;
  data::SyntheticCorpus corpus = data::generate_synthetic(cfg_a);
  std::vector<data::VideoRecord> records = std::move(corpus.videos);

  eval::SplitSpec bad;
  bad.setting = eval::Setting::Canonical;
  bad.target_dataset = "synthetic";
  bad.train = {{"synthetic", "v000"}, {"synthetic", "v001"}};
  bad.val = {{"synthetic", "v002"}};
  bad.test = {{"synthetic", "v000"}};
  eval::ExperimentConfig cfg;
  CHECK_THROWS_AS(eval::run_experiment(records, bad, cfg), ConfigError);
}

}  // TEST_SUITE
