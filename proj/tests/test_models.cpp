#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vsum/models.hpp"

using namespace vsum;
using namespace vsum::models;
using autodiff::GradientBundle;
using autodiff::ParamPack;
using autodiff::SgdConfig;
using linalg::Matrix;

namespace {

Matrix random_features(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  return oracles::random_matrix(rows, cols, rng, scale);
}

void zero_all(ParamPack pack) {
  const std::vector<double> zeros(pack.scalar_count(), 0.0);
  pack.assign(zeros);
}

temporal::Segmentation even_segmentation(int total, int seg_len) {
  temporal::Segmentation seg;
  seg.total = total;
  for (int t = 0; t < total; t += seg_len) seg.starts.push_back(t);
  return seg;
}

// scan-based verification of the early-stopping contract
void check_early_stop(const TrainReport& r, int patience_k, int epochs_max) {
  REQUIRE(!r.val_f.empty());
  CHECK(r.stopped_epoch == static_cast<int>(r.val_f.size()));
  CHECK(r.stopped_epoch <= epochs_max);

  int streak = 0;
  int stop_at = 0;
  for (size_t e = 1; e < r.val_f.size(); ++e) {
    streak = r.val_f[e] < r.val_f[e - 1] ? streak + 1 : 0;
    if (streak >= patience_k) {
      stop_at = static_cast<int>(e) + 1;
      break;
    }
  }
  if (stop_at > 0)
    CHECK(r.stopped_epoch == stop_at);
  else
    CHECK(r.stopped_epoch == epochs_max);

  // earliest argmax wins
  int best = 0;
  for (size_t e = 1; e < r.val_f.size(); ++e)
    if (r.val_f[e] > r.val_f[best]) best = static_cast<int>(e);
  CHECK(r.best_epoch == best + 1);
  CHECK(r.best_val_f == doctest::Approx(r.val_f[best]));
}

// teacher-labeled toy corpus shared by the training tests
struct ToyCorpus {
  std::vector<Matrix> features;
  std::vector<temporal::Segmentation> segs;
  std::vector<temporal::ImportanceCurve> curves;
  std::vector<temporal::KeyframeSet> keyframes;
  std::vector<std::vector<temporal::Keyshots>> refs;
  std::vector<TrainVideo> train;
  std::vector<ValVideo> val;
};

ToyCorpus make_toy_corpus(int n_videos, int frames, int dim, std::uint64_t seed,
                          int val_count = 1) {
  std::mt19937_64 rng(seed);
  VsLstmModel teacher = make_vslstm(dim, 8, rng, 0.5);

  ToyCorpus corpus;
  for (int v = 0; v < n_videos; ++v) {
    Matrix x(frames, dim);
    // piecewise-constant blocks plus mild noise keep the labels learnable
    std::uniform_real_distribution<double> level(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    int t = 0;
    while (t < frames) {
      const int len = std::min<int>(4 + static_cast<int>(rng() % 6), frames - t);
      std::vector<double> base(dim);
      for (double& b : base) b = level(rng);
      for (int s = 0; s < len; ++s, ++t)
        for (int c = 0; c < dim; ++c) x.at(t, c) = base[c] + noise(rng);
    }
    temporal::ImportanceCurve curve = vslstm_predict(teacher, x);
    double lo = curve[0], hi = curve[0];
    for (double s : curve) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    for (double& s : curve) s = hi - lo < 1e-12 ? 0.5 : (s - lo) / (hi - lo);

    corpus.features.push_back(std::move(x));
    corpus.segs.push_back(even_segmentation(frames, 4));
    corpus.curves.push_back(std::move(curve));
  }
  for (int v = 0; v < n_videos; ++v) {
    const int budget = temporal::budget_frames(frames, 0.15);
    auto [shots, kfs] = temporal::scores_to(corpus.curves[v], corpus.segs[v], budget);
    corpus.keyframes.push_back(kfs);
    corpus.refs.push_back({shots});
  }
  for (int v = 0; v < n_videos; ++v) {
    if (v < val_count)
      corpus.val.push_back({&corpus.features[v], &corpus.segs[v], corpus.refs[v]});
    else
      corpus.train.push_back(
          {&corpus.features[v], &corpus.segs[v], corpus.curves[v], corpus.keyframes[v]});
  }
  return corpus;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("zero-weight vsLSTM scores 0.5 everywhere and is repeatable") {
  std::mt19937_64 rng(71);
  VsLstmModel m = make_vslstm(4, 3, rng);
  zero_all(parameters(m));
  const Matrix x = random_features(9, 4, rng);
  const temporal::ImportanceCurve scores = vslstm_predict(m, x);
  for (double s : scores) CHECK(s == doctest::Approx(0.5));
  CHECK(vslstm_predict(m, x) == scores);
}

TEST_CASE("vsLSTM scores stay inside (0,1)") {
  std::mt19937_64 rng(72);
  const VsLstmModel m = make_vslstm(3, 5, rng, 1.0);
  const Matrix x = random_features(20, 3, rng, 3.0);
  for (double s : vslstm_predict(m, x)) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("checkpoint round trip reproduces scores bit-exactly") {
  std::mt19937_64 rng(73);
  VsLstmModel m = make_vslstm(5, 6, rng);
  const Matrix x = random_features(12, 5, rng);
  const temporal::ImportanceCurve before = vslstm_predict(m, x);
  const VsLstmModel restored = vslstm_from_checkpoint(to_checkpoint(m));
  CHECK(vslstm_predict(restored, x) == before);

  DppLstmModel d = make_dpplstm(5, 4, 3, rng);
  const dpp::DppKernel k1 = dpplstm_build_kernel(d, x);
  DppLstmModel d2 = dpplstm_from_checkpoint(to_checkpoint(d));
  CHECK(dpplstm_build_kernel(d2, x).l == k1.l);

  MlpBaseline b = make_mlp_baseline(BaselineVariant::Frame, 5, 4, 5, rng);
  MlpBaseline b2 = baseline_from_checkpoint(to_checkpoint(b));
  const temporal::Segmentation seg = even_segmentation(12, 4);
  CHECK(baseline_predict(b2, x, seg) == baseline_predict(b, x, seg));

  CHECK_THROWS_AS(dpplstm_from_checkpoint(to_checkpoint(m)), ConfigError);
}

TEST_CASE("vsLSTM square-loss gradient matches finite differences") {
  std::mt19937_64 rng(74);
  for (int trial = 0; trial < 3; ++trial) {
    const int T = 4 + trial;
    const int dim = 3;
    VsLstmModel m = make_vslstm(dim, 4, rng);
    const Matrix x = random_features(T, dim, rng);
    temporal::ImportanceCurve targets(T);
    for (double& t : targets) t = std::uniform_real_distribution<double>(0, 1)(rng);

    GradientBundle grads;
    vslstm_loss_and_grad(m, x, targets, &grads);
    ParamPack pack = parameters(m);
    const auto report = autodiff::check_gradients(
        [&] { return vslstm_loss_and_grad(m, x, targets, nullptr); }, pack, grads.partials);
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-4);
  }
}

TEST_CASE("dppLSTM NLL gradient matches finite differences (T=6, hidden=4, embed=3)") {
  std::mt19937_64 rng(75);
  DppLstmModel m = make_dpplstm(3, 4, 3, rng, 0.5);
  const Matrix x = random_features(6, 3, rng);
  const temporal::KeyframeSet z{1, 4};

  GradientBundle grads;
  dpplstm_nll_and_grad(m, x, z, &grads);
  ParamPack pack = parameters(m);
  const auto report = autodiff::check_gradients(
      [&] { return dpplstm_nll_and_grad(m, x, z, nullptr); }, pack, grads.partials);
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("dppLSTM-single NLL gradient matches finite differences") {
  std::mt19937_64 rng(76);
  DppLstmSingleModel m = make_dpplstm_single(3, 4, 3, rng, 0.5);
  const Matrix x = random_features(5, 3, rng);
  const temporal::KeyframeSet z{0, 3};

  GradientBundle grads;
  dpplstm_single_nll_and_grad(m, x, z, &grads);
  ParamPack pack = parameters(m);
  const auto report = autodiff::check_gradients(
      [&] { return dpplstm_single_nll_and_grad(m, x, z, nullptr); }, pack, grads.partials);
  CHECK(report.pass);
}

TEST_CASE("dppLSTM kernel matches the element-wise QD oracle") {
  std::mt19937_64 rng(77);
  DppLstmModel m = make_dpplstm(4, 5, 3, rng);
  const int T = 7;
  const Matrix x = random_features(T, 4, rng);
  const dpp::DppKernel kernel = dpplstm_build_kernel(m, x);

  // recompute y_t and phi_t through the plain forward path
  const auto [h_fwd, h_bwd] = autodiff::bilstm_forward(m.bilstm, x);
  std::vector<double> y(T);
  Matrix phi(T, 3);
  for (int t = 0; t < T; ++t) {
    std::vector<double> in;
    for (int k = 0; k < 5; ++k) in.push_back(h_fwd.at(t, k));
    for (int k = 0; k < 5; ++k) in.push_back(h_bwd.at(t, k));
    for (int c = 0; c < 4; ++c) in.push_back(x.at(t, c));
    y[t] = autodiff::mlp_forward(m.f_i, in)[0];
    const std::vector<double> p = autodiff::mlp_forward(m.f_s, in);
    std::copy(p.begin(), p.end(), phi.row(t).begin());
  }
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t) {
      double dot = 0.0;
      for (int e = 0; e < 3; ++e) dot += phi.at(s, e) * phi.at(t, e);
      CHECK(std::abs(kernel.l.at(s, t) - y[s] * y[t] * dot) < 1e-12);
    }

  // PSD by construction
  const auto [eigenvalues, vectors] = linalg::sym_eig(kernel.l);
  CHECK(eigenvalues.back() >= -1e-9);
}

TEST_CASE("kernel PSD property holds for larger random models") {
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 5; ++trial) {
    DppLstmModel m = make_dpplstm(3, 4, 4, rng, 0.5);
    const Matrix x = random_features(32, 3, rng, 2.0);
    const dpp::DppKernel kernel = dpplstm_build_kernel(m, x);
    const auto [eigenvalues, vectors] = linalg::sym_eig(kernel.l);
    CHECK(eigenvalues.back() >= -1e-9);
  }
}

TEST_CASE("identical (y, phi) pairs make the QD kernel minor singular") {
  // frames 0 and 2 share quality and embedding; the subset containing both
  // must get probability zero
  const std::vector<double> y{0.8, 0.3, 0.8};
  Matrix phi(3, 2, {0.5, -0.2, 0.1, 0.9, 0.5, -0.2});
  dpp::DppKernel kernel;
  kernel.l = Matrix(3, 3);
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 3; ++t) {
      double dot = 0.0;
      for (int e = 0; e < 2; ++e) dot += phi.at(s, e) * phi.at(t, e);
      kernel.l.at(s, t) = y[s] * y[t] * dot;
    }
  CHECK(dpp::dpp_log_prob(kernel, {0, 2}) == dpp::kLogZeroFloor);
  CHECK(dpp::dpp_log_prob(kernel, {0, 1}) > dpp::kLogZeroFloor);
}

TEST_CASE("dpplstm_single kernel equals Phi Phi^T") {
  std::mt19937_64 rng(80);
  DppLstmSingleModel m = make_dpplstm_single(3, 4, 3, rng);
  const int T = 6;
  const Matrix x = random_features(T, 3, rng);
  const dpp::DppKernel kernel = dpplstm_single_build_kernel(m, x);

  const auto [h_fwd, h_bwd] = autodiff::bilstm_forward(m.bilstm, x);
  Matrix phi(T, 3);
  for (int t = 0; t < T; ++t) {
    std::vector<double> in;
    for (int k = 0; k < 4; ++k) in.push_back(h_fwd.at(t, k));
    for (int k = 0; k < 4; ++k) in.push_back(h_bwd.at(t, k));
    for (int c = 0; c < 3; ++c) in.push_back(x.at(t, c));
    const std::vector<double> p = autodiff::mlp_forward(m.f_s, in);
    std::copy(p.begin(), p.end(), phi.row(t).begin());
  }
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t) {
      double dot = 0.0;
      for (int e = 0; e < 3; ++e) dot += phi.at(s, e) * phi.at(t, e);
      CHECK(std::abs(kernel.l.at(s, t) - dot) < 1e-12);
    }
}

TEST_CASE("stage-2 objective equals the cofactor brute-force log probability") {
  std::mt19937_64 rng(95);
  models::DppLstmModel m = make_dpplstm(3, 4, 6, rng, 0.5);
  const Matrix x = random_features(7, 3, rng);
  const temporal::KeyframeSet z{0, 3, 5};

  const double nll = dpplstm_nll_and_grad(m, x, z, nullptr);

  const dpp::DppKernel kernel = dpplstm_build_kernel(m, x);
  Matrix plus_i = kernel.l;
  for (int i = 0; i < 7; ++i) plus_i.at(i, i) += 1.0;
  const double brute =
      std::log(oracles::cofactor_det(dpp::principal_minor(kernel.l, z)) /
               oracles::cofactor_det(plus_i));
  CHECK(std::abs(-nll - brute) / std::abs(brute) < 1e-9);
}

TEST_CASE("baseline MLP gradients match finite differences") {
  std::mt19937_64 rng(96);
  for (const BaselineVariant variant : {BaselineVariant::Shot, BaselineVariant::Frame}) {
    MlpBaseline m = make_mlp_baseline(variant, 3, 4, 5, rng, 0.5);
    const int n_items = 6;
    const int in_dim = variant == BaselineVariant::Shot ? 3 : 15;
    const Matrix inputs = random_features(n_items, in_dim, rng);
    std::vector<double> targets(n_items);
    for (double& t : targets) t = std::uniform_real_distribution<double>(0, 1)(rng);

    autodiff::ParamPack pack = parameters(m);
    const auto loss_of = [&](autodiff::GradientBundle* grads) {
      autodiff::Tape tape;
      models::MlpBaseline* mp = &m;
      autodiff::ParamPack local = parameters(*mp);
      const std::vector<autodiff::Tape::Id> ids = autodiff::bind_parameters(tape, local);
      std::vector<autodiff::BoundDense> net;
      for (size_t l = 0; l < m.net.size(); ++l)
        net.push_back({ids[2 * l], ids[2 * l + 1], m.net[l].activation});
      std::vector<autodiff::Tape::Id> outs;
      for (int i = 0; i < n_items; ++i)
        outs.push_back(autodiff::mlp_nodes(tape, net, tape.constant(inputs.row(i), in_dim)));
      const autodiff::Tape::Id loss = tape.mse(tape.concat(outs), targets);
      if (grads) {
        tape.backward(loss);
        *grads = tape.parameter_gradients();
      }
      return tape.value(loss)[0];
    };

    autodiff::GradientBundle grads;
    loss_of(&grads);
    const auto report = autodiff::check_gradients([&] { return loss_of(nullptr); }, pack,
                                                  grads.partials);
    CHECK(report.pass);
  }
}

TEST_CASE("summaries respect the frame budget") {
  std::mt19937_64 rng(81);
  const int T = 40;
  const temporal::Segmentation seg = even_segmentation(T, 4);
  const Matrix x = random_features(T, 3, rng);
  const int budget = temporal::budget_frames(T, 0.15);

  DppLstmModel dpp_model = make_dpplstm(3, 4, 3, rng, 0.5);
  const Summary s1 = dpplstm_summarize(dpp_model, x, seg, 0.15);
  CHECK(temporal::keyshot_duration(s1.keyshots) <= budget);
  CHECK(s1.budget == budget);

  DppLstmSingleModel single = make_dpplstm_single(3, 4, 3, rng, 0.5);
  const Summary s2 = dpplstm_single_summarize(single, x, seg, 0.15);
  CHECK(temporal::keyshot_duration(s2.keyshots) <= budget);

  VsLstmModel v = make_vslstm(3, 4, rng);
  const Summary s3 = vslstm_summarize(v, x, seg, 0.15);
  CHECK(temporal::keyshot_duration(s3.keyshots) <= budget);

  MlpBaseline shot = make_mlp_baseline(BaselineVariant::Shot, 3, 4, 5, rng);
  const Summary s4 = baseline_summarize(shot, x, seg, 0.15);
  CHECK(temporal::keyshot_duration(s4.keyshots) <= budget);

  CHECK_THROWS_AS(dpplstm_summarize(dpp_model, x, seg, 0.0), ContractError);
  CHECK_THROWS_AS(dpplstm_summarize(dpp_model, x, seg, 1.5), ContractError);
}

TEST_CASE("dpp summaries fill leftover budget with high-score intervals") {
  std::mt19937_64 rng(82);
  // zero-weight model: y constant 0.5, phi constant -> rank-one kernel, MAP
  // picks at most one frame, fill-in must do the rest deterministically
  DppLstmModel m = make_dpplstm(2, 3, 2, rng);
  zero_all(parameters(m));
  const int T = 30;
  const temporal::Segmentation seg = even_segmentation(T, 3);
  Matrix x(T, 2);
  for (double& v : x.data) v = 0.25;

  const Summary s = dpplstm_summarize(m, x, seg, 0.3);
  const Summary again = dpplstm_summarize(m, x, seg, 0.3);
  CHECK(s.keyshots == again.keyshots);
  CHECK(temporal::keyshot_duration(s.keyshots) <= s.budget);
  // ties resolve to the earliest intervals, so the budget is fully used
  CHECK(temporal::keyshot_duration(s.keyshots) == s.budget / 3 * 3);
}

TEST_CASE("greedy MAP on built kernels stays within half of the exhaustive optimum") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 10; ++trial) {
    DppLstmModel m = make_dpplstm(3, 4, 4, rng, 0.8);
    const int T = 8 + static_cast<int>(rng() % 5);
    const Matrix x = random_features(T, 3, rng, 2.0);
    const dpp::DppKernel kernel = dpplstm_build_kernel(m, x);
    const auto greedy = dpp::map_greedy(kernel);
    const auto best = dpp::map_exhaustive(kernel);
    const double det_g =
        greedy.empty() ? 1.0 : linalg::determinant(dpp::principal_minor(kernel.l, greedy));
    const double det_b =
        best.empty() ? 1.0 : linalg::determinant(dpp::principal_minor(kernel.l, best));
    CHECK(det_g >= 0.5 * det_b);
  }
}

TEST_CASE("baseline zero weights score 0.5 and constant features give constant scores") {
  std::mt19937_64 rng(84);
  MlpBaseline frame = make_mlp_baseline(BaselineVariant::Frame, 3, 4, 5, rng);
  zero_all(parameters(frame));
  const temporal::Segmentation seg = even_segmentation(12, 3);
  const Matrix x = random_features(12, 3, rng);
  for (double s : baseline_predict(frame, x, seg)) CHECK(s == doctest::Approx(0.5));

  MlpBaseline shot = make_mlp_baseline(BaselineVariant::Shot, 3, 4, 5, rng);
  Matrix constant(12, 3);
  for (double& v : constant.data) v = 0.8;
  const std::vector<double> scores = baseline_predict(shot, constant, seg);
  CHECK(scores.size() == 4);
  for (double s : scores) CHECK(s == doctest::Approx(scores[0]));
}

TEST_CASE("mlp-frame window concatenation matches a slice-and-pad oracle") {
  std::mt19937_64 rng(85);
  MlpBaseline frame = make_mlp_baseline(BaselineVariant::Frame, 2, 3, 5, rng);
  const int T = 7;
  const Matrix x = random_features(T, 2, rng);
  const temporal::Segmentation seg = even_segmentation(T, 7);
  const std::vector<double> got = baseline_predict(frame, x, seg);

  for (int t = 0; t < T; ++t) {
    std::vector<double> window;
    for (int off = -2; off <= 2; ++off) {
      const int s = std::clamp(t + off, 0, T - 1);  // edge replication
      window.push_back(x.at(s, 0));
      window.push_back(x.at(s, 1));
    }
    CHECK(got[t] == doctest::Approx(autodiff::mlp_forward(frame.net, window)[0]));
  }
}

TEST_CASE("training on constant 0.5 targets starts at exactly zero loss") {
  std::mt19937_64 rng(86);
  VsLstmModel m = make_vslstm(3, 4, rng);
  zero_all(parameters(m));
  Matrix x = random_features(10, 3, rng);
  const temporal::ImportanceCurve targets(10, 0.5);
  CHECK(vslstm_loss_and_grad(m, x, targets, nullptr) == 0.0);
}

TEST_CASE("binary keyframe-indicator targets are accepted unchanged") {
  std::mt19937_64 rng(87);
  VsLstmModel m = make_vslstm(3, 4, rng);
  Matrix x = random_features(10, 3, rng);
  temporal::ImportanceCurve binary(10, 0.0);
  binary[2] = 1.0;
  binary[7] = 1.0;
  CHECK(vslstm_loss_and_grad(m, x, binary, nullptr) >= 0.0);

  temporal::ImportanceCurve bad(10, 0.0);
  bad[0] = 1.5;
  CHECK_THROWS_AS(vslstm_loss_and_grad(m, x, bad, nullptr), ContractError);
}

TEST_CASE("teacher-student: vsLSTM reaches MSE below 0.01") {
  ToyCorpus corpus = make_toy_corpus(6, 40, 4, 901);

  std::mt19937_64 rng(902);
  VsLstmModel student = make_vslstm(4, 8, rng);
  SgdConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.epochs_max = 200;
  cfg.patience_k = 200;  // run the full budget; this test tracks the loss
  cfg.momentum = 0.9;
  cfg.seed = 3;
  const TrainReport report = vslstm_train(student, corpus.train, corpus.val, cfg);

  const double best_mse = *std::min_element(report.train_loss.begin(), report.train_loss.end());
  CHECK(best_mse < 0.01);
  check_early_stop(report, cfg.patience_k, cfg.epochs_max);
}

TEST_CASE("training is deterministic given the seed") {
  ToyCorpus corpus = make_toy_corpus(4, 24, 3, 903);
  SgdConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs_max = 8;
  cfg.patience_k = 8;
  cfg.seed = 11;

  std::mt19937_64 rng_a(904), rng_b(904);
  VsLstmModel a = make_vslstm(3, 4, rng_a);
  VsLstmModel b = make_vslstm(3, 4, rng_b);
  const TrainReport ra = vslstm_train(a, corpus.train, corpus.val, cfg);
  const TrainReport rb = vslstm_train(b, corpus.train, corpus.val, cfg);
  CHECK(ra.train_loss == rb.train_loss);
  CHECK(ra.val_f == rb.val_f);
  CHECK(ra.stopped_epoch == rb.stopped_epoch);
  REQUIRE(ra.best_checkpoint.weights.size() == rb.best_checkpoint.weights.size());
  for (size_t i = 0; i < ra.best_checkpoint.weights.size(); ++i)
    CHECK(ra.best_checkpoint.weights[i].second == rb.best_checkpoint.weights[i].second);
}

TEST_CASE("early stopping halts on consecutive validation decreases") {
  ToyCorpus corpus = make_toy_corpus(5, 30, 3, 905);
  SgdConfig cfg;
  cfg.learning_rate = 0.4;  // aggressive on purpose, F will oscillate
  cfg.epochs_max = 60;
  cfg.patience_k = 2;
  cfg.seed = 5;
  std::mt19937_64 rng(906);
  VsLstmModel m = make_vslstm(3, 4, rng);
  const TrainReport report = vslstm_train(m, corpus.train, corpus.val, cfg);
  check_early_stop(report, cfg.patience_k, cfg.epochs_max);
}

TEST_CASE("stage-2 likelihood strictly improves over the first 10 epochs on a toy video") {
  ToyCorpus corpus = make_toy_corpus(2, 32, 3, 907);
  // single training video; the other is validation
  std::vector<TrainVideo> train{corpus.train.front()};

  SgdConfig cfg;
  cfg.learning_rate = 0.1;  // stage-2 factor 0.1 brings this to the spec's 0.01
  cfg.epochs_max = 10;
  cfg.patience_k = 100;
  cfg.momentum = 0.0;
  cfg.seed = 7;
  std::mt19937_64 rng(908);
  DppLstmModel m = make_dpplstm(3, 4, 3, rng);
  const TrainReport report = dpplstm_train_stagewise(m, train, corpus.val, cfg);

  REQUIRE(report.stage1_epochs > 0);
  REQUIRE(report.train_loss.size() > static_cast<size_t>(report.stage1_epochs));
  const auto stage2_begin = report.train_loss.begin() + report.stage1_epochs;
  for (auto it = stage2_begin + 1; it != report.train_loss.end(); ++it)
    CHECK(*it < *(it - 1));  // NLL strictly decreasing = likelihood increasing
}

TEST_CASE("empty keyframe targets are rejected") {
  ToyCorpus corpus = make_toy_corpus(3, 32, 3, 909);
  corpus.train.front().keyframes.clear();
  SgdConfig cfg;
  std::mt19937_64 rng(910);
  DppLstmModel m = make_dpplstm(3, 4, 3, rng);
  CHECK_THROWS_AS(dpplstm_train_stagewise(m, corpus.train, corpus.val, cfg), ContractError);
}

TEST_CASE("training requires non-empty train and validation sets") {
  ToyCorpus corpus = make_toy_corpus(3, 20, 3, 911);
  SgdConfig cfg;
  std::mt19937_64 rng(912);
  VsLstmModel m = make_vslstm(3, 4, rng);
  CHECK_THROWS_AS(vslstm_train(m, {}, corpus.val, cfg), ContractError);
  CHECK_THROWS_AS(vslstm_train(m, corpus.train, {}, cfg), ContractError);
}

TEST_CASE("mlp-shot training requires a segmentation") {
  ToyCorpus corpus = make_toy_corpus(3, 20, 3, 913);
  corpus.train.front().seg = nullptr;
  SgdConfig cfg;
  cfg.epochs_max = 2;
  std::mt19937_64 rng(914);
  MlpBaseline m = make_mlp_baseline(BaselineVariant::Shot, 3, 4, 5, rng);
  CHECK_THROWS_AS(baseline_train(m, corpus.train, corpus.val, cfg), ContractError);
}

TEST_CASE("baseline training runs and reports per the early-stopping contract") {
  ToyCorpus corpus = make_toy_corpus(5, 30, 3, 915);
  SgdConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.epochs_max = 30;
  cfg.patience_k = 3;
  cfg.seed = 2;
  std::mt19937_64 rng(916);
  MlpBaseline frame = make_mlp_baseline(BaselineVariant::Frame, 3, 6, 5, rng);
  const TrainReport rf = baseline_train(frame, corpus.train, corpus.val, cfg);
  check_early_stop(rf, cfg.patience_k, cfg.epochs_max);

  MlpBaseline shot = make_mlp_baseline(BaselineVariant::Shot, 3, 6, 5, rng);
  const TrainReport rs = baseline_train(shot, corpus.train, corpus.val, cfg);
  check_early_stop(rs, cfg.patience_k, cfg.epochs_max);
}

TEST_CASE("dpplstm-single trains on keyframe targets") {
  ToyCorpus corpus = make_toy_corpus(4, 32, 3, 917);
  SgdConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs_max = 6;
  cfg.patience_k = 6;
  cfg.seed = 4;
  std::mt19937_64 rng(918);
  DppLstmSingleModel m = make_dpplstm_single(3, 4, 3, rng);
  const TrainReport report = dpplstm_single_train(m, corpus.train, corpus.val, cfg);
  check_early_stop(report, cfg.patience_k, cfg.epochs_max);
}

}  // TEST_SUITE
