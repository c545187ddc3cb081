#include "vsum/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace vsum::models {

using autodiff::BoundDense;
using autodiff::BoundLstmCell;
using autodiff::GradientBundle;
using autodiff::ParamPack;
using autodiff::SgdConfig;
using autodiff::Tape;
using linalg::FeatureSequence;
using linalg::Matrix;

// ---------------------------------------------------------------------------
// parameter binding: one enumeration defines pack order, tape order and
// checkpoint names

namespace {

struct Binder {
  ParamPack pack;
  Tape* tape = nullptr;

  Tape::Id mat(const std::string& name, Matrix& m) {
    pack.add(name, m);
    return tape ? tape->parameter({m.data.data(), m.data.size()}, m.rows, m.cols) : -1;
  }
  Tape::Id vec(const std::string& name, std::vector<double>& v) {
    pack.add(name, v);
    return tape ? tape->parameter({v.data(), v.size()}, static_cast<int>(v.size()), 1) : -1;
  }
};

BoundLstmCell bind_cell(Binder& b, const std::string& prefix, autodiff::LstmCellParams& cell) {
  BoundLstmCell out;
  out.w_i = b.mat(prefix + ".w_i", cell.w_i);
  out.w_f = b.mat(prefix + ".w_f", cell.w_f);
  out.w_o = b.mat(prefix + ".w_o", cell.w_o);
  out.w_c = b.mat(prefix + ".w_c", cell.w_c);
  return out;
}

std::vector<BoundDense> bind_mlp(Binder& b, const std::string& prefix, Mlp& mlp) {
  std::vector<BoundDense> out;
  out.reserve(mlp.size());
  for (size_t i = 0; i < mlp.size(); ++i) {
    BoundDense d;
    d.weight = b.mat(prefix + "." + std::to_string(i) + ".weight", mlp[i].weight);
    d.bias = b.vec(prefix + "." + std::to_string(i) + ".bias", mlp[i].bias);
    d.activation = mlp[i].activation;
    out.push_back(d);
  }
  return out;
}

struct BoundBiLstm {
  BoundLstmCell fwd, bwd;
};

BoundBiLstm bind_bilstm(Binder& b, autodiff::BiLstmParams& p) {
  BoundBiLstm out;
  out.fwd = bind_cell(b, "bilstm.fwd", p.forward_cell);
  out.bwd = bind_cell(b, "bilstm.bwd", p.backward_cell);
  return out;
}

}  // namespace

ParamPack parameters(VsLstmModel& m) {
  Binder b;
  bind_bilstm(b, m.bilstm);
  bind_mlp(b, "f_i", m.f_i);
  return std::move(b.pack);
}

ParamPack parameters(DppLstmModel& m) {
  Binder b;
  bind_bilstm(b, m.bilstm);
  bind_mlp(b, "f_i", m.f_i);
  bind_mlp(b, "f_s", m.f_s);
  return std::move(b.pack);
}

ParamPack parameters(DppLstmSingleModel& m) {
  Binder b;
  bind_bilstm(b, m.bilstm);
  bind_mlp(b, "f_s", m.f_s);
  return std::move(b.pack);
}

ParamPack parameters(MlpBaseline& m) {
  Binder b;
  bind_mlp(b, "net", m.net);
  return std::move(b.pack);
}

// ---------------------------------------------------------------------------
// construction

VsLstmModel make_vslstm(int feature_dim, int hidden, std::mt19937_64& rng, double init_scale) {
  VsLstmModel m;
  m.bilstm = autodiff::make_bilstm(feature_dim, hidden, rng, init_scale);
  const int head_in = 2 * hidden + feature_dim;
  m.f_i.push_back(autodiff::make_dense(head_in, hidden, autodiff::Activation::Sigmoid, rng, init_scale));
  m.f_i.push_back(autodiff::make_dense(hidden, 1, autodiff::Activation::Sigmoid, rng, init_scale));
  return m;
}

DppLstmModel make_dpplstm(int feature_dim, int hidden, int embed_dim, std::mt19937_64& rng,
                          double init_scale) {
  if (embed_dim < 1) throw ContractError("make_dpplstm: embed_dim must be >= 1");
  DppLstmModel m;
  m.bilstm = autodiff::make_bilstm(feature_dim, hidden, rng, init_scale);
  const int head_in = 2 * hidden + feature_dim;
  m.f_i.push_back(autodiff::make_dense(head_in, hidden, autodiff::Activation::Sigmoid, rng, init_scale));
  m.f_i.push_back(autodiff::make_dense(hidden, 1, autodiff::Activation::Sigmoid, rng, init_scale));
  m.f_s.push_back(autodiff::make_dense(head_in, hidden, autodiff::Activation::Sigmoid, rng, init_scale));
  m.f_s.push_back(autodiff::make_dense(hidden, embed_dim, autodiff::Activation::Linear, rng, init_scale));
  return m;
}

DppLstmSingleModel make_dpplstm_single(int feature_dim, int hidden, int embed_dim,
                                       std::mt19937_64& rng, double init_scale) {
  if (embed_dim < 1) throw ContractError("make_dpplstm_single: embed_dim must be >= 1");
  DppLstmSingleModel m;
  m.bilstm = autodiff::make_bilstm(feature_dim, hidden, rng, init_scale);
  const int head_in = 2 * hidden + feature_dim;
  m.f_s.push_back(autodiff::make_dense(head_in, hidden, autodiff::Activation::Sigmoid, rng, init_scale));
  m.f_s.push_back(autodiff::make_dense(hidden, embed_dim, autodiff::Activation::Linear, rng, init_scale));
  return m;
}

MlpBaseline make_mlp_baseline(BaselineVariant variant, int feature_dim, int hidden, int window_k,
                              std::mt19937_64& rng, double init_scale) {
  if (variant == BaselineVariant::Frame && window_k % 2 == 0)
    throw ContractError("make_mlp_baseline: window_k must be odd");
  MlpBaseline m;
  m.variant = variant;
  m.window_k = window_k;
  m.feature_dim = feature_dim;
  const int in = variant == BaselineVariant::Shot ? feature_dim : window_k * feature_dim;
  m.net.push_back(autodiff::make_dense(in, hidden, autodiff::Activation::Sigmoid, rng, init_scale));
  m.net.push_back(autodiff::make_dense(hidden, hidden, autodiff::Activation::Sigmoid, rng, init_scale));
  m.net.push_back(autodiff::make_dense(hidden, 1, autodiff::Activation::Sigmoid, rng, init_scale));
  return m;
}

// ---------------------------------------------------------------------------
// plain inference

namespace {

std::vector<double> head_input(const Matrix& h_fwd, const Matrix& h_bwd,
                               const FeatureSequence& x, int t) {
  std::vector<double> in;
  in.reserve(h_fwd.cols + h_bwd.cols + x.cols);
  const auto f = h_fwd.row(t);
  const auto b = h_bwd.row(t);
  const auto xt = x.row(t);
  in.insert(in.end(), f.begin(), f.end());
  in.insert(in.end(), b.begin(), b.end());
  in.insert(in.end(), xt.begin(), xt.end());
  return in;
}

// one row of head outputs per frame
Matrix head_outputs(const autodiff::BiLstmParams& bilstm, const Mlp& head,
                    const FeatureSequence& x) {
  const auto [h_fwd, h_bwd] = autodiff::bilstm_forward(bilstm, x);
  const int out_dim = head.back().output_size();
  Matrix out(x.rows, out_dim);
  for (int t = 0; t < x.rows; ++t) {
    const std::vector<double> o = autodiff::mlp_forward(head, head_input(h_fwd, h_bwd, x, t));
    std::copy(o.begin(), o.end(), out.row(t).begin());
  }
  return out;
}

dpp::DppKernel qd_kernel(std::span<const double> y, const Matrix& phi) {
  const int T = phi.rows;
  dpp::DppKernel k;
  k.l = Matrix(T, T);
  for (int s = 0; s < T; ++s) {
    for (int t = s; t < T; ++t) {
      double dot = 0.0;
      for (int e = 0; e < phi.cols; ++e) dot += phi.at(s, e) * phi.at(t, e);
      const double v = y[s] * y[t] * dot;
      k.l.at(s, t) = v;
      k.l.at(t, s) = v;
    }
  }
  return k;
}

}  // namespace

temporal::ImportanceCurve vslstm_predict(const VsLstmModel& m, const FeatureSequence& x) {
  const Matrix scores = head_outputs(m.bilstm, m.f_i, x);
  return {scores.data.begin(), scores.data.end()};
}

dpp::DppKernel dpplstm_build_kernel(const DppLstmModel& m, const FeatureSequence& x) {
  const Matrix y = head_outputs(m.bilstm, m.f_i, x);
  const Matrix phi = head_outputs(m.bilstm, m.f_s, x);
  return qd_kernel(y.data, phi);
}

dpp::DppKernel dpplstm_single_build_kernel(const DppLstmSingleModel& m,
                                           const FeatureSequence& x) {
  const Matrix phi = head_outputs(m.bilstm, m.f_s, x);
  const std::vector<double> ones(x.rows, 1.0);
  return qd_kernel(ones, phi);
}

namespace {

std::vector<double> frame_window(const FeatureSequence& x, int t, int window_k) {
  // edge replication keeps the window centered at sequence boundaries
  std::vector<double> in;
  in.reserve(static_cast<size_t>(window_k) * x.cols);
  const int half = window_k / 2;
  for (int off = -half; off <= half; ++off) {
    const int s = std::clamp(t + off, 0, x.rows - 1);
    const auto row = x.row(s);
    in.insert(in.end(), row.begin(), row.end());
  }
  return in;
}

std::vector<double> segment_mean_feature(const FeatureSequence& x, const temporal::Interval& s) {
  std::vector<double> mean(x.cols, 0.0);
  for (int t = s.start; t <= s.end; ++t)
    for (int c = 0; c < x.cols; ++c) mean[c] += x.at(t, c);
  for (double& v : mean) v /= s.length();
  return mean;
}

}  // namespace

std::vector<double> baseline_predict(const MlpBaseline& m, const FeatureSequence& x,
                                     const temporal::Segmentation& seg) {
  if (x.rows == 0) throw ContractError("baseline_predict: empty sequence");
  if (x.cols != m.feature_dim) throw ShapeError("baseline_predict: feature dim mismatch");
  std::vector<double> scores;
  if (m.variant == BaselineVariant::Shot) {
    temporal::validate(seg);
    scores.reserve(seg.count());
    for (int i = 0; i < seg.count(); ++i)
      scores.push_back(autodiff::mlp_forward(m.net, segment_mean_feature(x, seg.segment(i)))[0]);
  } else {
    scores.reserve(x.rows);
    for (int t = 0; t < x.rows; ++t)
      scores.push_back(autodiff::mlp_forward(m.net, frame_window(x, t, m.window_k))[0]);
  }
  return scores;
}

// ---------------------------------------------------------------------------
// summaries

void validate_budget(const Summary& s) {
  temporal::validate_keyshots(s.keyshots, s.total_frames);
  if (temporal::keyshot_duration(s.keyshots) > s.budget)
    throw ContractError("summary exceeds its frame budget");
}

namespace {

void check_fraction(double budget_fraction) {
  if (!(budget_fraction > 0.0) || budget_fraction > 1.0)
    throw ContractError("budget_fraction must be in (0, 1]");
}

int segment_index_of(const temporal::Segmentation& seg, int start) {
  const auto it = std::lower_bound(seg.starts.begin(), seg.starts.end(), start);
  if (it == seg.starts.end() || *it != start)
    throw ContractError("interval does not align with the segmentation");
  return static_cast<int>(it - seg.starts.begin());
}

// MAP keyframes -> keyshots, then fill leftover budget with the best
// non-selected intervals by mean frame score.
Summary map_then_fill(const dpp::DppKernel& kernel, const std::vector<double>& frame_scores,
                      const temporal::Segmentation& seg, double budget_fraction) {
  temporal::validate(seg);
  check_fraction(budget_fraction);
  const int budget = temporal::budget_frames(seg.total, budget_fraction);

  const dpp::SubsetIndex map_frames = dpp::map_greedy(kernel);
  auto [shots, ind] = temporal::keyframes_to(map_frames, seg, budget);

  std::vector<char> selected(seg.count(), 0);
  for (const temporal::Interval& s : shots) selected[segment_index_of(seg, s.start)] = 1;

  const int remaining = budget - temporal::keyshot_duration(shots);
  if (remaining > 0) {
    std::vector<int> candidates;
    std::vector<temporal::KnapsackItem> items;
    for (int i = 0; i < seg.count(); ++i) {
      if (selected[i]) continue;
      const temporal::Interval s = seg.segment(i);
      double mean = 0.0;
      for (int t = s.start; t <= s.end; ++t) mean += frame_scores[t];
      candidates.push_back(i);
      items.push_back({mean / s.length(), s.length()});
    }
    for (int pick : temporal::knapsack_select(items, remaining))
      shots.push_back(seg.segment(candidates[pick]));
    std::sort(shots.begin(), shots.end(),
              [](const temporal::Interval& a, const temporal::Interval& b) {
                return a.start < b.start;
              });
  }

  Summary out{std::move(shots), map_frames, seg.total, budget};
  validate_budget(out);
  return out;
}

}  // namespace

Summary summarize_scores(const temporal::ImportanceCurve& scores,
                         const temporal::Segmentation& seg, double budget_fraction) {
  temporal::validate(seg);
  check_fraction(budget_fraction);
  const int budget = temporal::budget_frames(seg.total, budget_fraction);
  auto [shots, keyframes] = temporal::scores_to(scores, seg, budget);
  Summary out{std::move(shots), std::move(keyframes), seg.total, budget};
  validate_budget(out);
  return out;
}

Summary vslstm_summarize(const VsLstmModel& m, const FeatureSequence& x,
                         const temporal::Segmentation& seg, double budget_fraction) {
  return summarize_scores(vslstm_predict(m, x), seg, budget_fraction);
}

Summary dpplstm_summarize(const DppLstmModel& m, const FeatureSequence& x,
                          const temporal::Segmentation& seg, double budget_fraction) {
  const Matrix y = head_outputs(m.bilstm, m.f_i, x);
  const Matrix phi = head_outputs(m.bilstm, m.f_s, x);
  return map_then_fill(qd_kernel(y.data, phi), y.data, seg, budget_fraction);
}

Summary dpplstm_single_summarize(const DppLstmSingleModel& m, const FeatureSequence& x,
                                 const temporal::Segmentation& seg, double budget_fraction) {
  const dpp::DppKernel kernel = dpplstm_single_build_kernel(m, x);
  std::vector<double> diag(kernel.size());
  for (int t = 0; t < kernel.size(); ++t) diag[t] = kernel.l.at(t, t);
  return map_then_fill(kernel, diag, seg, budget_fraction);
}

Summary baseline_summarize(const MlpBaseline& m, const FeatureSequence& x,
                           const temporal::Segmentation& seg, double budget_fraction) {
  const std::vector<double> scores = baseline_predict(m, x, seg);
  if (m.variant == BaselineVariant::Frame)
    return summarize_scores({scores.begin(), scores.end()}, seg, budget_fraction);
  temporal::ImportanceCurve curve(seg.total, 0.0);
  for (int i = 0; i < seg.count(); ++i) {
    const temporal::Interval s = seg.segment(i);
    for (int t = s.start; t <= s.end; ++t) curve[t] = scores[i];
  }
  return summarize_scores(curve, seg, budget_fraction);
}

// ---------------------------------------------------------------------------
// differentiable losses

namespace {

// per-frame f_i (or f_s) output nodes over the bilstm hidden states
std::vector<Tape::Id> head_nodes(Tape& t, std::span<const BoundDense> head,
                                 const autodiff::BiLstmNodes& chains) {
  const int T = static_cast<int>(chains.inputs.size());
  std::vector<Tape::Id> out(T);
  for (int s = 0; s < T; ++s) {
    const std::array<Tape::Id, 3> parts{chains.h_fwd[s], chains.h_bwd[s], chains.inputs[s]};
    out[s] = autodiff::mlp_nodes(t, head, t.concat(parts));
  }
  return out;
}

// -(logdet(L_z) - logdet(L + I)) with the kernel assembled from parent
// values; both determinants use the jitter ladder so value and gradient stay
// consistent near singular kernels.
Tape::Id dpp_nll_node(Tape& t, Tape::Id y_stack, Tape::Id phi_stack, int T, int embed,
                      dpp::SubsetIndex zstar, double jitter) {
  const auto y = t.value(y_stack);
  const auto phi_flat = t.value(phi_stack);
  Matrix phi(T, embed, {phi_flat.begin(), phi_flat.end()});
  const dpp::DppKernel kernel = qd_kernel(y, phi);

  Matrix plus_i = kernel.l;
  for (int i = 0; i < T; ++i) plus_i.at(i, i) += 1.0;
  const double denom = linalg::logdet_psd(plus_i, jitter);
  const double numer =
      zstar.empty() ? 0.0
                    : linalg::logdet_psd(dpp::principal_minor(kernel.l, zstar), jitter);
  const double nll = denom - numer;

  auto backward = [T, embed, zstar = std::move(zstar), jitter](Tape& tape, Tape::Id self,
                                                               const std::vector<Tape::Id>& parents) {
    const double g0 = tape.grad(self)[0];
    if (g0 == 0.0) return;
    const auto yv = tape.value(parents[0]);
    const auto pv = tape.value(parents[1]);
    Matrix phi_m(T, embed, {pv.begin(), pv.end()});
    const dpp::DppKernel k = qd_kernel(yv, phi_m);
    const Matrix go = dpp::dpp_nll_grad(k, zstar);  // d(nll)/dL

    auto y_grad = tape.grad_mut(parents[0]);
    auto phi_grad = tape.grad_mut(parents[1]);
    for (int a = 0; a < T; ++a) {
      double acc_y = 0.0;
      for (int b = 0; b < T; ++b) {
        double dot = 0.0;
        for (int e = 0; e < embed; ++e) dot += phi_m.at(a, e) * phi_m.at(b, e);
        acc_y += go.at(a, b) * yv[b] * dot;
      }
      y_grad[a] += g0 * 2.0 * acc_y;
      for (int e = 0; e < embed; ++e) {
        double acc_p = 0.0;
        for (int b = 0; b < T; ++b) acc_p += go.at(a, b) * yv[b] * phi_m.at(b, e);
        phi_grad[static_cast<size_t>(a) * embed + e] += g0 * 2.0 * yv[a] * acc_p;
      }
    }
  };
  return t.custom({y_stack, phi_stack}, {nll}, 1, 1, std::move(backward));
}

void check_regression_target(const FeatureSequence& x, const temporal::ImportanceCurve& targets) {
  if (static_cast<int>(targets.size()) != x.rows)
    throw ShapeError("training target length does not match the sequence");
  for (double v : targets)
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("training target outside [0, 1]");
}

}  // namespace

double vslstm_loss_and_grad(VsLstmModel& m, const FeatureSequence& x,
                            const temporal::ImportanceCurve& targets, GradientBundle* grads) {
  check_regression_target(x, targets);
  Tape tape;
  tape.reserve(static_cast<size_t>(x.rows) * 40 + 32);
  Binder b;
  b.tape = &tape;
  const BoundBiLstm bilstm = bind_bilstm(b, m.bilstm);
  const std::vector<BoundDense> f_i = bind_mlp(b, "f_i", m.f_i);
  const autodiff::BiLstmNodes chains = autodiff::bilstm_nodes(tape, bilstm.fwd, bilstm.bwd, x);
  const std::vector<Tape::Id> scores = head_nodes(tape, f_i, chains);
  const Tape::Id loss = tape.mse(tape.concat(scores), targets);
  if (grads) {
    tape.backward(loss);
    *grads = tape.parameter_gradients();
  }
  return tape.value(loss)[0];
}

double dpplstm_nll_and_grad(DppLstmModel& m, const FeatureSequence& x,
                            const temporal::KeyframeSet& keyframes, GradientBundle* grads) {
  dpp::validate_subset(keyframes, x.rows);
  Tape tape;
  tape.reserve(static_cast<size_t>(x.rows) * 50 + 32);
  Binder b;
  b.tape = &tape;
  const BoundBiLstm bilstm = bind_bilstm(b, m.bilstm);
  const std::vector<BoundDense> f_i = bind_mlp(b, "f_i", m.f_i);
  const std::vector<BoundDense> f_s = bind_mlp(b, "f_s", m.f_s);
  const autodiff::BiLstmNodes chains = autodiff::bilstm_nodes(tape, bilstm.fwd, bilstm.bwd, x);
  const Tape::Id y = tape.concat(head_nodes(tape, f_i, chains));
  const Tape::Id phi = tape.concat(head_nodes(tape, f_s, chains));
  const Tape::Id loss =
      dpp_nll_node(tape, y, phi, x.rows, m.embed_dim(), keyframes, linalg::kDefaultJitter);
  if (grads) {
    tape.backward(loss);
    *grads = tape.parameter_gradients();
  }
  return tape.value(loss)[0];
}

double dpplstm_single_nll_and_grad(DppLstmSingleModel& m, const FeatureSequence& x,
                                   const temporal::KeyframeSet& keyframes,
                                   GradientBundle* grads) {
  dpp::validate_subset(keyframes, x.rows);
  Tape tape;
  tape.reserve(static_cast<size_t>(x.rows) * 45 + 32);
  Binder b;
  b.tape = &tape;
  const BoundBiLstm bilstm = bind_bilstm(b, m.bilstm);
  const std::vector<BoundDense> f_s = bind_mlp(b, "f_s", m.f_s);
  const autodiff::BiLstmNodes chains = autodiff::bilstm_nodes(tape, bilstm.fwd, bilstm.bwd, x);
  const std::vector<double> ones(x.rows, 1.0);
  const Tape::Id y = tape.constant(ones, x.rows);
  const Tape::Id phi = tape.concat(head_nodes(tape, f_s, chains));
  const Tape::Id loss =
      dpp_nll_node(tape, y, phi, x.rows, m.embed_dim(), keyframes, linalg::kDefaultJitter);
  if (grads) {
    tape.backward(loss);
    *grads = tape.parameter_gradients();
  }
  return tape.value(loss)[0];
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

ModelCheckpoint snapshot(std::string kind, std::map<std::string, std::int64_t> dims,
                         const ParamPack& pack) {
  ModelCheckpoint ck;
  ck.kind = std::move(kind);
  ck.dims = std::move(dims);
  for (const autodiff::ParamSlot& s : pack.slots()) {
    Matrix m(s.rows, s.cols);
    std::copy(s.data, s.data + s.count(), m.data.begin());
    ck.weights.emplace_back(s.name, std::move(m));
  }
  return ck;
}

void restore(const ModelCheckpoint& ck, ParamPack& pack) {
  if (ck.weights.size() != pack.slots().size())
    throw ParseError("checkpoint weight count does not match the model");
  for (size_t i = 0; i < ck.weights.size(); ++i) {
    const auto& [name, m] = ck.weights[i];
    const autodiff::ParamSlot& s = pack.slots()[i];
    if (name != s.name) throw ParseError("checkpoint weight order mismatch at " + name);
    if (m.rows != s.rows || m.cols != s.cols)
      throw ParseError("checkpoint weight shape mismatch at " + name);
    std::copy(m.data.begin(), m.data.end(), s.data);
  }
}

std::int64_t dim_of(const ModelCheckpoint& ck, const std::string& key) {
  const auto it = ck.dims.find(key);
  if (it == ck.dims.end()) throw ParseError("checkpoint missing dimension: " + key);
  return it->second;
}

void expect_kind(const ModelCheckpoint& ck, std::string_view kind) {
  if (ck.kind != kind)
    throw ConfigError("checkpoint kind '" + ck.kind + "' where '" + std::string(kind) +
                      "' was expected");
}

}  // namespace

ModelCheckpoint to_checkpoint(VsLstmModel& m) {
  return snapshot("vslstm", {{"feature_dim", m.feature_dim()}, {"hidden", m.hidden_size()}},
                  parameters(m));
}

ModelCheckpoint to_checkpoint(DppLstmModel& m) {
  return snapshot("dpplstm",
                  {{"feature_dim", m.feature_dim()},
                   {"hidden", m.hidden_size()},
                   {"embed_dim", m.embed_dim()}},
                  parameters(m));
}

ModelCheckpoint to_checkpoint(DppLstmSingleModel& m) {
  return snapshot("dpplstm-single",
                  {{"feature_dim", m.feature_dim()},
                   {"hidden", m.hidden_size()},
                   {"embed_dim", m.embed_dim()}},
                  parameters(m));
}

ModelCheckpoint to_checkpoint(MlpBaseline& m) {
  const char* kind = m.variant == BaselineVariant::Shot ? "mlp-shot" : "mlp-frame";
  // hidden size is the first layer's output
  return snapshot(kind,
                  {{"feature_dim", m.feature_dim},
                   {"hidden", m.net.front().output_size()},
                   {"window_k", m.window_k}},
                  parameters(m));
}

VsLstmModel vslstm_from_checkpoint(const ModelCheckpoint& ck) {
  expect_kind(ck, "vslstm");
  std::mt19937_64 rng(0);
  VsLstmModel m = make_vslstm(static_cast<int>(dim_of(ck, "feature_dim")),
                              static_cast<int>(dim_of(ck, "hidden")), rng);
  ParamPack pack = parameters(m);
  restore(ck, pack);
  return m;
}

DppLstmModel dpplstm_from_checkpoint(const ModelCheckpoint& ck) {
  expect_kind(ck, "dpplstm");
  std::mt19937_64 rng(0);
  DppLstmModel m = make_dpplstm(static_cast<int>(dim_of(ck, "feature_dim")),
                                static_cast<int>(dim_of(ck, "hidden")),
                                static_cast<int>(dim_of(ck, "embed_dim")), rng);
  ParamPack pack = parameters(m);
  restore(ck, pack);
  return m;
}

DppLstmSingleModel dpplstm_single_from_checkpoint(const ModelCheckpoint& ck) {
  expect_kind(ck, "dpplstm-single");
  std::mt19937_64 rng(0);
  DppLstmSingleModel m = make_dpplstm_single(static_cast<int>(dim_of(ck, "feature_dim")),
                                             static_cast<int>(dim_of(ck, "hidden")),
                                             static_cast<int>(dim_of(ck, "embed_dim")), rng);
  ParamPack pack = parameters(m);
  restore(ck, pack);
  return m;
}

MlpBaseline baseline_from_checkpoint(const ModelCheckpoint& ck) {
  if (ck.kind != "mlp-shot" && ck.kind != "mlp-frame")
    throw ConfigError("checkpoint kind '" + ck.kind + "' is not an MLP baseline");
  std::mt19937_64 rng(0);
  MlpBaseline m = make_mlp_baseline(
      ck.kind == "mlp-shot" ? BaselineVariant::Shot : BaselineVariant::Frame,
      static_cast<int>(dim_of(ck, "feature_dim")), static_cast<int>(dim_of(ck, "hidden")),
      static_cast<int>(dim_of(ck, "window_k")), rng);
  ParamPack pack = parameters(m);
  restore(ck, pack);
  return m;
}

// ---------------------------------------------------------------------------
// training loops

double mean_summary_f(const std::vector<ValVideo>& videos,
                      const std::function<Summary(const ValVideo&)>& summarize,
                      eval::AggMode agg) {
  if (videos.empty()) throw ContractError("mean_summary_f: empty video set");
  double total = 0.0;
  for (const ValVideo& v : videos) {
    const Summary s = summarize(v);
    total += eval::eval_multi_user(s.keyshots, v.refs, v.features->rows, agg).f_score;
  }
  return total / static_cast<double>(videos.size());
}

namespace {

struct LoopHooks {
  std::function<double(std::mt19937_64&)> run_epoch;  // returns mean training loss
  std::function<double()> validation_f;
  std::function<ModelCheckpoint()> snapshot;
};

// Early stopping: halt at the first epoch whose validation F-score completed
// patience_k consecutive strict decreases; keep the earliest argmax epoch.
TrainReport run_training_loop(const SgdConfig& cfg, const LoopHooks& hooks) {
  autodiff::validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  TrainReport report;
  double prev_f = 0.0;
  int streak = 0;
  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    report.train_loss.push_back(hooks.run_epoch(rng));
    const double f = hooks.validation_f();
    report.val_f.push_back(f);
    if (epoch == 1 || f > report.best_val_f) {
      report.best_val_f = f;
      report.best_epoch = epoch;
      report.best_checkpoint = hooks.snapshot();
      report.best_checkpoint.meta["best_epoch"] = std::to_string(epoch);
      report.best_checkpoint.meta["val_f"] = std::to_string(f);
    }
    if (epoch > 1 && f < prev_f) {
      if (++streak >= cfg.patience_k) {
        report.stopped_epoch = epoch;
        return report;
      }
    } else {
      streak = 0;
    }
    prev_f = f;
  }
  report.stopped_epoch = static_cast<int>(report.val_f.size());
  return report;
}

void check_train_inputs(const std::vector<TrainVideo>& train, const std::vector<ValVideo>& val) {
  if (train.empty() || val.empty())
    throw ContractError("training requires non-empty train and validation sets");
  for (const TrainVideo& v : train)
    if (!v.features) throw ContractError("training video without features");
  for (const ValVideo& v : val) {
    if (!v.features || !v.seg) throw ContractError("validation video without features/segmentation");
    if (v.refs.empty()) throw ContractError("validation video without reference summaries");
  }
}

// shared SGD epoch: one gradient step per video in shuffled order
template <typename LossFn>
double sgd_epoch(std::mt19937_64& rng, std::vector<int>& order, ParamPack& pack,
                 autodiff::SgdOptimizer& opt, LossFn&& loss_of) {
  std::shuffle(order.begin(), order.end(), rng);
  double total = 0.0;
  for (int idx : order) {
    GradientBundle grads;
    total += loss_of(idx, &grads);
    opt.step(pack, grads);
  }
  return total / static_cast<double>(order.size());
}

std::vector<int> index_order(size_t n) {
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  return order;
}

}  // namespace

TrainReport vslstm_train(VsLstmModel& m, const std::vector<TrainVideo>& train,
                         const std::vector<ValVideo>& val, const SgdConfig& cfg,
                         const TrainOptions& opts) {
  check_train_inputs(train, val);
  for (const TrainVideo& v : train) check_regression_target(*v.features, v.curve);

  ParamPack pack = parameters(m);
  autodiff::SgdOptimizer opt(cfg, pack.scalar_count());
  std::vector<int> order = index_order(train.size());

  LoopHooks hooks;
  hooks.run_epoch = [&](std::mt19937_64& rng) {
    return sgd_epoch(rng, order, pack, opt, [&](int i, GradientBundle* g) {
      return vslstm_loss_and_grad(m, *train[i].features, train[i].curve, g);
    });
  };
  hooks.validation_f = [&] {
    return mean_summary_f(
        val,
        [&](const ValVideo& v) {
          return vslstm_summarize(m, *v.features, *v.seg, opts.budget_fraction);
        },
        opts.agg);
  };
  hooks.snapshot = [&] { return to_checkpoint(m); };

  TrainReport report = run_training_loop(cfg, hooks);
  m = vslstm_from_checkpoint(report.best_checkpoint);
  return report;
}

TrainReport dpplstm_train_stagewise(DppLstmModel& m, const std::vector<TrainVideo>& train,
                                    const std::vector<ValVideo>& val, const SgdConfig& cfg,
                                    const TrainOptions& opts) {
  check_train_inputs(train, val);
  for (const TrainVideo& v : train) {
    check_regression_target(*v.features, v.curve);
    if (v.keyframes.empty())
      throw ContractError("dpplstm_train_stagewise: empty keyframe target");
    dpp::validate_subset(v.keyframes, v.features->rows);
  }

  std::vector<int> order = index_order(train.size());

  // stage 1: bilstm + f_i on the importance curves, exactly the vsLSTM loss
  TrainReport stage1;
  {
    Binder b;
    bind_bilstm(b, m.bilstm);
    bind_mlp(b, "f_i", m.f_i);
    ParamPack pack = std::move(b.pack);
    autodiff::SgdOptimizer opt(cfg, pack.scalar_count());

    LoopHooks hooks;
    hooks.run_epoch = [&](std::mt19937_64& rng) {
      return sgd_epoch(rng, order, pack, opt, [&](int i, GradientBundle* g) {
        Tape tape;
        tape.reserve(static_cast<size_t>(train[i].features->rows) * 40 + 32);
        Binder tb;
        tb.tape = &tape;
        const BoundBiLstm bilstm = bind_bilstm(tb, m.bilstm);
        const std::vector<BoundDense> f_i = bind_mlp(tb, "f_i", m.f_i);
        const autodiff::BiLstmNodes chains =
            autodiff::bilstm_nodes(tape, bilstm.fwd, bilstm.bwd, *train[i].features);
        const Tape::Id loss =
            tape.mse(tape.concat(head_nodes(tape, f_i, chains)), train[i].curve);
        tape.backward(loss);
        *g = tape.parameter_gradients();
        return tape.value(loss)[0];
      });
    };
    hooks.validation_f = [&] {
      return mean_summary_f(
          val,
          [&](const ValVideo& v) {
            const Matrix scores = head_outputs(m.bilstm, m.f_i, *v.features);
            return summarize_scores({scores.data.begin(), scores.data.end()}, *v.seg,
                                    opts.budget_fraction);
          },
          opts.agg);
    };
    hooks.snapshot = [&] { return to_checkpoint(m); };

    stage1 = run_training_loop(cfg, hooks);
    m = dpplstm_from_checkpoint(stage1.best_checkpoint);
  }

  // stage 2: all parameters on the DPP likelihood of the keyframe targets
  SgdConfig cfg2 = cfg;
  cfg2.learning_rate = cfg.learning_rate * opts.stage2_lr_factor;
  TrainReport stage2;
  {
    ParamPack pack = parameters(m);
    autodiff::SgdOptimizer opt(cfg2, pack.scalar_count());

    LoopHooks hooks;
    hooks.run_epoch = [&](std::mt19937_64& rng) {
      return sgd_epoch(rng, order, pack, opt, [&](int i, GradientBundle* g) {
        return dpplstm_nll_and_grad(m, *train[i].features, train[i].keyframes, g);
      });
    };
    hooks.validation_f = [&] {
      return mean_summary_f(
          val,
          [&](const ValVideo& v) {
            return dpplstm_summarize(m, *v.features, *v.seg, opts.budget_fraction);
          },
          opts.agg);
    };
    hooks.snapshot = [&] { return to_checkpoint(m); };

    stage2 = run_training_loop(cfg2, hooks);
  }

  TrainReport report;
  report.stage1_epochs = stage1.stopped_epoch;
  report.train_loss = stage1.train_loss;
  report.train_loss.insert(report.train_loss.end(), stage2.train_loss.begin(),
                           stage2.train_loss.end());
  report.val_f = stage1.val_f;
  report.val_f.insert(report.val_f.end(), stage2.val_f.begin(), stage2.val_f.end());
  report.stopped_epoch = stage1.stopped_epoch + stage2.stopped_epoch;
  if (stage2.best_val_f > stage1.best_val_f) {
    report.best_val_f = stage2.best_val_f;
    report.best_epoch = stage1.stopped_epoch + stage2.best_epoch;
    report.best_checkpoint = stage2.best_checkpoint;
  } else {
    report.best_val_f = stage1.best_val_f;
    report.best_epoch = stage1.best_epoch;
    report.best_checkpoint = stage1.best_checkpoint;
  }
  m = dpplstm_from_checkpoint(report.best_checkpoint);
  return report;
}

TrainReport dpplstm_single_train(DppLstmSingleModel& m, const std::vector<TrainVideo>& train,
                                 const std::vector<ValVideo>& val, const SgdConfig& cfg,
                                 const TrainOptions& opts) {
  check_train_inputs(train, val);
  for (const TrainVideo& v : train) {
    if (v.keyframes.empty()) throw ContractError("dpplstm_single_train: empty keyframe target");
    dpp::validate_subset(v.keyframes, v.features->rows);
  }

  ParamPack pack = parameters(m);
  autodiff::SgdOptimizer opt(cfg, pack.scalar_count());
  std::vector<int> order = index_order(train.size());

  LoopHooks hooks;
  hooks.run_epoch = [&](std::mt19937_64& rng) {
    return sgd_epoch(rng, order, pack, opt, [&](int i, GradientBundle* g) {
      return dpplstm_single_nll_and_grad(m, *train[i].features, train[i].keyframes, g);
    });
  };
  hooks.validation_f = [&] {
    return mean_summary_f(
        val,
        [&](const ValVideo& v) {
          return dpplstm_single_summarize(m, *v.features, *v.seg, opts.budget_fraction);
        },
        opts.agg);
  };
  hooks.snapshot = [&] { return to_checkpoint(m); };

  TrainReport report = run_training_loop(cfg, hooks);
  m = dpplstm_single_from_checkpoint(report.best_checkpoint);
  return report;
}

TrainReport baseline_train(MlpBaseline& m, const std::vector<TrainVideo>& train,
                           const std::vector<ValVideo>& val, const SgdConfig& cfg,
                           const TrainOptions& opts) {
  check_train_inputs(train, val);

  // precompute per-video inputs and targets once; they do not change
  struct Prepared {
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
  };
  std::vector<Prepared> prepared(train.size());
  for (size_t i = 0; i < train.size(); ++i) {
    const TrainVideo& v = train[i];
    check_regression_target(*v.features, v.curve);
    Prepared& p = prepared[i];
    if (m.variant == BaselineVariant::Shot) {
      if (!v.seg) throw ContractError("mlp-shot training requires a segmentation");
      for (int s = 0; s < v.seg->count(); ++s) {
        const temporal::Interval iv = v.seg->segment(s);
        p.inputs.push_back(segment_mean_feature(*v.features, iv));
        double mean = 0.0;
        for (int t = iv.start; t <= iv.end; ++t) mean += v.curve[t];
        p.targets.push_back(mean / iv.length());
      }
    } else {
      for (int t = 0; t < v.features->rows; ++t) {
        p.inputs.push_back(frame_window(*v.features, t, m.window_k));
        p.targets.push_back(v.curve[t]);
      }
    }
  }

  ParamPack pack = parameters(m);
  autodiff::SgdOptimizer opt(cfg, pack.scalar_count());
  std::vector<int> order = index_order(train.size());

  LoopHooks hooks;
  hooks.run_epoch = [&](std::mt19937_64& rng) {
    return sgd_epoch(rng, order, pack, opt, [&](int i, GradientBundle* g) {
      const Prepared& p = prepared[i];
      Tape tape;
      tape.reserve(p.inputs.size() * 8 + 16);
      Binder tb;
      tb.tape = &tape;
      const std::vector<BoundDense> net = bind_mlp(tb, "net", m.net);
      std::vector<Tape::Id> outs(p.inputs.size());
      for (size_t j = 0; j < p.inputs.size(); ++j)
        outs[j] = autodiff::mlp_nodes(tape, net,
                                      tape.constant(p.inputs[j], static_cast<int>(p.inputs[j].size())));
      const Tape::Id loss = tape.mse(tape.concat(outs), p.targets);
      tape.backward(loss);
      *g = tape.parameter_gradients();
      return tape.value(loss)[0];
    });
  };
  hooks.validation_f = [&] {
    return mean_summary_f(
        val,
        [&](const ValVideo& v) {
          return baseline_summarize(m, *v.features, *v.seg, opts.budget_fraction);
        },
        opts.agg);
  };
  hooks.snapshot = [&] { return to_checkpoint(m); };

  TrainReport report = run_training_loop(cfg, hooks);
  m = baseline_from_checkpoint(report.best_checkpoint);
  return report;
}

}  // namespace vsum::models
