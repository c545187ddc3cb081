#include "vsum/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace vsum::autodiff {

double sigmoid(double x) {
  x = std::clamp(x, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-x));
}

double tanh_act(double x) { return std::tanh(std::clamp(x, -30.0, 30.0)); }

void validate(const SgdConfig& cfg) {
  if (!(cfg.learning_rate > 0)) throw ContractError("sgd: learning_rate must be positive");
  if (cfg.epochs_max < 1) throw ContractError("sgd: epochs_max must be >= 1");
  if (cfg.patience_k < 1) throw ContractError("sgd: patience_k must be >= 1");
  if (cfg.momentum < 0 || cfg.momentum >= 1) throw ContractError("sgd: momentum must be in [0,1)");
  if (!(cfg.grad_clip > 0)) throw ContractError("sgd: grad_clip must be positive");
}

// ---------------------------------------------------------------------------
// plain forward

namespace {

void check_cell(const LstmCellParams& cell) {
  if (!cell.w_i.same_shape(cell.w_f) || !cell.w_i.same_shape(cell.w_o) ||
      !cell.w_i.same_shape(cell.w_c))
    throw ShapeError("lstm: gate matrices must share one shape");
  if (cell.w_i.cols != cell.input_size() + cell.hidden_size() + 1)
    throw ShapeError("lstm: gate matrix columns must equal input + hidden + 1");
}

// W * [x; h; 1]
void gate_preact(const linalg::Matrix& w, std::span<const double> x, std::span<const double> h,
                 std::span<double> out) {
  const int n_x = static_cast<int>(x.size());
  const int n_h = static_cast<int>(h.size());
  for (int r = 0; r < w.rows; ++r) {
    const double* row = w.data.data() + static_cast<size_t>(r) * w.cols;
    double acc = row[n_x + n_h];  // bias column
    for (int c = 0; c < n_x; ++c) acc += row[c] * x[c];
    for (int c = 0; c < n_h; ++c) acc += row[n_x + c] * h[c];
    out[r] = acc;
  }
}

}  // namespace

LstmState lstm_step(const LstmCellParams& cell, std::span<const double> x_t,
                    std::span<const double> h_prev, std::span<const double> c_prev) {
  check_cell(cell);
  const int hidden = cell.hidden_size();
  if (static_cast<int>(x_t.size()) != cell.input_size())
    throw ShapeError("lstm_step: input length mismatch");
  if (static_cast<int>(h_prev.size()) != hidden || static_cast<int>(c_prev.size()) != hidden)
    throw ShapeError("lstm_step: state length mismatch");

  std::vector<double> i(hidden), f(hidden), o(hidden), g(hidden);
  gate_preact(cell.w_i, x_t, h_prev, i);
  gate_preact(cell.w_f, x_t, h_prev, f);
  gate_preact(cell.w_o, x_t, h_prev, o);
  gate_preact(cell.w_c, x_t, h_prev, g);

  LstmState s;
  s.h.resize(hidden);
  s.c.resize(hidden);
  for (int k = 0; k < hidden; ++k) {
    const double ik = sigmoid(i[k]);
    const double fk = sigmoid(f[k]);
    const double ok = sigmoid(o[k]);
    const double gk = tanh_act(g[k]);
    s.c[k] = ik * gk + fk * c_prev[k];
    s.h[k] = ok * tanh_act(s.c[k]);
  }
  return s;
}

std::pair<linalg::Matrix, linalg::Matrix> bilstm_forward(const BiLstmParams& params,
                                                         const linalg::FeatureSequence& x) {
  if (x.rows == 0) throw ContractError("bilstm_forward: empty sequence");
  if (params.forward_cell.hidden_size() != params.backward_cell.hidden_size())
    throw ShapeError("bilstm_forward: cells disagree on hidden size");
  if (x.cols != params.input_size()) throw ShapeError("bilstm_forward: feature dim mismatch");

  const int T = x.rows;
  const int hidden = params.hidden_size();
  linalg::Matrix h_fwd(T, hidden), h_bwd(T, hidden);

  std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
  for (int t = 0; t < T; ++t) {
    LstmState s = lstm_step(params.forward_cell, x.row(t), h, c);
    std::copy(s.h.begin(), s.h.end(), h_fwd.row(t).begin());
    h = std::move(s.h);
    c = std::move(s.c);
  }
  std::fill(h.begin(), h.end(), 0.0);
  std::fill(c.begin(), c.end(), 0.0);
  for (int t = T - 1; t >= 0; --t) {
    LstmState s = lstm_step(params.backward_cell, x.row(t), h, c);
    std::copy(s.h.begin(), s.h.end(), h_bwd.row(t).begin());
    h = std::move(s.h);
    c = std::move(s.c);
  }
  return {std::move(h_fwd), std::move(h_bwd)};
}

std::vector<double> mlp_forward(std::span<const DenseLayerParams> layers,
                                std::span<const double> input) {
  std::vector<double> current(input.begin(), input.end());
  for (const DenseLayerParams& layer : layers) {
    if (layer.weight.cols != static_cast<int>(current.size()))
      throw ShapeError("mlp_forward: layer input size mismatch");
    if (layer.weight.rows != static_cast<int>(layer.bias.size()))
      throw ShapeError("mlp_forward: bias length mismatch");
    std::vector<double> next = linalg::matvec(layer.weight, current);
    for (int r = 0; r < layer.output_size(); ++r) {
      next[r] += layer.bias[r];
      switch (layer.activation) {
        case Activation::Sigmoid: next[r] = sigmoid(next[r]); break;
        case Activation::Tanh: next[r] = tanh_act(next[r]); break;
        case Activation::Linear: break;
      }
    }
    current = std::move(next);
  }
  return current;
}

// ---------------------------------------------------------------------------
// initialization

namespace {

void fill_uniform(std::vector<double>& data, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : data) v = dist(rng);
}

}  // namespace

DenseLayerParams make_dense(int input, int output, Activation act, std::mt19937_64& rng,
                            double scale) {
  DenseLayerParams layer;
  layer.weight = linalg::Matrix(output, input);
  layer.bias.assign(output, 0.0);
  layer.activation = act;
  fill_uniform(layer.weight.data, rng, scale);
  fill_uniform(layer.bias, rng, scale);
  return layer;
}

LstmCellParams make_lstm_cell(int input, int hidden, std::mt19937_64& rng, double scale) {
  LstmCellParams cell;
  const int cols = input + hidden + 1;
  for (linalg::Matrix* m : {&cell.w_i, &cell.w_f, &cell.w_o, &cell.w_c}) {
    *m = linalg::Matrix(hidden, cols);
    fill_uniform(m->data, rng, scale);
  }
  for (int r = 0; r < hidden; ++r) cell.w_f.at(r, cols - 1) = 1.0;  // open forget gates
  return cell;
}

BiLstmParams make_bilstm(int input, int hidden, std::mt19937_64& rng, double scale) {
  BiLstmParams p;
  p.forward_cell = make_lstm_cell(input, hidden, rng, scale);
  p.backward_cell = make_lstm_cell(input, hidden, rng, scale);
  return p;
}

// ---------------------------------------------------------------------------
// ParamPack

void ParamPack::add(std::string name, linalg::Matrix& m) {
  slots_.push_back({std::move(name), m.data.data(), m.rows, m.cols});
  total_ += m.data.size();
}

void ParamPack::add(std::string name, std::vector<double>& v) {
  slots_.push_back({std::move(name), v.data(), static_cast<int>(v.size()), 1});
  total_ += v.size();
}

double ParamPack::get(std::size_t flat_index) const {
  for (const ParamSlot& s : slots_) {
    if (flat_index < s.count()) return s.data[flat_index];
    flat_index -= s.count();
  }
  throw ContractError("ParamPack: flat index out of range");
}

void ParamPack::set(std::size_t flat_index, double v) {
  for (const ParamSlot& s : slots_) {
    if (flat_index < s.count()) {
      s.data[flat_index] = v;
      return;
    }
    flat_index -= s.count();
  }
  throw ContractError("ParamPack: flat index out of range");
}

std::vector<double> ParamPack::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_);
  for (const ParamSlot& s : slots_) flat.insert(flat.end(), s.data, s.data + s.count());
  return flat;
}

void ParamPack::assign(std::span<const double> flat) {
  if (flat.size() != total_) throw ShapeError("ParamPack: flat size mismatch");
  size_t off = 0;
  for (const ParamSlot& s : slots_) {
    std::copy(flat.begin() + off, flat.begin() + off + s.count(), s.data);
    off += s.count();
  }
}

std::string ParamPack::locate(std::size_t flat_index) const {
  for (const ParamSlot& s : slots_) {
    if (flat_index < s.count()) return s.name + "[" + std::to_string(flat_index) + "]";
    flat_index -= s.count();
  }
  return "<out of range>";
}

// ---------------------------------------------------------------------------
// Tape

Tape::Id Tape::push(Node n) {
  n.grad.assign(n.value.size(), 0.0);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::constant(std::span<const double> v, int rows, int cols) {
  if (static_cast<size_t>(rows) * cols != v.size()) throw ShapeError("tape: constant shape mismatch");
  Node n;
  n.op = Op::Constant;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(v.begin(), v.end());
  return push(std::move(n));
}

Tape::Id Tape::parameter(std::span<const double> v, int rows, int cols) {
  if (static_cast<size_t>(rows) * cols != v.size())
    throw ShapeError("tape: parameter shape mismatch");
  Node n;
  n.op = Op::Parameter;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(v.begin(), v.end());
  const Id id = push(std::move(n));
  params_.push_back(id);
  return id;
}

Tape::Id Tape::affine1(Id w, Id x) {
  const Node& wn = nodes_[w];
  const Node& xn = nodes_[x];
  if (wn.cols != xn.rows + 1 || xn.cols != 1) throw ShapeError("tape: affine1 shape mismatch");
  Node n;
  n.op = Op::Affine1;
  n.rows = wn.rows;
  n.cols = 1;
  n.parent = {w, x, -1};
  n.value.resize(wn.rows);
  for (int r = 0; r < wn.rows; ++r) {
    const double* row = wn.value.data() + static_cast<size_t>(r) * wn.cols;
    double acc = row[xn.rows];
    for (int c = 0; c < xn.rows; ++c) acc += row[c] * xn.value[c];
    n.value[r] = acc;
  }
  return push(std::move(n));
}

Tape::Id Tape::affine(Id w, Id b, Id x) {
  const Node& wn = nodes_[w];
  const Node& bn = nodes_[b];
  const Node& xn = nodes_[x];
  if (wn.cols != xn.rows || xn.cols != 1 || bn.rows != wn.rows || bn.cols != 1)
    throw ShapeError("tape: affine shape mismatch");
  Node n;
  n.op = Op::AffineWB;
  n.rows = wn.rows;
  n.cols = 1;
  n.parent = {w, b, x};
  n.value.resize(wn.rows);
  for (int r = 0; r < wn.rows; ++r) {
    const double* row = wn.value.data() + static_cast<size_t>(r) * wn.cols;
    double acc = bn.value[r];
    for (int c = 0; c < wn.cols; ++c) acc += row[c] * xn.value[c];
    n.value[r] = acc;
  }
  return push(std::move(n));
}

Tape::Id Tape::sigmoid(Id x) {
  Node n;
  n.op = Op::Sigmoid;
  n.rows = nodes_[x].rows;
  n.cols = nodes_[x].cols;
  n.parent = {x, -1, -1};
  n.value.resize(nodes_[x].value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = autodiff::sigmoid(nodes_[x].value[i]);
  return push(std::move(n));
}

Tape::Id Tape::tanh_act(Id x) {
  Node n;
  n.op = Op::Tanh;
  n.rows = nodes_[x].rows;
  n.cols = nodes_[x].cols;
  n.parent = {x, -1, -1};
  n.value.resize(nodes_[x].value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = autodiff::tanh_act(nodes_[x].value[i]);
  return push(std::move(n));
}

Tape::Id Tape::hadamard(Id a, Id b) {
  if (nodes_[a].value.size() != nodes_[b].value.size())
    throw ShapeError("tape: hadamard size mismatch");
  Node n;
  n.op = Op::Hadamard;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.parent = {a, b, -1};
  n.value.resize(nodes_[a].value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = nodes_[a].value[i] * nodes_[b].value[i];
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  if (nodes_[a].value.size() != nodes_[b].value.size()) throw ShapeError("tape: add size mismatch");
  Node n;
  n.op = Op::Add;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.parent = {a, b, -1};
  n.value.resize(nodes_[a].value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = nodes_[a].value[i] + nodes_[b].value[i];
  return push(std::move(n));
}

Tape::Id Tape::sum(Id a) {
  Node n;
  n.op = Op::Sum;
  n.rows = 1;
  n.cols = 1;
  n.parent = {a, -1, -1};
  double acc = 0.0;
  for (double v : nodes_[a].value) acc += v;
  n.value = {acc};
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double c) {
  Node n;
  n.op = Op::Scale;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.parent = {a, -1, -1};
  n.factor = c;
  n.value.resize(nodes_[a].value.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = c * nodes_[a].value[i];
  return push(std::move(n));
}

Tape::Id Tape::concat(std::span<const Id> parts) {
  Node n;
  n.op = Op::Concat;
  n.cols = 1;
  n.parent_list.assign(parts.begin(), parts.end());
  for (Id p : parts) {
    n.value.insert(n.value.end(), nodes_[p].value.begin(), nodes_[p].value.end());
  }
  n.rows = static_cast<int>(n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::mse(Id pred, std::span<const double> targets) {
  if (nodes_[pred].value.size() != targets.size()) throw ShapeError("tape: mse size mismatch");
  if (targets.empty()) throw ContractError("tape: mse over empty prediction");
  Node n;
  n.op = Op::Mse;
  n.rows = 1;
  n.cols = 1;
  n.parent = {pred, -1, -1};
  n.aux.assign(targets.begin(), targets.end());
  double acc = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) {
    const double d = nodes_[pred].value[i] - targets[i];
    acc += d * d;
  }
  n.value = {acc / static_cast<double>(targets.size())};
  return push(std::move(n));
}

Tape::Id Tape::custom(std::vector<Id> parents, std::vector<double> value, int rows, int cols,
                      CustomBackward back) {
  if (static_cast<size_t>(rows) * cols != value.size())
    throw ShapeError("tape: custom shape mismatch");
  Node n;
  n.op = Op::Custom;
  n.rows = rows;
  n.cols = cols;
  n.parent_list = std::move(parents);
  n.value = std::move(value);
  n.custom_back = std::move(back);
  return push(std::move(n));
}

void Tape::backprop_node(Id id) {
  Node& n = nodes_[id];
  switch (n.op) {
    case Op::Constant:
    case Op::Parameter:
      break;
    case Op::Affine1: {
      Node& wn = nodes_[n.parent[0]];
      Node& xn = nodes_[n.parent[1]];
      const int in = xn.rows;
      for (int r = 0; r < n.rows; ++r) {
        const double g = n.grad[r];
        if (g == 0.0) continue;
        double* wgrow = wn.grad.data() + static_cast<size_t>(r) * wn.cols;
        const double* wrow = wn.value.data() + static_cast<size_t>(r) * wn.cols;
        for (int c = 0; c < in; ++c) {
          wgrow[c] += g * xn.value[c];
          xn.grad[c] += g * wrow[c];
        }
        wgrow[in] += g;
      }
      break;
    }
    case Op::AffineWB: {
      Node& wn = nodes_[n.parent[0]];
      Node& bn = nodes_[n.parent[1]];
      Node& xn = nodes_[n.parent[2]];
      for (int r = 0; r < n.rows; ++r) {
        const double g = n.grad[r];
        if (g == 0.0) continue;
        bn.grad[r] += g;
        double* wgrow = wn.grad.data() + static_cast<size_t>(r) * wn.cols;
        const double* wrow = wn.value.data() + static_cast<size_t>(r) * wn.cols;
        for (int c = 0; c < wn.cols; ++c) {
          wgrow[c] += g * xn.value[c];
          xn.grad[c] += g * wrow[c];
        }
      }
      break;
    }
    case Op::Sigmoid: {
      Node& xn = nodes_[n.parent[0]];
      for (size_t i = 0; i < n.value.size(); ++i)
        xn.grad[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case Op::Tanh: {
      Node& xn = nodes_[n.parent[0]];
      for (size_t i = 0; i < n.value.size(); ++i)
        xn.grad[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case Op::Hadamard: {
      Node& an = nodes_[n.parent[0]];
      Node& bn = nodes_[n.parent[1]];
      for (size_t i = 0; i < n.value.size(); ++i) {
        an.grad[i] += n.grad[i] * bn.value[i];
        bn.grad[i] += n.grad[i] * an.value[i];
      }
      break;
    }
    case Op::Add: {
      Node& an = nodes_[n.parent[0]];
      Node& bn = nodes_[n.parent[1]];
      for (size_t i = 0; i < n.value.size(); ++i) {
        an.grad[i] += n.grad[i];
        bn.grad[i] += n.grad[i];
      }
      break;
    }
    case Op::Sum: {
      Node& an = nodes_[n.parent[0]];
      for (size_t i = 0; i < an.value.size(); ++i) an.grad[i] += n.grad[0];
      break;
    }
    case Op::Scale: {
      Node& an = nodes_[n.parent[0]];
      for (size_t i = 0; i < an.value.size(); ++i) an.grad[i] += n.factor * n.grad[i];
      break;
    }
    case Op::Concat: {
      size_t off = 0;
      for (Id p : n.parent_list) {
        Node& pn = nodes_[p];
        for (size_t i = 0; i < pn.value.size(); ++i) pn.grad[i] += n.grad[off + i];
        off += pn.value.size();
      }
      break;
    }
    case Op::Mse: {
      Node& pn = nodes_[n.parent[0]];
      const double g = n.grad[0];
      const double scale = 2.0 / static_cast<double>(n.aux.size());
      for (size_t i = 0; i < n.aux.size(); ++i)
        pn.grad[i] += g * scale * (pn.value[i] - n.aux[i]);
      break;
    }
    case Op::Custom:
      n.custom_back(*this, id, n.parent_list);
      break;
  }
}

void Tape::backward(Id loss) {
  if (nodes_[loss].value.size() != 1) throw ContractError("tape: backward needs a scalar loss");
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  nodes_[loss].grad[0] = 1.0;
  for (Id id = loss; id >= 0; --id) backprop_node(id);
}

std::span<const double> Tape::value(Id id) const { return nodes_[id].value; }
std::span<const double> Tape::grad(Id id) const { return nodes_[id].grad; }
std::span<double> Tape::grad_mut(Id id) { return nodes_[id].grad; }
int Tape::rows(Id id) const { return nodes_[id].rows; }
int Tape::cols(Id id) const { return nodes_[id].cols; }

GradientBundle Tape::parameter_gradients() const {
  GradientBundle bundle;
  bundle.partials.reserve(parameter_scalars());
  for (Id id : params_) {
    const Node& n = nodes_[id];
    bundle.partials.insert(bundle.partials.end(), n.grad.begin(), n.grad.end());
  }
  return bundle;
}

std::size_t Tape::parameter_scalars() const {
  std::size_t total = 0;
  for (Id id : params_) total += nodes_[id].value.size();
  return total;
}

std::vector<Tape::Id> bind_parameters(Tape& tape, const ParamPack& pack) {
  std::vector<Tape::Id> ids;
  ids.reserve(pack.slots().size());
  for (const ParamSlot& s : pack.slots())
    ids.push_back(tape.parameter({s.data, s.count()}, s.rows, s.cols));
  return ids;
}

std::pair<Tape::Id, Tape::Id> lstm_step_node(Tape& t, const BoundLstmCell& cell, Tape::Id x,
                                             Tape::Id h_prev, Tape::Id c_prev) {
  const std::array<Tape::Id, 2> xh_parts{x, h_prev};
  const Tape::Id xh = t.concat(xh_parts);
  const Tape::Id i = t.sigmoid(t.affine1(cell.w_i, xh));
  const Tape::Id f = t.sigmoid(t.affine1(cell.w_f, xh));
  const Tape::Id o = t.sigmoid(t.affine1(cell.w_o, xh));
  const Tape::Id g = t.tanh_act(t.affine1(cell.w_c, xh));
  const Tape::Id c = t.add(t.hadamard(i, g), t.hadamard(f, c_prev));
  const Tape::Id h = t.hadamard(o, t.tanh_act(c));
  return {h, c};
}

BiLstmNodes bilstm_nodes(Tape& t, const BoundLstmCell& fwd, const BoundLstmCell& bwd,
                         const linalg::FeatureSequence& x) {
  if (x.rows == 0) throw ContractError("bilstm_nodes: empty sequence");
  const int T = x.rows;
  const int hidden = t.rows(fwd.w_i);
  const std::vector<double> zeros(hidden, 0.0);

  BiLstmNodes out;
  out.inputs.resize(T);
  out.h_fwd.resize(T);
  out.h_bwd.resize(T);
  for (int s = 0; s < T; ++s) out.inputs[s] = t.constant(x.row(s), x.cols);

  Tape::Id h = t.constant(zeros, hidden);
  Tape::Id c = t.constant(zeros, hidden);
  for (int s = 0; s < T; ++s) {
    std::tie(h, c) = lstm_step_node(t, fwd, out.inputs[s], h, c);
    out.h_fwd[s] = h;
  }
  h = t.constant(zeros, hidden);
  c = t.constant(zeros, hidden);
  for (int s = T - 1; s >= 0; --s) {
    std::tie(h, c) = lstm_step_node(t, bwd, out.inputs[s], h, c);
    out.h_bwd[s] = h;
  }
  return out;
}

Tape::Id mlp_nodes(Tape& t, std::span<const BoundDense> layers, Tape::Id input) {
  Tape::Id current = input;
  for (const BoundDense& layer : layers) {
    current = t.affine(layer.weight, layer.bias, current);
    switch (layer.activation) {
      case Activation::Sigmoid: current = t.sigmoid(current); break;
      case Activation::Tanh: current = t.tanh_act(current); break;
      case Activation::Linear: break;
    }
  }
  return current;
}

// ---------------------------------------------------------------------------
// SGD

SgdOptimizer::SgdOptimizer(SgdConfig cfg, std::size_t scalar_count)
    : cfg_(cfg), velocity_(scalar_count, 0.0) {
  validate(cfg_);
}

void SgdOptimizer::step(ParamPack& params, const GradientBundle& grads) {
  if (grads.partials.size() != velocity_.size() || params.scalar_count() != velocity_.size())
    throw ShapeError("sgd: gradient bundle does not match parameter count");

  double norm2 = 0.0;
  for (size_t i = 0; i < grads.partials.size(); ++i) {
    const double g = grads.partials[i];
    if (!std::isfinite(g))
      throw NumericError("sgd: non-finite gradient at " + params.locate(i));
    norm2 += g * g;
  }
  const double norm = std::sqrt(norm2);
  const double scale = norm > cfg_.grad_clip ? cfg_.grad_clip / norm : 1.0;

  size_t flat = 0;
  for (const ParamSlot& s : params.slots()) {
    for (size_t i = 0; i < s.count(); ++i, ++flat) {
      velocity_[flat] = cfg_.momentum * velocity_[flat] + scale * grads.partials[flat];
      s.data[i] -= cfg_.learning_rate * velocity_[flat];
    }
  }
}

// ---------------------------------------------------------------------------
// gradient checking

GradCheckReport check_gradients(const std::function<double()>& loss, ParamPack& params,
                                std::span<const double> analytic, double step, double rel_tol,
                                double abs_tol) {
  if (analytic.size() != params.scalar_count())
    throw ShapeError("check_gradients: bundle size mismatch");
  GradCheckReport report;
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double saved = params.get(i);
    params.set(i, saved + step);
    const double f_plus = loss();
    params.set(i, saved - step);
    const double f_minus = loss();
    params.set(i, saved);

    const double numeric = (f_plus - f_minus) / (2.0 * step);
    const double a = analytic[i];
    const double denom = std::max(std::abs(a), std::abs(numeric));
    const double rel = denom > 0 ? std::abs(a - numeric) / denom : 0.0;
    const bool ok = rel < rel_tol || (std::abs(a) < 1e-6 && std::abs(a - numeric) < abs_tol);
    if (!ok) report.pass = false;
    if (rel > report.max_rel_err && !(std::abs(a) < 1e-6 && std::abs(a - numeric) < abs_tol)) {
      report.max_rel_err = rel;
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace vsum::autodiff
