#pragma once

#include <array>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vsum/linalg.hpp"

namespace vsum::autodiff {

enum class Activation { Sigmoid, Tanh, Linear };

// Arguments are clamped to [-30, 30] before exponentiation.
double sigmoid(double x);
double tanh_act(double x);

struct DenseLayerParams {
  linalg::Matrix weight;      // out x in
  std::vector<double> bias;   // out
  Activation activation = Activation::Sigmoid;

  int input_size() const { return weight.cols; }
  int output_size() const { return weight.rows; }
};

// One LSTM direction. Each gate matrix is hidden x (input + hidden + 1);
// the trailing column is the bias, fed by a constant 1.
struct LstmCellParams {
  linalg::Matrix w_i, w_f, w_o, w_c;

  int hidden_size() const { return w_i.rows; }
  int input_size() const { return w_i.cols - w_i.rows - 1; }
};

struct BiLstmParams {
  LstmCellParams forward_cell;
  LstmCellParams backward_cell;

  int hidden_size() const { return forward_cell.hidden_size(); }
  int input_size() const { return forward_cell.input_size(); }
};

struct SgdConfig {
  double learning_rate = 0.05;
  int epochs_max = 100;
  int patience_k = 5;
  double momentum = 0.9;
  double grad_clip = 5.0;
  std::uint64_t seed = 0;
};

void validate(const SgdConfig& cfg);

// ---------------------------------------------------------------------------
// plain (non-differentiable) forward evaluation

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

LstmState lstm_step(const LstmCellParams& cell, std::span<const double> x_t,
                    std::span<const double> h_prev, std::span<const double> c_prev);

// Row t of .first is the forward hidden state after consuming x_0..x_t; row t
// of .second the backward hidden state after consuming x_{T-1}..x_t. Both
// chains start from zero state and never interact.
std::pair<linalg::Matrix, linalg::Matrix> bilstm_forward(const BiLstmParams& params,
                                                         const linalg::FeatureSequence& x);

std::vector<double> mlp_forward(std::span<const DenseLayerParams> layers,
                                std::span<const double> input);

// ---------------------------------------------------------------------------
// seeded initialization (uniform in [-scale, scale])

inline constexpr double kDefaultInitScale = 0.05;

DenseLayerParams make_dense(int input, int output, Activation act, std::mt19937_64& rng,
                            double scale = kDefaultInitScale);
// Forget-gate bias starts at +1.
LstmCellParams make_lstm_cell(int input, int hidden, std::mt19937_64& rng,
                              double scale = kDefaultInitScale);
BiLstmParams make_bilstm(int input, int hidden, std::mt19937_64& rng,
                         double scale = kDefaultInitScale);

// ---------------------------------------------------------------------------
// flat parameter access

struct ParamSlot {
  std::string name;
  double* data = nullptr;
  int rows = 0;
  int cols = 0;
  std::size_t count() const { return static_cast<std::size_t>(rows) * cols; }
};

// Ordered view over every learnable scalar of a model. The registration
// order defines the layout of GradientBundle and the tape parameter order.
class ParamPack {
 public:
  void add(std::string name, linalg::Matrix& m);
  void add(std::string name, std::vector<double>& v);

  const std::vector<ParamSlot>& slots() const { return slots_; }
  std::size_t scalar_count() const { return total_; }

  double get(std::size_t flat_index) const;
  void set(std::size_t flat_index, double v);
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  std::string locate(std::size_t flat_index) const;

 private:
  std::vector<ParamSlot> slots_;
  std::size_t total_ = 0;
};

// One partial derivative per learnable scalar, in ParamPack order.
struct GradientBundle {
  std::vector<double> partials;
};

// ---------------------------------------------------------------------------
// reverse-mode tape over vector-valued nodes

class Tape {
 public:
  using Id = int;
  using CustomBackward = std::function<void(Tape&, Id self, const std::vector<Id>& parents)>;

  void reserve(std::size_t nodes) { nodes_.reserve(nodes); }

  Id constant(std::span<const double> v, int rows, int cols = 1);
  Id parameter(std::span<const double> v, int rows, int cols);

  Id affine1(Id w, Id x);            // w: m x (n+1) with bias column, x: n -> m
  Id affine(Id w, Id b, Id x);       // w: m x n, b: m, x: n -> m
  Id sigmoid(Id x);
  Id tanh_act(Id x);
  Id hadamard(Id a, Id b);
  Id add(Id a, Id b);
  Id sum(Id a);             // scalar sum of all components
  Id scale(Id a, double c);
  Id concat(std::span<const Id> parts);
  Id mse(Id pred, std::span<const double> targets);  // mean squared error, scalar
  Id custom(std::vector<Id> parents, std::vector<double> value, int rows, int cols,
            CustomBackward back);

  void backward(Id loss);  // loss must be a scalar node

  std::span<const double> value(Id id) const;
  std::span<const double> grad(Id id) const;
  std::span<double> grad_mut(Id id);
  int rows(Id id) const;
  int cols(Id id) const;

  // Gradients of all parameter nodes, concatenated in registration order.
  GradientBundle parameter_gradients() const;
  std::size_t parameter_scalars() const;

 private:
  enum class Op {
    Constant,
    Parameter,
    Affine1,
    AffineWB,
    Sigmoid,
    Tanh,
    Hadamard,
    Add,
    Sum,
    Scale,
    Concat,
    Mse,
    Custom
  };

  struct Node {
    Op op;
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    std::array<Id, 3> parent{-1, -1, -1};
    std::vector<Id> parent_list;   // Concat / Custom
    std::vector<double> aux;       // Mse targets
    double factor = 1.0;           // Scale
    CustomBackward custom_back;
  };

  Id push(Node n);
  void backprop_node(Id id);

  std::vector<Node> nodes_;
  std::vector<Id> params_;
};

// Binds every pack slot as a tape parameter, in pack order.
std::vector<Tape::Id> bind_parameters(Tape& tape, const ParamPack& pack);

// tape-level model blocks
struct BoundLstmCell {
  Tape::Id w_i, w_f, w_o, w_c;
};
struct BoundDense {
  Tape::Id weight, bias;
  Activation activation;
};

std::pair<Tape::Id, Tape::Id> lstm_step_node(Tape& t, const BoundLstmCell& cell, Tape::Id x,
                                             Tape::Id h_prev, Tape::Id c_prev);

struct BiLstmNodes {
  std::vector<Tape::Id> inputs;  // the frame constants, one per frame
  std::vector<Tape::Id> h_fwd;
  std::vector<Tape::Id> h_bwd;
};
BiLstmNodes bilstm_nodes(Tape& t, const BoundLstmCell& fwd, const BoundLstmCell& bwd,
                         const linalg::FeatureSequence& x);

Tape::Id mlp_nodes(Tape& t, std::span<const BoundDense> layers, Tape::Id input);

// ---------------------------------------------------------------------------
// SGD with momentum and global-norm gradient clipping

class SgdOptimizer {
 public:
  SgdOptimizer(SgdConfig cfg, std::size_t scalar_count);
  void step(ParamPack& params, const GradientBundle& grads);
  const SgdConfig& config() const { return cfg_; }

 private:
  SgdConfig cfg_;
  std::vector<double> velocity_;
};

// ---------------------------------------------------------------------------
// finite-difference gradient checking

struct GradCheckReport {
  bool pass = true;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences on every scalar of the pack. An entry passes when the
// relative error is below rel_tol, or the absolute difference is below
// abs_tol for analytic values smaller than 1e-6.
GradCheckReport check_gradients(const std::function<double()>& loss, ParamPack& params,
                                std::span<const double> analytic, double step = 1e-5,
                                double rel_tol = 1e-4, double abs_tol = 1e-7);

}  // namespace vsum::autodiff
