#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "koop/rng.hpp"

namespace koop::net {

enum class Activation { identity, relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::identity;
};

/// Dense feed-forward net; batches are matrices with one sample per column.
struct Mlp {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }
  long long param_count() const;

  /// dims = {in, hidden..., out}; hidden layers get `hidden`, last gets
  /// `output`. Weights uniform in +-sqrt(6/(n_in+n_out)), biases zero.
  static Mlp make(const std::vector<int>& dims, Activation hidden, Activation output, Rng& rng);
};

/// Cached activations for one batch; activations[0] is the input.
struct GradTape {
  std::vector<Eigen::MatrixXd> activations;
  bool empty() const { return activations.empty(); }
  int batch() const { return activations.empty() ? 0 : static_cast<int>(activations[0].cols()); }
};

Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& batch, GradTape* tape = nullptr);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  static MlpGrads zeros_like(const Mlp& mlp);
};

/// Exact reverse-mode gradients of the layer chain. Accumulates parameter
/// gradients into `grads` and returns the gradient w.r.t. the input batch.
Eigen::MatrixXd backward(const Mlp& mlp, const GradTape& tape, const Eigen::MatrixXd& output_grad,
                         MlpGrads& grads);

/// Adam. Operates on a flat parameter vector so multiple nets can share one
/// optimizer instance.
struct OptimizerState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState make(Eigen::Index n_params, double lr);
};

/// Bias-corrected adaptive-moment update. A non-finite gradient skips the
/// update and returns false.
bool opt_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimizerState& state);

/// Flatten helpers shared by the trainers and checkpoints. Order: for each
/// net, for each layer, W row-major then b.
Eigen::VectorXd flatten_params(const std::vector<const Mlp*>& nets);
void unflatten_params(const Eigen::VectorXd& flat, const std::vector<Mlp*>& nets);
Eigen::VectorXd flatten_grads(const std::vector<const MlpGrads*>& grads, const std::vector<const Mlp*>& nets);

}  // namespace koop::net
