#include "koop/net.hpp"

#include <cmath>
#include <stdexcept>

namespace koop::net {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

long long Mlp::param_count() const {
  long long n = 0;
  for (const auto& l : layers) n += (l.W.cols() + 1) * l.W.rows();
  return n;
}

Mlp Mlp::make(const std::vector<int>& dims, Activation hidden, Activation output, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp::make: need at least input and output dims");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer l;
    const int nin = dims[i];
    const int nout = dims[i + 1];
    if (nin < 1 || nout < 1) throw std::invalid_argument("Mlp::make: dims must be positive");
    const double bound = std::sqrt(6.0 / (nin + nout));
    l.W.resize(nout, nin);
    for (int r = 0; r < nout; ++r)
      for (int c = 0; c < nin; ++c) l.W(r, c) = rng.uniform(-bound, bound);
    l.b = Eigen::VectorXd::Zero(nout);
    l.act = (i + 2 == dims.size()) ? output : hidden;
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

namespace {

void apply_activation(Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::identity: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
  }
}

// Derivative expressed through the activation output (relu and tanh allow it).
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& a, Activation act) {
  switch (act) {
    case Activation::identity: return Eigen::MatrixXd::Ones(a.rows(), a.cols());
    case Activation::relu: return (a.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - a.array().square()).matrix();
  }
  return Eigen::MatrixXd::Ones(a.rows(), a.cols());
}

}  // namespace

Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& batch, GradTape* tape) {
  if (batch.rows() != mlp.input_dim())
    throw std::invalid_argument("forward: batch has " + std::to_string(batch.rows()) +
                                " rows, expected " + std::to_string(mlp.input_dim()));
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(batch);
  }
  Eigen::MatrixXd a = batch;
  for (const auto& l : mlp.layers) {
    Eigen::MatrixXd z = (l.W * a).colwise() + l.b;
    apply_activation(z, l.act);
    a = std::move(z);
    if (tape) tape->activations.push_back(a);
  }
  return a;
}

MlpGrads MlpGrads::zeros_like(const Mlp& mlp) {
  MlpGrads g;
  for (const auto& l : mlp.layers) {
    g.dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    g.db.push_back(Eigen::VectorXd::Zero(l.b.size()));
  }
  return g;
}

Eigen::MatrixXd backward(const Mlp& mlp, const GradTape& tape, const Eigen::MatrixXd& output_grad,
                         MlpGrads& grads) {
  const std::size_t L = mlp.layers.size();
  if (tape.activations.size() != L + 1)
    throw std::invalid_argument("backward: tape does not match net depth");
  if (output_grad.rows() != mlp.output_dim() || output_grad.cols() != tape.batch())
    throw std::invalid_argument("backward: output_grad shape mismatch (stale tape?)");

  Eigen::MatrixXd delta = output_grad;
  for (std::size_t li = L; li-- > 0;) {
    const Layer& l = mlp.layers[li];
    const Eigen::MatrixXd& a_out = tape.activations[li + 1];
    const Eigen::MatrixXd& a_in = tape.activations[li];
    delta = delta.cwiseProduct(activation_grad(a_out, l.act));
    grads.dW[li].noalias() += delta * a_in.transpose();
    grads.db[li] += delta.rowwise().sum();
    delta = (l.W.transpose() * delta).eval();
  }
  return delta;  // gradient w.r.t. the input batch
}

OptimizerState OptimizerState::make(Eigen::Index n_params, double lr) {
  OptimizerState s;
  s.m = Eigen::VectorXd::Zero(n_params);
  s.v = Eigen::VectorXd::Zero(n_params);
  s.lr = lr;
  return s;
}

bool opt_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("opt_step: shape mismatch");
  if (!grads.allFinite()) return false;
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -=
      state.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
  return true;
}

Eigen::VectorXd flatten_params(const std::vector<const Mlp*>& nets) {
  long long total = 0;
  for (const Mlp* n : nets) total += n->param_count();
  Eigen::VectorXd flat(total);
  Eigen::Index off = 0;
  for (const Mlp* n : nets) {
    for (const auto& l : n->layers) {
      for (Eigen::Index r = 0; r < l.W.rows(); ++r)
        for (Eigen::Index c = 0; c < l.W.cols(); ++c) flat[off++] = l.W(r, c);
      for (Eigen::Index i = 0; i < l.b.size(); ++i) flat[off++] = l.b[i];
    }
  }
  return flat;
}

void unflatten_params(const Eigen::VectorXd& flat, const std::vector<Mlp*>& nets) {
  Eigen::Index off = 0;
  for (Mlp* n : nets) {
    for (auto& l : n->layers) {
      for (Eigen::Index r = 0; r < l.W.rows(); ++r)
        for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = flat[off++];
      for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = flat[off++];
    }
  }
  if (off != flat.size()) throw std::invalid_argument("unflatten_params: size mismatch");
}

Eigen::VectorXd flatten_grads(const std::vector<const MlpGrads*>& grads, const std::vector<const Mlp*>& nets) {
  long long total = 0;
  for (const Mlp* n : nets) total += n->param_count();
  Eigen::VectorXd flat(total);
  Eigen::Index off = 0;
  for (std::size_t ni = 0; ni < nets.size(); ++ni) {
    const MlpGrads& g = *grads[ni];
    for (std::size_t li = 0; li < nets[ni]->layers.size(); ++li) {
      const auto& dW = g.dW[li];
      for (Eigen::Index r = 0; r < dW.rows(); ++r)
        for (Eigen::Index c = 0; c < dW.cols(); ++c) flat[off++] = dW(r, c);
      for (Eigen::Index i = 0; i < g.db[li].size(); ++i) flat[off++] = g.db[li][i];
    }
  }
  return flat;
}

}  // namespace koop::net
