#include "latent_training.hpp"

#include <cmath>
#include <iostream>

#include "koop/rng.hpp"

namespace koop::training {

Eigen::MatrixXd DKNCore::aux_features(const Eigen::MatrixXd& y) const {
  if (mode_ == dkn::AuxInput::full) return y;
  // Per-pair power |y_pair|^2: radially symmetric and smooth at the origin.
  Eigen::MatrixXd rho(n_pairs_, y.cols());
  for (int k = 0; k < n_pairs_; ++k)
    rho.row(k) = y.row(2 * k).array().square() + y.row(2 * k + 1).array().square();
  return rho;
}

Eigen::MatrixXd DKNCore::eigenvalues(const Eigen::MatrixXd& y) const {
  return net::forward(aux_, aux_features(y), nullptr);
}

Eigen::MatrixXd DKNCore::step(const Eigen::MatrixXd& y, CoreTape* tape) const {
  const Eigen::MatrixXd feats = aux_features(y);
  Eigen::MatrixXd eig = net::forward(aux_, feats, tape ? &tape->net_tape : nullptr);
  Eigen::MatrixXd out(y.rows(), y.cols());
  for (int k = 0; k < n_pairs_; ++k) {
    const auto mu = eig.row(2 * k).array();
    const auto om = eig.row(2 * k + 1).array();
    const auto s = (mu * dt_).exp();
    const auto c = (om * dt_).cos();
    const auto n = (om * dt_).sin();
    const auto a = y.row(2 * k).array();
    const auto b = y.row(2 * k + 1).array();
    out.row(2 * k) = (s * (c * a - n * b)).matrix();
    out.row(2 * k + 1) = (s * (n * a + c * b)).matrix();
  }
  if (tape) {
    tape->y_in = y;
    tape->y_out = out;
    tape->eig = std::move(eig);
  }
  return out;
}

Eigen::MatrixXd DKNCore::backward(const CoreTape& tape, const Eigen::MatrixXd& d_out,
                                  net::MlpGrads& grads) const {
  const Eigen::MatrixXd& y = tape.y_in;
  const Eigen::MatrixXd& out = tape.y_out;
  const Eigen::MatrixXd& eig = tape.eig;
  Eigen::MatrixXd dy(y.rows(), y.cols());
  Eigen::MatrixXd deig(eig.rows(), eig.cols());
  for (int k = 0; k < n_pairs_; ++k) {
    const auto mu = eig.row(2 * k).array();
    const auto om = eig.row(2 * k + 1).array();
    const auto s = (mu * dt_).exp();
    const auto c = (om * dt_).cos();
    const auto n = (om * dt_).sin();
    const auto g1 = d_out.row(2 * k).array();
    const auto g2 = d_out.row(2 * k + 1).array();
    const auto o1 = out.row(2 * k).array();
    const auto o2 = out.row(2 * k + 1).array();
    dy.row(2 * k) = (s * (c * g1 + n * g2)).matrix();
    dy.row(2 * k + 1) = (s * (-n * g1 + c * g2)).matrix();
    // d out / d mu = dt * out; d out1 / d omega = -dt*out2, d out2 / d omega = dt*out1.
    deig.row(2 * k) = (dt_ * (o1 * g1 + o2 * g2)).matrix();
    deig.row(2 * k + 1) = (dt_ * (o1 * g2 - o2 * g1)).matrix();
  }
  const Eigen::MatrixXd dfeats = net::backward(aux_, tape.net_tape, deig, grads);
  if (mode_ == dkn::AuxInput::full) {
    dy += dfeats;
  } else {
    for (int k = 0; k < n_pairs_; ++k) {
      dy.row(2 * k).array() += 2.0 * y.row(2 * k).array() * dfeats.row(k).array();
      dy.row(2 * k + 1).array() += 2.0 * y.row(2 * k + 1).array() * dfeats.row(k).array();
    }
  }
  return dy;
}

Eigen::MatrixXd FCNCore::step(const Eigen::MatrixXd& y, CoreTape* tape) const {
  Eigen::MatrixXd out = net::forward(inner_, y, tape ? &tape->net_tape : nullptr);
  if (tape) {
    tape->y_in = y;
    tape->y_out = out;
  }
  return out;
}

Eigen::MatrixXd FCNCore::backward(const CoreTape& tape, const Eigen::MatrixXd& d_out,
                                  net::MlpGrads& grads) const {
  return net::backward(inner_, tape.net_tape, d_out, grads);
}

namespace {

double masked_sq_norm(const Eigen::MatrixXd& diff, const Eigen::VectorXd& mask) {
  return (diff.array().colwise() * mask.array()).square().sum();
}

double params_sq_norm(const net::Mlp& a, const net::Mlp& b, const net::Mlp& c) {
  double s = 0.0;
  for (const net::Mlp* m : {&a, &b, &c})
    for (const auto& l : m->layers) s += l.W.squaredNorm() + l.b.squaredNorm();
  return s;
}

}  // namespace

dkn::LossBreakdown chain_loss(const net::Mlp& enc, const net::Mlp& dec, const LatentCore& core,
                              const net::Mlp& core_net, const ChainBatch& batch,
                              const Eigen::VectorXd& state_mask, const LossWeights& w,
                              GradSet* grads) {
  const int S = static_cast<int>(batch.targets.size());
  const int B = static_cast<int>(batch.E0.cols());
  if (S < 1 || B < 1) throw std::invalid_argument("chain_loss: empty batch");
  const auto mask = state_mask.array();
  const bool with_grad = grads != nullptr;

  dkn::LossBreakdown lb;

  // Forward, keeping tapes only when gradients are requested.
  net::GradTape enc0_tape, recon_tape;
  std::vector<net::GradTape> target_tapes(S), dec_tapes(S), merge_tapes(S);
  std::vector<CoreTape> core_tapes(S);
  std::vector<Eigen::MatrixXd> y(S), yhat(S), t(S), d(S);

  Eigen::MatrixXd y0 = net::forward(enc, batch.E0, with_grad ? &enc0_tape : nullptr);
  Eigen::MatrixXd r0 = net::forward(dec, y0, with_grad ? &recon_tape : nullptr);
  lb.recon = masked_sq_norm(r0 - batch.E0, state_mask) / B;

  Eigen::MatrixXd ycur = y0;
  for (int s = 0; s < S; ++s) {
    yhat[s] = core.step(ycur, with_grad ? &core_tapes[s] : nullptr);
    t[s] = net::forward(enc, batch.targets[s], with_grad ? &target_tapes[s] : nullptr);
    lb.lin += (t[s] - yhat[s]).squaredNorm() / (B * S);
    d[s] = net::forward(dec, yhat[s], with_grad ? &dec_tapes[s] : nullptr);
    lb.pred += masked_sq_norm(d[s] - batch.targets[s], state_mask) / (B * S);
    if (s + 1 < S) {
      // Teacher forcing: predicted states, recorded controls.
      Eigen::MatrixXd merged = (d[s].array().colwise() * mask +
                                batch.targets[s].array().colwise() * (1.0 - mask))
                                   .matrix();
      y[s] = net::forward(enc, merged, with_grad ? &merge_tapes[s] : nullptr);
      ycur = y[s];
    }
  }

  lb.l2 = params_sq_norm(enc, dec, core_net);
  lb.total = w.recon * lb.recon + w.lin * lb.lin + w.pred * lb.pred + w.l2 * lb.l2;
  if (!with_grad) return lb;

  // Backward. dy holds the gradient w.r.t. the latent feeding core step s.
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(y0.rows(), B);
  for (int s = S - 1; s >= 0; --s) {
    Eigen::MatrixXd dd =
        ((d[s] - batch.targets[s]).array().colwise() * mask).matrix() * (2.0 * w.pred / (B * S));
    if (s + 1 < S) {
      // dy currently holds d total / d y[s] (the re-encoded latent).
      Eigen::MatrixXd dmerged = net::backward(enc, merge_tapes[s], dy, grads->enc);
      dd.array() += dmerged.array().colwise() * mask;
    }
    Eigen::MatrixXd dyhat = net::backward(dec, dec_tapes[s], dd, grads->dec);
    dyhat += (2.0 * w.lin / (B * S)) * (yhat[s] - t[s]);
    net::backward(enc, target_tapes[s], (2.0 * w.lin / (B * S)) * (t[s] - yhat[s]), grads->enc);
    dy = core.backward(core_tapes[s], dyhat, grads->core);
  }
  Eigen::MatrixXd dr = ((r0 - batch.E0).array().colwise() * mask).matrix() * (2.0 * w.recon / B);
  dy += net::backward(dec, recon_tape, dr, grads->dec);
  net::backward(enc, enc0_tape, dy, grads->enc);
  // The l2 gradient 2*w_l2*theta is added on the flat vector by the caller.
  return lb;
}

std::vector<int> successor_map(const data::SnapshotSplit& split) {
  const int n = split.count();
  std::vector<int> succ(n, -1);
  for (int i = 0; i + 1 < n; ++i) {
    if (split.traj_id[i + 1] == split.traj_id[i] && split.start[i + 1] == split.start[i] + 1)
      succ[i] = i + 1;
  }
  return succ;
}

std::vector<int> eligible_columns(const std::vector<int>& succ, int depth) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(succ.size()); ++i) {
    int cur = i;
    bool ok = true;
    for (int s = 1; s < depth; ++s) {
      cur = succ[cur];
      if (cur < 0) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(i);
  }
  return out;
}

namespace {

ChainBatch gather_chain(const data::SnapshotSplit& split, const std::vector<int>& succ,
                        const std::vector<int>& cols, int depth) {
  ChainBatch b;
  const int B = static_cast<int>(cols.size());
  b.E0.resize(split.X.rows(), B);
  b.targets.assign(depth, Eigen::MatrixXd(split.X.rows(), B));
  for (int j = 0; j < B; ++j) {
    int cur = cols[j];
    b.E0.col(j) = split.X.col(cur);
    for (int s = 0; s < depth; ++s) {
      b.targets[s].col(j) = split.Xprime.col(cur);
      if (s + 1 < depth) cur = succ[cur];
    }
  }
  return b;
}

double eval_total(const dkn::TrainConfig& cfg, const data::SnapshotDataset& ds,
                  const net::Mlp& enc, const net::Mlp& dec, const LatentCore& core,
                  const net::Mlp& core_net, int depth, const Eigen::VectorXd& mask) {
  const data::SnapshotSplit& val = ds.validation;
  std::vector<int> succ = successor_map(val);
  std::vector<int> cols = eligible_columns(succ, depth);
  int d = depth;
  if (cols.empty()) {
    d = 1;
    cols = eligible_columns(succ, 1);
  }
  if (cols.empty()) return std::numeric_limits<double>::quiet_NaN();
  const LossWeights w{cfg.w_recon, cfg.w_lin, cfg.w_pred, cfg.w_l2};
  // Chunked so very large validation splits keep memory flat.
  const int chunk = std::max(1, cfg.batch_size);
  double total = 0.0;
  int counted = 0;
  for (std::size_t at = 0; at < cols.size(); at += chunk) {
    const std::vector<int> part(cols.begin() + at,
                                cols.begin() + std::min(cols.size(), at + chunk));
    const ChainBatch batch = gather_chain(val, succ, part, d);
    const auto lb = chain_loss(enc, dec, core, core_net, batch, mask, w, nullptr);
    total += lb.total * static_cast<double>(part.size());
    counted += static_cast<int>(part.size());
  }
  return total / counted;
}

}  // namespace

LoopResult train_loop(const dkn::TrainConfig& cfg, const data::SnapshotDataset& ds,
                      net::Mlp& encoder, net::Mlp& decoder, net::Mlp& core_net,
                      const LatentCore& core) {
  LoopResult res;
  if (ds.norm.empty()) throw std::invalid_argument("train: dataset must be normalized first");
  const Eigen::VectorXd mask = ds.state_mask();
  const LossWeights w{cfg.w_recon, cfg.w_lin, cfg.w_pred, cfg.w_l2};

  const std::vector<int> succ = successor_map(ds.train);
  int depth = std::max(1, cfg.multistep);
  std::vector<int> eligible = eligible_columns(succ, depth);
  while (eligible.empty() && depth > 1) {
    --depth;
    eligible = eligible_columns(succ, depth);
  }
  if (depth != cfg.multistep)
    std::cerr << "note: multistep reduced to " << depth << " (no deeper chains in dataset)\n";
  res.multistep_used = depth;

  std::vector<net::Mlp*> nets{&encoder, &decoder, &core_net};
  std::vector<const net::Mlp*> cnets{&encoder, &decoder, &core_net};
  Eigen::VectorXd params = net::flatten_params(cnets);
  net::OptimizerState adam = net::OptimizerState::make(params.size(), cfg.lr);

  Eigen::VectorXd best = params;
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Uniform random order without replacement, reseeded per epoch index.
    std::vector<int> order = eligible;
    Rng shuffle_rng(derive_seed(cfg.seed, "batch", static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.below(i));
      std::swap(order[i - 1], order[j]);
    }

    double sum_recon = 0.0, sum_lin = 0.0, sum_pred = 0.0;
    long long seen = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::vector<int> cols(order.begin() + at,
                                  order.begin() + std::min(order.size(), at + cfg.batch_size));
      const ChainBatch batch = gather_chain(ds.train, succ, cols, depth);
      GradSet grads{net::MlpGrads::zeros_like(encoder), net::MlpGrads::zeros_like(decoder),
                    net::MlpGrads::zeros_like(core_net)};
      const auto lb = chain_loss(encoder, decoder, core, core_net, batch, mask, w, &grads);
      if (!std::isfinite(lb.total)) {
        std::cerr << "training aborted: non-finite loss at epoch " << epoch
                  << " (recon=" << lb.recon << " lin=" << lb.lin << " pred=" << lb.pred
                  << "); keeping best parameters so far\n";
        res.aborted = true;
        net::unflatten_params(best_val < std::numeric_limits<double>::infinity() ? best : params, nets);
        return res;
      }
      Eigen::VectorXd flat =
          net::flatten_grads({&grads.enc, &grads.dec, &grads.core}, cnets) + 2.0 * cfg.w_l2 * params;
      if (!net::opt_step(params, flat, adam))
        std::cerr << "note: skipped update with non-finite gradient at epoch " << epoch << "\n";
      net::unflatten_params(params, nets);
      const double n = static_cast<double>(cols.size());
      sum_recon += lb.recon * n;
      sum_lin += lb.lin * n;
      sum_pred += lb.pred * n;
      seen += cols.size();
    }

    const double val_total = eval_total(cfg, ds, encoder, decoder, core, core_net, depth, mask);
    dkn::TrainLogRow row;
    row.epoch = epoch;
    row.train_recon = sum_recon / seen;
    row.train_lin = sum_lin / seen;
    row.train_pred = sum_pred / seen;
    row.val_total = val_total;
    res.log.push_back(row);
    if (std::isfinite(val_total) && val_total < best_val) {
      best_val = val_total;
      best = params;
    }
  }

  if (best_val < std::numeric_limits<double>::infinity()) net::unflatten_params(best, nets);
  return res;
}

}  // namespace koop::training
