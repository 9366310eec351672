#include "koop/fcn.hpp"

#include "koop/rng.hpp"
#include "latent_training.hpp"

namespace koop::fcn {

FCNModel::FCNModel(model::ModelMeta meta, dkn::TrainConfig cfg, net::Mlp encoder, net::Mlp decoder,
                   net::Mlp inner)
    : meta_(std::move(meta)),
      cfg_(std::move(cfg)),
      encoder_(std::move(encoder)),
      decoder_(std::move(decoder)),
      inner_(std::move(inner)) {
  if (encoder_.output_dim() != meta_.latent_dim() || inner_.input_dim() != meta_.latent_dim() ||
      inner_.output_dim() != meta_.latent_dim())
    throw std::invalid_argument("FCNModel: net dimensions do not chain with 2*n_pairs");
}

Eigen::MatrixXd FCNModel::encode(const Eigen::MatrixXd& e) const { return net::forward(encoder_, e); }
Eigen::MatrixXd FCNModel::decode(const Eigen::MatrixXd& y) const { return net::forward(decoder_, y); }
Eigen::MatrixXd FCNModel::latent_step(const Eigen::MatrixXd& y) const { return net::forward(inner_, y); }

Eigen::MatrixXd FCNModel::eigenvalues(const Eigen::MatrixXd&) const {
  throw std::logic_error("FCN has no eigenvalue parameterization");
}

long long FCNModel::param_count() const {
  return encoder_.param_count() + decoder_.param_count() + inner_.param_count();
}

TrainResult train(const dkn::TrainConfig& config, const data::SnapshotDataset& ds) {
  dkn::TrainConfig cfg = config;
  cfg.validate();
  if (cfg.dt <= 0.0) cfg.dt = ds.dt;
  else if (std::abs(cfg.dt - ds.dt) > 1e-12)
    throw std::invalid_argument("train: config dt disagrees with dataset dt");

  const int edim = ds.embed_dim();
  const int ldim = 2 * cfg.n_pairs;

  Rng init_rng(derive_seed(cfg.seed, "init"));
  std::vector<int> enc_dims{edim};
  enc_dims.insert(enc_dims.end(), cfg.enc_hidden.begin(), cfg.enc_hidden.end());
  enc_dims.push_back(ldim);
  std::vector<int> dec_dims{ldim};
  dec_dims.insert(dec_dims.end(), cfg.enc_hidden.rbegin(), cfg.enc_hidden.rend());
  dec_dims.push_back(edim);
  // One hidden layer of width 2K: the minimal nonlinear replacement for the
  // structured propagator at matched layer sizes.
  const std::vector<int> inner_dims{ldim, ldim, ldim};

  net::Mlp encoder = net::Mlp::make(enc_dims, net::Activation::relu, net::Activation::identity, init_rng);
  net::Mlp decoder = net::Mlp::make(dec_dims, net::Activation::relu, net::Activation::identity, init_rng);
  net::Mlp inner = net::Mlp::make(inner_dims, net::Activation::relu, net::Activation::identity, init_rng);

  training::FCNCore core(inner);
  training::LoopResult loop = training::train_loop(cfg, ds, encoder, decoder, inner, core);

  model::ModelMeta meta;
  meta.kind = "fcn";
  meta.channels = ds.channels;
  meta.nt = ds.nt;
  meta.dt = cfg.dt;
  meta.n_pairs = cfg.n_pairs;
  meta.norm = ds.norm;
  meta.config_echo = ordered_json::object();
  for (const auto& [k, v] : dkn::train_config_to(cfg).entries()) meta.config_echo[k] = v;
  meta.config_echo["dataset_config"] = ds.config_echo;

  TrainResult res;
  res.log = std::move(loop.log);
  res.aborted = loop.aborted;
  res.model = std::make_unique<FCNModel>(std::move(meta), cfg, std::move(encoder), std::move(decoder),
                                         std::move(inner));
  return res;
}

dkn::LossBreakdown losses(const FCNModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xprime) {
  if (X.rows() != Xprime.rows() || X.cols() != Xprime.cols())
    throw std::invalid_argument("losses: X and Xprime must be paired");
  training::FCNCore core(m.inner());
  training::ChainBatch batch;
  batch.E0 = X;
  batch.targets = {Xprime};
  const training::LossWeights w{m.config().w_recon, m.config().w_lin, m.config().w_pred, m.config().w_l2};
  return training::chain_loss(m.encoder(), m.decoder(), core, m.inner(), batch, m.meta().state_mask(),
                              w, nullptr);
}

}  // namespace koop::fcn
