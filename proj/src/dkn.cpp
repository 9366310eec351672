#include "koop/dkn.hpp"

#include <cmath>
#include <cstdio>

#include "koop/rng.hpp"
#include "latent_training.hpp"

namespace koop::dkn {

void TrainConfig::validate() const {
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
  if (dt < 0.0) throw std::invalid_argument("dt must be >= 0 (0 = from dataset)");
  if (w_recon < 0 || w_lin < 0 || w_pred < 0 || w_l2 < 0)
    throw std::invalid_argument("loss weights must be >= 0");
  if (multistep < 1) throw std::invalid_argument("multistep must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  for (int hidden : enc_hidden)
    if (hidden < 1) throw std::invalid_argument("encoder hidden widths must be >= 1");
  for (int hidden : aux_hidden)
    if (hidden < 1) throw std::invalid_argument("auxiliary hidden widths must be >= 1");
}

TrainConfig train_config_from(Config& cfg) {
  TrainConfig c;
  c.n_pairs = static_cast<int>(cfg.get_int("n_pairs", c.n_pairs));
  const auto eh = cfg.get_doubles("enc_hidden", {80, 80});
  c.enc_hidden.assign(eh.size(), 0);
  for (std::size_t i = 0; i < eh.size(); ++i) c.enc_hidden[i] = static_cast<int>(eh[i]);
  const auto ah = cfg.get_doubles("aux_hidden", {32});
  c.aux_hidden.assign(ah.size(), 0);
  for (std::size_t i = 0; i < ah.size(); ++i) c.aux_hidden[i] = static_cast<int>(ah[i]);
  c.dt = cfg.get_double("dt", c.dt);
  c.w_recon = cfg.get_double("w_recon", c.w_recon);
  c.w_lin = cfg.get_double("w_lin", c.w_lin);
  c.w_pred = cfg.get_double("w_pred", c.w_pred);
  c.w_l2 = cfg.get_double("w_l2", c.w_l2);
  c.multistep = static_cast<int>(cfg.get_int("multistep", c.multistep));
  c.epochs = static_cast<int>(cfg.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(cfg.get_int("batch_size", c.batch_size));
  c.lr = cfg.get_double("lr", c.lr);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
  const std::string aux = cfg.get_string("aux_input", "full");
  if (aux == "full") c.aux_input = AuxInput::full;
  else if (aux == "radius") c.aux_input = AuxInput::radius;
  else cfg.require_error("key `aux_input`: expected full|radius, got " + aux);
  return c;
}

Config train_config_to(const TrainConfig& c) {
  Config cfg;
  cfg.set("n_pairs", static_cast<long long>(c.n_pairs));
  std::string eh;
  for (int h : c.enc_hidden) eh += (eh.empty() ? "" : ",") + std::to_string(h);
  cfg.set("enc_hidden", eh);
  std::string ah;
  for (int h : c.aux_hidden) ah += (ah.empty() ? "" : ",") + std::to_string(h);
  cfg.set("aux_hidden", ah);
  cfg.set("dt", c.dt);
  cfg.set("w_recon", c.w_recon);
  cfg.set("w_lin", c.w_lin);
  cfg.set("w_pred", c.w_pred);
  cfg.set("w_l2", c.w_l2);
  cfg.set("multistep", static_cast<long long>(c.multistep));
  cfg.set("epochs", static_cast<long long>(c.epochs));
  cfg.set("batch_size", static_cast<long long>(c.batch_size));
  cfg.set("lr", c.lr);
  cfg.set("seed", static_cast<long long>(c.seed));
  cfg.set("aux_input", c.aux_input == AuxInput::full ? "full" : "radius");
  return cfg;
}

Eigen::Matrix2d koopman_operator(double mu, double omega, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("koopman_operator: dt must be > 0");
  const double s = std::exp(mu * dt);
  const double c = std::cos(omega * dt);
  const double n = std::sin(omega * dt);
  Eigen::Matrix2d k;
  k << s * c, -s * n, s * n, s * c;
  return k;
}

DKNModel::DKNModel(model::ModelMeta meta, TrainConfig cfg, net::Mlp encoder, net::Mlp decoder,
                   net::Mlp auxiliary)
    : meta_(std::move(meta)),
      cfg_(std::move(cfg)),
      encoder_(std::move(encoder)),
      decoder_(std::move(decoder)),
      auxiliary_(std::move(auxiliary)) {
  if (encoder_.output_dim() != meta_.latent_dim() || decoder_.input_dim() != meta_.latent_dim() ||
      auxiliary_.output_dim() != meta_.latent_dim())
    throw std::invalid_argument("DKNModel: net dimensions do not chain with 2*n_pairs");
}

Eigen::MatrixXd DKNModel::encode(const Eigen::MatrixXd& e) const { return net::forward(encoder_, e); }
Eigen::MatrixXd DKNModel::decode(const Eigen::MatrixXd& y) const { return net::forward(decoder_, y); }

Eigen::MatrixXd DKNModel::latent_step(const Eigen::MatrixXd& y) const {
  training::DKNCore core(auxiliary_, meta_.n_pairs, meta_.dt, cfg_.aux_input);
  return core.step(y, nullptr);
}

Eigen::MatrixXd DKNModel::eigenvalues(const Eigen::MatrixXd& y) const {
  training::DKNCore core(auxiliary_, meta_.n_pairs, meta_.dt, cfg_.aux_input);
  return core.eigenvalues(y);
}

long long DKNModel::param_count() const {
  return encoder_.param_count() + decoder_.param_count() + auxiliary_.param_count();
}

LossBreakdown losses(const DKNModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xprime) {
  if (X.rows() != Xprime.rows() || X.cols() != Xprime.cols())
    throw std::invalid_argument("losses: X and Xprime must be paired");
  training::DKNCore core(m.auxiliary(), m.meta().n_pairs, m.meta().dt, m.config().aux_input);
  training::ChainBatch batch;
  batch.E0 = X;
  batch.targets = {Xprime};
  const training::LossWeights w{m.config().w_recon, m.config().w_lin, m.config().w_pred, m.config().w_l2};
  return training::chain_loss(m.encoder(), m.decoder(), core, m.auxiliary(), batch, m.meta().state_mask(),
                              w, nullptr);
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  std::string out = "epoch,train_recon,train_lin,train_pred,val_total\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_recon, r.train_lin,
                  r.train_pred, r.val_total);
    out += buf;
  }
  return out;
}

namespace {

model::ModelMeta meta_from(const data::SnapshotDataset& ds, const TrainConfig& cfg, const std::string& kind) {
  model::ModelMeta meta;
  meta.kind = kind;
  meta.channels = ds.channels;
  meta.nt = ds.nt;
  meta.dt = cfg.dt > 0.0 ? cfg.dt : ds.dt;
  meta.n_pairs = cfg.n_pairs;
  meta.norm = ds.norm;
  meta.config_echo = ordered_json::object();
  for (const auto& [k, v] : train_config_to(cfg).entries()) meta.config_echo[k] = v;
  meta.config_echo["dataset_config"] = ds.config_echo;
  return meta;
}

}  // namespace

TrainResult train(const TrainConfig& config, const data::SnapshotDataset& ds) {
  TrainConfig cfg = config;
  cfg.validate();
  if (cfg.dt <= 0.0) cfg.dt = ds.dt;
  else if (std::abs(cfg.dt - ds.dt) > 1e-12)
    throw std::invalid_argument("train: config dt disagrees with dataset dt");

  const int edim = ds.embed_dim();
  const int ldim = 2 * cfg.n_pairs;
  const int aux_in = cfg.aux_input == AuxInput::full ? ldim : cfg.n_pairs;

  Rng init_rng(derive_seed(cfg.seed, "init"));
  std::vector<int> enc_dims{edim};
  enc_dims.insert(enc_dims.end(), cfg.enc_hidden.begin(), cfg.enc_hidden.end());
  enc_dims.push_back(ldim);
  std::vector<int> dec_dims{ldim};
  dec_dims.insert(dec_dims.end(), cfg.enc_hidden.rbegin(), cfg.enc_hidden.rend());
  dec_dims.push_back(edim);
  std::vector<int> aux_dims{aux_in};
  aux_dims.insert(aux_dims.end(), cfg.aux_hidden.begin(), cfg.aux_hidden.end());
  aux_dims.push_back(ldim);

  net::Mlp encoder = net::Mlp::make(enc_dims, net::Activation::relu, net::Activation::identity, init_rng);
  net::Mlp decoder = net::Mlp::make(dec_dims, net::Activation::relu, net::Activation::identity, init_rng);
  net::Mlp auxiliary = net::Mlp::make(aux_dims, net::Activation::tanh, net::Activation::identity, init_rng);

  training::DKNCore core(auxiliary, cfg.n_pairs, cfg.dt, cfg.aux_input);
  training::LoopResult loop = training::train_loop(cfg, ds, encoder, decoder, auxiliary, core);

  TrainResult res;
  res.log = std::move(loop.log);
  res.aborted = loop.aborted;
  res.model = std::make_unique<DKNModel>(meta_from(ds, cfg, "dkn"), cfg, std::move(encoder),
                                         std::move(decoder), std::move(auxiliary));
  return res;
}

}  // namespace koop::dkn
