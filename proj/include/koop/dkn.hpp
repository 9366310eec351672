#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "koop/configfile.hpp"
#include "koop/dataset.hpp"
#include "koop/model.hpp"
#include "koop/net.hpp"

namespace koop::dkn {

enum class AuxInput { full, radius };

struct TrainConfig {
  int n_pairs = 1;
  std::vector<int> enc_hidden{80, 80};
  std::vector<int> aux_hidden{32};
  double dt = 0.0;  // 0 = take from dataset
  double w_recon = 1.0;
  double w_lin = 1.0;
  double w_pred = 1.0;
  double w_l2 = 1e-9;
  int multistep = 1;  // loss chaining horizon
  int epochs = 200;
  int batch_size = 256;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  AuxInput aux_input = AuxInput::full;

  void validate() const;
};

TrainConfig train_config_from(Config& cfg);
Config train_config_to(const TrainConfig& c);

/// Per-pair latent propagator: exp(mu dt) times a rotation by omega dt.
Eigen::Matrix2d koopman_operator(double mu, double omega, double dt);

/// Deep Koopman network: encoder/decoder plus an auxiliary net that maps the
/// latent state to per-pair eigenvalues driving block-diagonal dynamics.
class DKNModel final : public model::LatentModel {
 public:
  DKNModel(model::ModelMeta meta, TrainConfig cfg, net::Mlp encoder, net::Mlp decoder, net::Mlp auxiliary);

  const model::ModelMeta& meta() const override { return meta_; }
  Eigen::MatrixXd encode(const Eigen::MatrixXd& e) const override;
  Eigen::MatrixXd decode(const Eigen::MatrixXd& y) const override;
  Eigen::MatrixXd latent_step(const Eigen::MatrixXd& y) const override;
  Eigen::MatrixXd eigenvalues(const Eigen::MatrixXd& y) const override;
  bool has_eigenvalues() const override { return true; }
  long long param_count() const override;

  const TrainConfig& config() const { return cfg_; }
  const net::Mlp& encoder() const { return encoder_; }
  const net::Mlp& decoder() const { return decoder_; }
  const net::Mlp& auxiliary() const { return auxiliary_; }

 private:
  model::ModelMeta meta_;
  TrainConfig cfg_;
  net::Mlp encoder_, decoder_, auxiliary_;
};

struct LossBreakdown {
  double recon = 0.0;
  double lin = 0.0;
  double pred = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

/// The three losses at chaining depth 1 on paired snapshot batches
/// (normalized space). total = w_recon*recon + w_lin*lin + w_pred*pred +
/// w_l2*l2.
LossBreakdown losses(const DKNModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xprime);

struct TrainLogRow {
  int epoch = 0;
  double train_recon = 0.0;
  double train_lin = 0.0;
  double train_pred = 0.0;
  double val_total = 0.0;
};

std::string train_log_csv(const std::vector<TrainLogRow>& log);

struct TrainResult {
  std::unique_ptr<DKNModel> model;
  std::vector<TrainLogRow> log;
  bool aborted = false;  // non-finite loss; model holds the last good parameters
};

/// Minimizes the weighted losses with Adam; returns the parameters with the
/// best validation total. Deterministic given config.seed.
TrainResult train(const TrainConfig& config, const data::SnapshotDataset& ds);

}  // namespace koop::dkn
