#pragma once

#include "koop/dkn.hpp"

namespace koop::fcn {

/// Comparison network: identical encoder/decoder sizes, but the structured
/// latent propagator is replaced by an unconstrained small MLP.
class FCNModel final : public model::LatentModel {
 public:
  FCNModel(model::ModelMeta meta, dkn::TrainConfig cfg, net::Mlp encoder, net::Mlp decoder, net::Mlp inner);

  const model::ModelMeta& meta() const override { return meta_; }
  Eigen::MatrixXd encode(const Eigen::MatrixXd& e) const override;
  Eigen::MatrixXd decode(const Eigen::MatrixXd& y) const override;
  Eigen::MatrixXd latent_step(const Eigen::MatrixXd& y) const override;
  Eigen::MatrixXd eigenvalues(const Eigen::MatrixXd& y) const override;
  bool has_eigenvalues() const override { return false; }
  long long param_count() const override;

  const dkn::TrainConfig& config() const { return cfg_; }
  const net::Mlp& encoder() const { return encoder_; }
  const net::Mlp& decoder() const { return decoder_; }
  const net::Mlp& inner() const { return inner_; }

 private:
  model::ModelMeta meta_;
  dkn::TrainConfig cfg_;
  net::Mlp encoder_, decoder_, inner_;
};

struct TrainResult {
  std::unique_ptr<FCNModel> model;
  std::vector<dkn::TrainLogRow> log;
  bool aborted = false;
};

/// Same contract as dkn::train with the linear-dynamics loss replaced by the
/// inner-net next-latent loss.
TrainResult train(const dkn::TrainConfig& config, const data::SnapshotDataset& ds);

dkn::LossBreakdown losses(const FCNModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xprime);

}  // namespace koop::fcn
