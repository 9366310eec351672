#pragma once

// Internal machinery shared by the dkn and fcn trainers: latent propagator
// cores with hand-rolled reverse-mode gradients, the chained loss, and the
// epoch loop. Not part of the public API.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "koop/dataset.hpp"
#include "koop/dkn.hpp"
#include "koop/net.hpp"

namespace koop::training {

struct CoreTape {
  net::GradTape net_tape;
  Eigen::MatrixXd y_in;
  Eigen::MatrixXd y_out;
  Eigen::MatrixXd eig;  // dkn only: [mu_1; omega_1; mu_2; ...] per column
};

/// One latent step y -> y_next with enough cached state for an exact
/// backward pass. Holds references to the live nets, so parameter updates
/// are visible without rebuilding.
class LatentCore {
 public:
  virtual ~LatentCore() = default;
  virtual Eigen::MatrixXd step(const Eigen::MatrixXd& y, CoreTape* tape) const = 0;
  /// Accumulates core-net gradients, returns the gradient w.r.t. y.
  virtual Eigen::MatrixXd backward(const CoreTape& tape, const Eigen::MatrixXd& d_out,
                                   net::MlpGrads& grads) const = 0;
};

class DKNCore final : public LatentCore {
 public:
  DKNCore(const net::Mlp& aux, int n_pairs, double dt, dkn::AuxInput mode)
      : aux_(aux), n_pairs_(n_pairs), dt_(dt), mode_(mode) {}

  Eigen::MatrixXd aux_features(const Eigen::MatrixXd& y) const;
  Eigen::MatrixXd eigenvalues(const Eigen::MatrixXd& y) const;
  Eigen::MatrixXd step(const Eigen::MatrixXd& y, CoreTape* tape) const override;
  Eigen::MatrixXd backward(const CoreTape& tape, const Eigen::MatrixXd& d_out,
                           net::MlpGrads& grads) const override;

 private:
  const net::Mlp& aux_;
  int n_pairs_;
  double dt_;
  dkn::AuxInput mode_;
};

class FCNCore final : public LatentCore {
 public:
  explicit FCNCore(const net::Mlp& inner) : inner_(inner) {}

  Eigen::MatrixXd step(const Eigen::MatrixXd& y, CoreTape* tape) const override;
  Eigen::MatrixXd backward(const CoreTape& tape, const Eigen::MatrixXd& d_out,
                           net::MlpGrads& grads) const override;

 private:
  const net::Mlp& inner_;
};

struct ChainBatch {
  Eigen::MatrixXd E0;
  std::vector<Eigen::MatrixXd> targets;  // targets[s-1] is the s-step-ahead embedding
};

struct GradSet {
  net::MlpGrads enc, dec, core;
};

struct LossWeights {
  double recon = 1.0;
  double lin = 1.0;
  double pred = 1.0;
  double l2 = 0.0;
};

/// Chained losses with teacher-forced control channels: each step advances
/// the latent, decodes, scores against the shifted target, then re-encodes
/// the decoded window with the target's control channels merged in.
/// Gradients (when grads != nullptr) are exact through the whole chain.
dkn::LossBreakdown chain_loss(const net::Mlp& enc, const net::Mlp& dec, const LatentCore& core,
                              const net::Mlp& core_net, const ChainBatch& batch,
                              const Eigen::VectorXd& state_mask, const LossWeights& w,
                              GradSet* grads);

/// succ[n] = column index of the embedding one sample later in the same
/// trajectory, or -1.
std::vector<int> successor_map(const data::SnapshotSplit& split);
/// Columns from which a full depth-S chain of shifted targets exists.
std::vector<int> eligible_columns(const std::vector<int>& succ, int depth);

struct LoopResult {
  std::vector<dkn::TrainLogRow> log;
  bool aborted = false;
  int multistep_used = 1;
};

/// Shared epoch loop: Adam over [encoder, decoder, core_net], best-validation
/// parameter selection. Mutates the three nets in place; on return they hold
/// the best-validation parameters.
LoopResult train_loop(const dkn::TrainConfig& cfg, const data::SnapshotDataset& ds,
                      net::Mlp& encoder, net::Mlp& decoder, net::Mlp& core_net,
                      const LatentCore& core);

}  // namespace koop::training
