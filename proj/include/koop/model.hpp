#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "koop/binio.hpp"
#include "koop/dataset.hpp"
#include "koop/net.hpp"

namespace koop::model {

struct ModelMeta {
  std::string kind;  // "dkn" | "fcn"
  std::vector<std::string> channels;
  int nt = 1;
  double dt = 0.0;
  int n_pairs = 1;
  data::Normalization norm;
  ordered_json config_echo;

  int step_dim() const { return static_cast<int>(channels.size()); }
  int embed_dim() const { return step_dim() * nt; }
  int latent_dim() const { return 2 * n_pairs; }
  Eigen::VectorXd state_mask() const;
};

/// Frozen learned dynamics model over normalized delay embeddings. Column =
/// sample everywhere; evaluation on a const model is safe from many threads.
class LatentModel {
 public:
  virtual ~LatentModel() = default;

  virtual const ModelMeta& meta() const = 0;
  virtual Eigen::MatrixXd encode(const Eigen::MatrixXd& normalized_embeddings) const = 0;
  virtual Eigen::MatrixXd decode(const Eigen::MatrixXd& latents) const = 0;
  /// Advances latents one sampling interval.
  virtual Eigen::MatrixXd latent_step(const Eigen::MatrixXd& latents) const = 0;
  /// Per-pair eigenvalues at the given latents, rows interleaved
  /// [mu_1, omega_1, mu_2, omega_2, ...]. Only meaningful when
  /// has_eigenvalues() is true.
  virtual Eigen::MatrixXd eigenvalues(const Eigen::MatrixXd& latents) const = 0;
  virtual bool has_eigenvalues() const = 0;
  virtual long long param_count() const = 0;
};

/// Open-loop rollout: encode once, advance the latent n_steps times, decode
/// every step. Returns denormalized embeddings, one column per step
/// (step 1..n_steps).
Eigen::MatrixXd predict_embedding(const LatentModel& m, const Eigen::VectorXd& raw_embedding, int n_steps);

void save_model(const std::filesystem::path& path, const LatentModel& m);
std::unique_ptr<LatentModel> load_model(const std::filesystem::path& path);

}  // namespace koop::model
