#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "koop/binio.hpp"
#include "koop/configfile.hpp"
#include "koop/systems.hpp"

namespace koop::data {

enum class Segmentation { overlapping, disjoint };
enum class SystemKind { rigid, rigid_pd, soft };

std::string to_string(Segmentation s);
std::string to_string(SystemKind s);
SystemKind system_kind_from_string(const std::string& s);

/// Per-dimension affine transform fitted on the training split.
struct Normalization {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  bool empty() const { return shift.size() == 0; }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& normalized) const;
};

/// Paired snapshot matrices in DMD format. Column n of Xprime is the
/// embedding starting one sample after column n of X. traj_id/start record
/// where each column came from, which is what makes multi-step targets and
/// per-trajectory analysis possible downstream.
struct SnapshotSplit {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Xprime;
  std::vector<std::int32_t> traj_id;
  std::vector<std::int32_t> start;

  int count() const { return static_cast<int>(X.cols()); }
};

struct SnapshotDataset {
  std::vector<std::string> channels;  // per-step channels, control last
  int nt = 1;
  double dt = 0.0;
  Segmentation segmentation = Segmentation::overlapping;
  Normalization norm;  // empty until normalize_dataset
  SnapshotSplit train, validation, evaluation;
  ordered_json config_echo;

  int step_dim() const { return static_cast<int>(channels.size()); }
  int embed_dim() const { return step_dim() * nt; }
  /// 1 for state channels, 0 for the control channel, per window slot.
  Eigen::VectorXd state_mask() const;
  const SnapshotSplit& split(const std::string& name) const;
};

struct EmbeddingPairs {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Xprime;
  std::vector<std::int32_t> starts;
};

/// Slides (or tiles, for disjoint mode) a window of nt samples over the
/// trajectory, flattened oldest-first.
EmbeddingPairs embed(const sim::Trajectory& traj, int nt,
                     Segmentation mode = Segmentation::overlapping);

struct PDScheduleEntry {
  double kp = 0.0;
  double kd = 0.0;
  std::vector<double> targets;
};

struct DataGenConfig {
  SystemKind system = SystemKind::rigid;
  int nt = 50;
  double dt = 0.02;
  std::array<double, 2> q0_range{-3.1, 3.1};  // theta0 for the soft surrogate
  std::array<double, 2> qdot0_range{-2.0, 2.0};
  int n_train = 15000;
  int n_validation = 1000;
  int n_evaluation = 3000;
  int steps_per_traj = 400;
  Segmentation segmentation = Segmentation::overlapping;
  std::uint64_t seed = 1;
  int substeps = 1;
  int retry_cap = 100;

  std::string controller = "none";  // none | pd-regulator | pd-exciter | schedule
  sim::PDGains pd{10.0, 3.0, 3.141592653589793};
  std::vector<PDScheduleEntry> schedule;

  sim::RigidPendulumParams rigid_params;
  sim::DuffingSurrogateParams duffing_params;

  void validate() const;
};

/// Reads DataGenConfig from a key=value config; reports every bad key via
/// cfg.errors(). `system` may be overridden by the caller (CLI flag).
DataGenConfig datagen_from_config(Config& cfg, const std::string& system_override = "");
Config datagen_to_config(const DataGenConfig& c);

std::unique_ptr<sim::System> make_system(const DataGenConfig& c);

/// Simulates trajectories split-by-split (disjoint trajectory pools per
/// split) and embeds them. Divergent rollouts are discarded and redrawn, up
/// to retry_cap per split.
SnapshotDataset generate_dataset(const DataGenConfig& config);

/// Zero-mean unit-variance per dimension on the training split; dimensions
/// with (near-)zero variance get scale 1. Applies the same affine everywhere.
void normalize_dataset(SnapshotDataset& ds);

void save_dataset(const std::filesystem::path& path, const SnapshotDataset& ds);
SnapshotDataset load_dataset(const std::filesystem::path& path);

/// Inspection CSV for one split: one row per column with provenance.
std::string split_csv(const SnapshotDataset& ds, const std::string& split_name);

}  // namespace koop::data
