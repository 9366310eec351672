#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "koop/dataset.hpp"
#include "koop/model.hpp"
#include "koop/systems.hpp"

namespace koop::spectral {

struct AxisSpec {
  std::string channel;
  double min = 0.0;
  double max = 1.0;
  int resolution = 2;

  double value_at(int i) const { return min + (max - min) * i / (resolution - 1); }
};

/// Two displayed axes; every other channel (including control) is held at a
/// fixed value. Grid cells are expanded to model inputs by tiling the cell
/// state across the whole history window.
struct PhaseGrid {
  AxisSpec axis1;
  AxisSpec axis2;
  std::map<std::string, double> fixed;

  void validate() const;
};

/// "q=-3.14:3.14:101,qdot=-2:2:101[,u=0]" — two ranged axes, optional fixed
/// channels.
PhaseGrid parse_grid(const std::string& spec);
PhaseGrid default_grid(const std::vector<std::string>& channels);

struct SpectralField {
  PhaseGrid grid;
  /// Keys: mu_k, omega_k, magnitude_k (1-based k), energy. Entry (i, j) is
  /// the cell at axis1 index i, axis2 index j.
  std::map<std::string, Eigen::MatrixXd> values;
  long long n_nonfinite = 0;
  std::string history_fill = "tile";
};

/// Evaluates the auxiliary eigenvalues and latent magnitudes over the grid.
/// Requires a model with eigenvalues (dkn).
SpectralField sample_field(const model::LatentModel& m, const PhaseGrid& grid);

struct LatentTrajectory {
  std::vector<double> t;   // window end times
  Eigen::MatrixXd y;       // 2K x n
  Eigen::MatrixXd eig;     // 2K x n, [mu_1; omega_1; ...]; empty for fcn
  Eigen::MatrixXd magnitude;  // K x n per-pair |y_pair|
};

LatentTrajectory latent_trajectory(const model::LatentModel& m, const sim::Trajectory& traj);

/// Writes the plot-ready tables: phase portraits and latent portraits of the
/// evaluation split, mu/omega/energy fields, per-trajectory frequency over
/// time, and the per-pair eigenvalue summary.
void export_analysis(const model::LatentModel& m, const data::SnapshotDataset& ds,
                     const PhaseGrid& grid, const std::filesystem::path& out_dir);

}  // namespace koop::spectral
