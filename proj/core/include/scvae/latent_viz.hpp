// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scvae/training.hpp"

namespace scvae::viz {

class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatentSet {
  Eigen::MatrixXd z;  // n x Z posterior means
  std::vector<std::string> domains;
  std::vector<std::string> acts;
};

LatentSet collect_latents(const training::Checkpoint& checkpoint, const std::vector<corpus::Example>& examples);

struct Pca {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // Z x k, orthonormal columns
  Eigen::VectorXd explained_variance;
  Eigen::MatrixXd projected;  // n x k
};

inline constexpr double kPcaTolerance = 1e-10;

// Top-k eigenvectors of the sample covariance by power iteration with
// deflation. Each component's largest-magnitude loading is positive.
Pca pca_project(const Eigen::MatrixXd& data, std::size_t k = 2);

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  std::string domain;
  std::string act;
};

std::vector<ProjectedPoint> project_latents(const LatentSet& latents, const Pca& pca);
void export_projection(const std::vector<ProjectedPoint>& points, const std::filesystem::path& path);

struct ClusterStats {
  double inter_centroid = 0.0;  // mean pairwise distance between domain centroids
  double intra_spread = 0.0;    // mean point-to-own-centroid distance
};
ClusterStats domain_cluster_stats(const std::vector<ProjectedPoint>& points);

}  // namespace scvae::viz
