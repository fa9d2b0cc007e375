/*=========================================================================
 *
 *  Copyright The stainnorm contributors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *         http://www.apache.org/licenses/LICENSE-2.0.txt
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 *
 *=========================================================================*/

#pragma once

#include "stainnorm/colorspace.hpp"
#include "stainnorm/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace stainnorm
{

/// Default cluster count for representative selection.
inline constexpr int kDefaultClusters = 8;

/// Index of the ratio closest to one; ties go to the earliest entry.
std::size_t select_reference_index(const std::vector<double> & ratios);

std::string select_reference(const std::vector<std::pair<std::string, double>> & ratios);

/// Concatenated normalised lαβ channel histograms (3 * bins values).
struct FeatureVector
{
  std::string image_id;
  std::vector<double> values;
};

FeatureVector histogram_features(const RgbImage & img, std::size_t bins = kDefaultBins, std::string image_id = {});

struct PcaModel
{
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;         ///< n_components x dim, orthonormal rows
  Eigen::VectorXd explained_variance; ///< non-increasing
  double total_variance = 0.0;
};

struct PcaResult
{
  PcaModel model;
  Eigen::MatrixXd projected; ///< samples x n_components
};

/// Mean-centred SVD. Each component is signed so its largest-magnitude
/// loading is positive. Variances use the n-1 denominator.
PcaResult pca_fit_project(const Eigen::MatrixXd & samples, int n_components = 2);
PcaResult pca_fit_project(const std::vector<FeatureVector> & features, int n_components = 2);

Eigen::MatrixXd pca_project(const PcaModel & model, const Eigen::MatrixXd & samples);

struct KMeansOptions
{
  int restarts = 10;
  int max_iterations = 300;
};

struct ClusterModel
{
  int k = 0;
  Eigen::MatrixXd centroids; ///< k x dim
  std::vector<int> assignments;
  double wcss = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  /// WCSS after every Lloyd iteration of the winning restart.
  std::vector<double> wcss_history;
};

/// Best of `restarts` seeded k-means++ / Lloyd runs (rows of `points` are
/// samples). Empty clusters are re-seeded from the point farthest from its
/// centroid.
ClusterModel kmeans_cluster(const Eigen::MatrixXd & points, int k, std::uint64_t seed,
                            const KMeansOptions & options = {});

double wcss(const Eigen::MatrixXd & points, const Eigen::MatrixXd & centroids, const std::vector<int> & assignments);

std::vector<std::pair<int, double>> wcss_curve(const Eigen::MatrixXd & points, const std::vector<int> & k_range,
                                               std::uint64_t seed, const KMeansOptions & options = {});

/// Per cluster, the member nearest its centroid (ties to the earliest
/// index), in cluster order.
std::vector<std::size_t> choose_representatives(const ClusterModel & model, const Eigen::MatrixXd & points);

std::vector<std::string> choose_representatives(const ClusterModel & model, const Eigen::MatrixXd & points,
                                                const std::vector<std::string> & ids);

} // namespace stainnorm
