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

#include "stainnorm/cohort.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace stainnorm
{

namespace
{

double uniform01(std::mt19937_64 & rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64 & rng, std::size_t n)
{
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

/// Greedy k-means++ seeding: each new centre is the best of
/// 2 + floor(ln k) D^2-sampled candidates.
Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd & points, int k, std::mt19937_64 & rng)
{
  const auto n = static_cast<std::size_t>(points.rows());
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(uniform_index(rng, n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    d2[i] = (points.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
  }
  std::vector<double> trial_d2(n);
  std::vector<double> best_d2(n);
  for (int c = 1; c < k; ++c)
  {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t best = 0;
    double best_potential = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t)
    {
      std::size_t pick = uniform_index(rng, n);
      if (total > 0.0)
      {
        const double target = uniform01(rng) * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i)
        {
          acc += d2[i];
          if (acc > target && d2[i] > 0.0)
          {
            pick = i;
            break;
          }
        }
      }
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i)
      {
        const auto r = static_cast<Eigen::Index>(i);
        trial_d2[i] = std::min(d2[i], (points.row(r) - points.row(static_cast<Eigen::Index>(pick))).squaredNorm());
        potential += trial_d2[i];
      }
      if (potential < best_potential)
      {
        best_potential = potential;
        best = pick;
        best_d2.swap(trial_d2);
      }
    }
    centroids.row(c) = points.row(static_cast<Eigen::Index>(best));
    d2 = best_d2;
  }
  return centroids;
}

/// Moves each point to its nearest centroid. A point only leaves its current
/// cluster for a strictly closer one; unassigned points (-1) take the
/// earliest nearest centroid. Returns whether anything moved.
bool assign(const Eigen::MatrixXd & points, const Eigen::MatrixXd & centroids, std::vector<int> & assignments)
{
  bool changed = false;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
  {
    int & a = assignments[static_cast<std::size_t>(i)];
    int best = a;
    double best_d = a >= 0 ? (points.row(i) - centroids.row(a)).squaredNorm() : std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c)
    {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d)
      {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (best != a)
    {
      a = best;
      changed = true;
    }
  }
  return changed;
}

/// Centroids become member means. An empty cluster takes over the point
/// farthest from its own centroid. Returns whether any cluster was empty.
bool update(const Eigen::MatrixXd & points, Eigen::MatrixXd & centroids, std::vector<int> & assignments)
{
  const auto k = centroids.rows();
  bool had_empty = false;
  for (;;)
  {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i)
    {
      const int a = assignments[static_cast<std::size_t>(i)];
      sums.row(a) += points.row(i);
      ++counts[static_cast<std::size_t>(a)];
    }
    Eigen::Index empty = -1;
    for (Eigen::Index c = 0; c < k; ++c)
    {
      if (counts[static_cast<std::size_t>(c)] > 0)
      {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      }
      else if (empty < 0)
      {
        empty = c;
      }
    }
    if (empty < 0)
    {
      return had_empty;
    }
    had_empty = true;
    // Farthest point among clusters that can spare one.
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
    {
      const int a = assignments[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(a)] < 2)
      {
        continue;
      }
      const double d = (points.row(i) - centroids.row(a)).squaredNorm();
      if (d > far_d)
      {
        far_d = d;
        far = i;
      }
    }
    centroids.row(empty) = points.row(far);
    assignments[static_cast<std::size_t>(far)] = static_cast<int>(empty);
  }
}

/// Hartigan transfers: moves single points between clusters while that
/// strictly lowers the WCSS, taking centroid shifts into account. Returns
/// whether anything moved. Centroids stay the exact member means.
bool hartigan_pass(const Eigen::MatrixXd & points, Eigen::MatrixXd & centroids, std::vector<int> & assignments)
{
  const auto k = centroids.rows();
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (int a : assignments)
  {
    counts[static_cast<std::size_t>(a)] += 1.0;
  }
  bool moved = false;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
  {
    const int a = assignments[static_cast<std::size_t>(i)];
    const double na = counts[static_cast<std::size_t>(a)];
    if (na < 2.0)
    {
      continue;
    }
    const double remove = na / (na - 1.0) * (points.row(i) - centroids.row(a)).squaredNorm();
    int best = a;
    double best_add = remove;
    for (Eigen::Index b = 0; b < k; ++b)
    {
      if (b == a)
      {
        continue;
      }
      const double nb = counts[static_cast<std::size_t>(b)];
      const double add = nb / (nb + 1.0) * (points.row(i) - centroids.row(b)).squaredNorm();
      if (add < best_add)
      {
        best_add = add;
        best = static_cast<int>(b);
      }
    }
    if (best != a && best_add < remove * (1.0 - 1e-12))
    {
      const double nb = counts[static_cast<std::size_t>(best)];
      centroids.row(a) = (centroids.row(a) * na - points.row(i)) / (na - 1.0);
      centroids.row(best) = (centroids.row(best) * nb + points.row(i)) / (nb + 1.0);
      counts[static_cast<std::size_t>(a)] -= 1.0;
      counts[static_cast<std::size_t>(best)] += 1.0;
      assignments[static_cast<std::size_t>(i)] = best;
      moved = true;
    }
  }
  return moved;
}

ClusterModel lloyd(const Eigen::MatrixXd & points, Eigen::MatrixXd centroids, int max_iterations)
{
  ClusterModel m;
  m.k = static_cast<int>(centroids.rows());
  m.assignments.assign(static_cast<std::size_t>(points.rows()), -1);
  assign(points, centroids, m.assignments);
  int it = 0;
  for (; it < max_iterations; ++it)
  {
    const bool had_empty = update(points, centroids, m.assignments);
    m.wcss_history.push_back(wcss(points, centroids, m.assignments));
    const bool changed = assign(points, centroids, m.assignments);
    if (!changed && !had_empty)
    {
      ++it;
      break;
    }
  }
  m.iterations = it;
  // Refine the Lloyd fixed point; a Hartigan-stable partition is also
  // Lloyd-stable.
  for (; it < max_iterations && hartigan_pass(points, centroids, m.assignments); ++it)
  {
    update(points, centroids, m.assignments);
    m.wcss_history.push_back(wcss(points, centroids, m.assignments));
    m.iterations = it + 1;
  }
  update(points, centroids, m.assignments);
  m.centroids = std::move(centroids);
  m.wcss = wcss(points, m.centroids, m.assignments);
  return m;
}

} // namespace

std::size_t select_reference_index(const std::vector<double> & ratios)
{
  if (ratios.empty())
  {
    throw Error(Errc::EmptyCohort, "no ratios to select from");
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i)
  {
    if (!std::isfinite(ratios[i]))
    {
      throw Error(Errc::InvalidArgument, "red/blue ratio " + std::to_string(i) + " is not finite");
    }
    if (std::abs(ratios[i] - 1.0) < std::abs(ratios[best] - 1.0))
    {
      best = i;
    }
  }
  return best;
}

std::string select_reference(const std::vector<std::pair<std::string, double>> & ratios)
{
  std::vector<double> r;
  r.reserve(ratios.size());
  for (const auto & p : ratios)
  {
    r.push_back(p.second);
  }
  return ratios[select_reference_index(r)].first;
}

FeatureVector histogram_features(const RgbImage & img, std::size_t bins, std::string image_id)
{
  const auto hists = channel_histograms(rgb_to_lab(img), bins, kLabRanges);
  FeatureVector f;
  f.image_id = std::move(image_id);
  f.values.reserve(3 * bins);
  for (const auto & h : hists)
  {
    f.values.insert(f.values.end(), h.weights.begin(), h.weights.end());
  }
  return f;
}

PcaResult pca_fit_project(const Eigen::MatrixXd & samples, int n_components)
{
  const Eigen::Index n = samples.rows();
  const Eigen::Index dim = samples.cols();
  if (n < 2)
  {
    throw Error(Errc::TooFewSamples, "PCA needs at least two samples");
  }
  if (n_components < 1 || n_components > std::min(n, dim))
  {
    throw Error(Errc::InvalidArgument, "n_components must be in [1, min(samples, dimension)]");
  }
  PcaResult result;
  PcaModel & model = result.model;
  model.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centred = samples.rowwise() - model.mean.transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  const double denom = static_cast<double>(n - 1);

  model.components.resize(n_components, dim);
  model.explained_variance.resize(n_components);
  for (int c = 0; c < n_components; ++c)
  {
    Eigen::VectorXd v = svd.matrixV().col(c);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0)
    {
      v = -v;
    }
    model.components.row(c) = v.transpose();
    const double s = c < svd.singularValues().size() ? svd.singularValues()[c] : 0.0;
    model.explained_variance[c] = s * s / denom;
  }
  model.total_variance = centred.squaredNorm() / denom;
  result.projected = centred * model.components.transpose();
  return result;
}

PcaResult pca_fit_project(const std::vector<FeatureVector> & features, int n_components)
{
  if (features.size() < 2)
  {
    throw Error(Errc::TooFewSamples, "PCA needs at least two samples");
  }
  const std::size_t dim = features.front().values.size();
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < features.size(); ++i)
  {
    if (features[i].values.size() != dim)
    {
      throw Error(Errc::DimensionMismatch, "feature vectors differ in length");
    }
    for (std::size_t j = 0; j < dim; ++j)
    {
      samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i].values[j];
    }
  }
  return pca_fit_project(samples, n_components);
}

Eigen::MatrixXd pca_project(const PcaModel & model, const Eigen::MatrixXd & samples)
{
  if (samples.cols() != model.mean.size())
  {
    throw Error(Errc::DimensionMismatch, "sample dimension differs from the PCA model");
  }
  return (samples.rowwise() - model.mean.transpose()) * model.components.transpose();
}

double wcss(const Eigen::MatrixXd & points, const Eigen::MatrixXd & centroids, const std::vector<int> & assignments)
{
  double s = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
  {
    s += (points.row(i) - centroids.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return s;
}

ClusterModel kmeans_cluster(const Eigen::MatrixXd & points, int k, std::uint64_t seed, const KMeansOptions & options)
{
  if (k < 1)
  {
    throw Error(Errc::InvalidArgument, "k must be at least 1");
  }
  if (k > points.rows())
  {
    throw Error(Errc::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(points.rows()) + " points");
  }
  if (options.restarts < 1 || options.max_iterations < 1)
  {
    throw Error(Errc::InvalidArgument, "restarts and max_iterations must be positive");
  }
  std::mt19937_64 rng(seed);
  ClusterModel best;
  for (int r = 0; r < options.restarts; ++r)
  {
    ClusterModel m = lloyd(points, seed_centroids(points, k, rng), options.max_iterations);
    if (r == 0 || m.wcss < best.wcss)
    {
      best = std::move(m);
    }
  }
  best.seed = seed;
  return best;
}

std::vector<std::pair<int, double>> wcss_curve(const Eigen::MatrixXd & points, const std::vector<int> & k_range,
                                               std::uint64_t seed, const KMeansOptions & options)
{
  std::vector<std::pair<int, double>> curve;
  curve.reserve(k_range.size());
  for (int k : k_range)
  {
    curve.emplace_back(k, kmeans_cluster(points, k, seed, options).wcss);
  }
  return curve;
}

std::vector<std::size_t> choose_representatives(const ClusterModel & model, const Eigen::MatrixXd & points)
{
  if (model.k < 1 || static_cast<Eigen::Index>(model.assignments.size()) != points.rows() ||
      model.centroids.rows() != model.k || model.centroids.cols() != points.cols())
  {
    throw Error(Errc::InconsistentModel, "cluster model does not match the points");
  }
  std::vector<std::size_t> reps;
  reps.reserve(static_cast<std::size_t>(model.k));
  for (int c = 0; c < model.k; ++c)
  {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < model.assignments.size(); ++i)
    {
      if (model.assignments[i] != c)
      {
        continue;
      }
      const double d = (points.row(static_cast<Eigen::Index>(i)) - model.centroids.row(c)).squaredNorm();
      if (d < best_d)
      {
        best_d = d;
        best = i;
        found = true;
      }
    }
    if (!found)
    {
      throw Error(Errc::InconsistentModel, "cluster " + std::to_string(c) + " has no members");
    }
    reps.push_back(best);
  }
  return reps;
}

std::vector<std::string> choose_representatives(const ClusterModel & model, const Eigen::MatrixXd & points,
                                                const std::vector<std::string> & ids)
{
  if (ids.size() != static_cast<std::size_t>(points.rows()))
  {
    throw Error(Errc::InconsistentModel, "id list does not match the points");
  }
  std::vector<std::string> out;
  for (std::size_t i : choose_representatives(model, points))
  {
    out.push_back(ids[i]);
  }
  return out;
}

} // namespace stainnorm
