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

#include "stainnorm/image.hpp"
#include "stainnorm/stain_matrix.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace stainnorm
{

/// Per-pixel hematoxylin and eosin densities.
struct ConcentrationMap
{
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> hematoxylin;
  std::vector<float> eosin;
};

struct MacenkoParams
{
  double od_threshold = 0.15;
  double angle_percentile = 1.0;
  double concentration_percentile = 99.0;

  void validate() const;
};

struct SnmfParams
{
  double sparsity_lambda = 0.1;
  int max_iterations = 100;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  /// When nonzero, factorise a seeded random subset of this many foreground
  /// pixels instead of all of them.
  std::size_t max_samples = 0;

  void validate() const;
};

enum class ConcentrationSolver
{
  LeastSquares, ///< nonnegative least squares
  SparseCoding, ///< nonnegative lasso with the given lambda
};

struct SnmfResult
{
  StainMatrix stains;
  Eigen::MatrixX2d concentrations; ///< N x 2, row i belongs to input row i
  std::vector<double> objective;   ///< objective after init and after every iteration
  int iterations = 0;
  bool converged = false;
};

/// Minimum number of foreground pixels the estimators accept.
inline constexpr std::size_t kMinTissuePixels = 100;

/// Foreground pixels (any channel OD >= threshold) as an N x 3 matrix.
Eigen::MatrixX3d foreground_od(const PlanarImage & od, double threshold);

/// Reorders and normalises two raw directions into a StainMatrix: columns
/// become unit length, the one with the larger blue OD is hematoxylin (ties
/// within 1e-6 go to the larger red OD).
StainMatrix order_stains(const Vec3 & a, const Vec3 & b);

StainMatrix estimate_stains_macenko(const PlanarImage & od, const MacenkoParams & params = {});

/// Sparse NMF of V (N x 3) into H (N x 2) and W (3 x 2):
/// minimise |V - H W^T|_F^2 + lambda sum(H) over H, W >= 0, unit-norm W
/// columns. Alternates an exact per-pixel nonnegative-lasso step for H with a
/// backtracking projected-gradient step for W; W starts at the Macenko
/// estimate of V. The objective never increases.
SnmfResult snmf_factorize(const Eigen::MatrixX3d & od_pixels, const SnmfParams & params = {},
                          const MacenkoParams & init = {});

StainMatrix estimate_stains_vahadane(const PlanarImage & od, const SnmfParams & params = {},
                                     const MacenkoParams & masking = {});

ConcentrationMap compute_concentrations(const PlanarImage & od, const StainMatrix & stains,
                                        ConcentrationSolver solver = ConcentrationSolver::LeastSquares,
                                        double lambda = 0.0);

/// OD = S * diag(scale) * c per pixel, mapped back to RGB.
RgbImage reconstruct_rgb(const StainMatrix & stains, const ConcentrationMap & conc, double background_intensity = 255.0,
                         std::array<double, 2> scale = { 1.0, 1.0 });

/// Linear-interpolation percentile (p in [0, 100]) of `values`.
double percentile(std::vector<double> values, double p);
double percentile(std::span<const float> values, double p);

} // namespace stainnorm
