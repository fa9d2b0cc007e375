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

// Per-pixel math shared by the serial and OpenMP kernels. Both loop
// variants call exactly these functions so their outputs agree bit for bit.

#include "stainnorm/stain_matrix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace stainnorm::pixel
{

using Mat3 = std::array<std::array<double, 3>, 3>;

/// RGB -> LMS cone response used by the Reinhard colour transfer.
inline constexpr Mat3 kRgbToLms{ { { 0.3811, 0.5783, 0.0402 },
                                   { 0.1967, 0.7244, 0.0782 },
                                   { 0.0241, 0.1288, 0.8444 } } };

constexpr Mat3 inverse(const Mat3 & m)
{
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  return { { { c00 / det, (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det, (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det },
             { c01 / det, (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det, (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det },
             { c02 / det, (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det, (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det } } };
}

inline constexpr Mat3 kLmsToRgb = inverse(kRgbToLms);

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt3 = 0.57735026918962576451;
inline constexpr double kInvSqrt6 = 0.40824829046386301637;

/// LMS responses below one intensity level are clamped before the log.
inline constexpr double kLmsFloor = 1.0;

inline std::array<double, 3> rgb_to_lab(double r, double g, double b)
{
  std::array<double, 3> log_lms{};
  for (int i = 0; i < 3; ++i)
  {
    const double v = kRgbToLms[i][0] * r + kRgbToLms[i][1] * g + kRgbToLms[i][2] * b;
    log_lms[i] = std::log10(std::max(v, kLmsFloor));
  }
  const double L = log_lms[0];
  const double M = log_lms[1];
  const double S = log_lms[2];
  return { (L + M + S) * kInvSqrt3, (L + M - 2.0 * S) * kInvSqrt6, (L - M) * kInvSqrt2 };
}

/// Inverse of rgb_to_lab before quantisation; result is unclamped RGB.
inline std::array<double, 3> lab_to_rgb_exact(double l, double alpha, double beta)
{
  const double a = l * kInvSqrt3;
  const double b = alpha * kInvSqrt6;
  const double c = beta * kInvSqrt2;
  const std::array<double, 3> lms{ std::pow(10.0, a + b + c), std::pow(10.0, a + b - c), std::pow(10.0, a - 2.0 * b) };
  std::array<double, 3> rgb{};
  for (int i = 0; i < 3; ++i)
  {
    rgb[i] = kLmsToRgb[i][0] * lms[0] + kLmsToRgb[i][1] * lms[1] + kLmsToRgb[i][2] * lms[2];
  }
  return rgb;
}

/// Clamp into [0, 255] and round half up.
inline std::uint8_t quantize(double v)
{
  if (!(v > 0.0))
  {
    return 0;
  }
  if (v >= 255.0)
  {
    return 255;
  }
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

/// Optical density of a single intensity sample; intensities below one are
/// clamped to one so black maps to a finite density.
inline double optical_density(double intensity, double background)
{
  return -std::log10(std::max(intensity, 1.0) / background);
}

inline double intensity_from_od(double od, double background)
{
  return background * std::pow(10.0, -od);
}

/// Gram data for the two-stain least-squares problem.
struct StainSystem
{
  Vec3 s0{};
  Vec3 s1{};
  double g00 = 0;
  double g01 = 0;
  double g11 = 0;
  double det = 0;

  explicit StainSystem(const StainMatrix & stains)
    : s0(stains.columns[0])
    , s1(stains.columns[1])
    , g00(dot(s0, s0))
    , g01(dot(s0, s1))
    , g11(dot(s1, s1))
    , det(g00 * g11 - g01 * g01)
  {}
};

/// Exact minimiser of |od - S h|^2 + lambda (h0 + h1) over h >= 0. With
/// lambda = 0 this is two-variable NNLS. Candidates are the four active sets
/// of the KKT system; the best feasible one wins.
inline std::array<double, 2> solve_two_stain(const StainSystem & sys, double o0, double o1, double o2, double lambda)
{
  const double b0 = sys.s0[0] * o0 + sys.s0[1] * o1 + sys.s0[2] * o2;
  const double b1 = sys.s1[0] * o0 + sys.s1[1] * o1 + sys.s1[2] * o2;
  const double r0 = b0 - 0.5 * lambda;
  const double r1 = b1 - 0.5 * lambda;

  // f(h) minus the constant |od|^2.
  auto objective = [&](double h0, double h1) {
    return -2.0 * (b0 * h0 + b1 * h1) + sys.g00 * h0 * h0 + 2.0 * sys.g01 * h0 * h1 + sys.g11 * h1 * h1 +
           lambda * (h0 + h1);
  };

  std::array<double, 2> best{ 0.0, 0.0 };
  double best_f = 0.0;

  if (sys.det > 0.0)
  {
    const double h0 = (sys.g11 * r0 - sys.g01 * r1) / sys.det;
    const double h1 = (sys.g00 * r1 - sys.g01 * r0) / sys.det;
    if (h0 > 0.0 && h1 > 0.0)
    {
      return { h0, h1 };
    }
  }
  if (r0 > 0.0 && sys.g00 > 0.0)
  {
    const double h0 = r0 / sys.g00;
    const double f = objective(h0, 0.0);
    if (f < best_f)
    {
      best = { h0, 0.0 };
      best_f = f;
    }
  }
  if (r1 > 0.0 && sys.g11 > 0.0)
  {
    const double h1 = r1 / sys.g11;
    const double f = objective(0.0, h1);
    if (f < best_f)
    {
      best = { 0.0, h1 };
      best_f = f;
    }
  }
  return best;
}

/// Histogram bin for `x` over [lo, hi]; out-of-range values land in the end
/// bins.
inline std::size_t bin_index(double x, double lo, double hi, std::size_t bins)
{
  const double t = (x - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(t > 0.0))
  {
    return 0;
  }
  if (t >= static_cast<double>(bins))
  {
    return bins - 1;
  }
  return static_cast<std::size_t>(t);
}

/// Circular index into [0, n).
inline std::size_t wrap(std::ptrdiff_t i, std::size_t n)
{
  const auto m = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t r = i % m;
  return static_cast<std::size_t>(r < 0 ? r + m : r);
}

} // namespace stainnorm::pixel
