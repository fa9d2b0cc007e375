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

// Data-parallel inner loops. `kernels::omp` is what the library calls;
// `kernels::serial` is a straightforward single-threaded reference kept for
// tests and benchmarks. Per-pixel maps agree bit for bit between the two;
// floating-point reductions agree to rounding (serial sums in one pass,
// OpenMP sums fixed-size chunks in order).

#include "stainnorm/stain_matrix.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace stainnorm::kernels
{

struct Moments
{
  double mean = 0.0;
  double variance = 0.0; // population
};

/// Upper triangle of sum(od * od^T) over foreground pixels:
/// rr, rg, rb, gg, gb, bb.
struct OdGram
{
  std::array<double, 6> xx{};
  std::size_t count = 0;
};

struct OdPlanes
{
  std::span<const float> r;
  std::span<const float> g;
  std::span<const float> b;
};

struct MutableOdPlanes
{
  std::span<float> r;
  std::span<float> g;
  std::span<float> b;
};

#define STAINNORM_KERNEL_DECLS                                                                                         \
  void rgb_to_lab(std::span<const std::uint8_t> rgb, std::span<float> l, std::span<float> alpha,                      \
                  std::span<float> beta);                                                                              \
  void lab_to_rgb(std::span<const float> l, std::span<const float> alpha, std::span<const float> beta,                \
                  std::span<std::uint8_t> rgb);                                                                        \
  void rgb_to_od(std::span<const std::uint8_t> rgb, double background, MutableOdPlanes od);                           \
  void od_to_rgb(OdPlanes od, double background, std::span<std::uint8_t> rgb);                                         \
  Moments plane_moments(std::span<const float> plane);                                                                 \
  std::uint64_t channel_sum(std::span<const std::uint8_t> rgb, std::size_t channel);                                   \
  void histogram_counts(std::span<const float> plane, double lo, double hi, std::span<std::uint64_t> counts);          \
  void histogram_counts_u8(std::span<const std::uint8_t> rgb, std::size_t channel, std::span<std::uint64_t> counts);   \
  OdGram od_gram(OdPlanes od, double threshold);                                                                       \
  void solve_concentrations(OdPlanes od, const StainMatrix & stains, double lambda, std::span<float> h,                \
                            std::span<float> e);                                                                       \
  void compose_od(const StainMatrix & stains, std::span<const float> h, std::span<const float> e,                     \
                  std::array<double, 2> scale, MutableOdPlanes od);                                                    \
  void gaussian_blur_wrap(std::span<const double> in, std::size_t width, std::size_t height,                          \
                          std::span<const double> taps, std::span<double> out);                                        \
  void downsample_mean(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height, std::size_t factor,  \
                       std::span<std::uint8_t> out);

namespace serial
{
STAINNORM_KERNEL_DECLS
}

namespace omp
{
STAINNORM_KERNEL_DECLS
}

#undef STAINNORM_KERNEL_DECLS

} // namespace stainnorm::kernels
