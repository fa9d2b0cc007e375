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

#include <array>
#include <vector>

namespace stainnorm
{

struct ChannelStats
{
  std::array<double, 3> mean{};
  std::array<double, 3> std{}; // population standard deviation
};

/// Normalised histogram: weights sum to one.
struct Histogram
{
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> weights;

  std::size_t bin_count() const { return weights.size(); }
};

using ChannelRange = std::array<double, 2>;
using ChannelRanges = std::array<ChannelRange, 3>;

inline constexpr std::size_t kDefaultBins = 256;

/// Fixed per-channel lαβ ranges shared by every histogram so any two images
/// are comparable. l spans [0, sqrt(3) log10(255)], the luminance of the
/// 8-bit cube under the transform; alpha and beta cover tissue colours.
inline constexpr ChannelRanges kLabRanges{ { { 0.0, 4.1683 }, { -0.30, 0.30 }, { -0.25, 0.25 } } };
inline constexpr ChannelRanges kRgbRanges{ { { 0.0, 255.0 }, { 0.0, 255.0 }, { 0.0, 255.0 } } };

/// Reinhard lαβ: RGB (0..255) -> LMS -> log10 (LMS floored at 1) ->
/// orthonormal opponent axes.
PlanarImage rgb_to_lab(const RgbImage & img);

/// Exact inverse of rgb_to_lab; results are clamped to [0, 255] and rounded.
RgbImage lab_to_rgb(const PlanarImage & lab);

/// OD = -log10(max(v, 1) / background) per channel.
PlanarImage rgb_to_od(const RgbImage & img, double background_intensity = 255.0);

RgbImage od_to_rgb(const PlanarImage & od, double background_intensity = 255.0);

/// Scalar forms of the optical-density mapping.
double optical_density(double intensity, double background_intensity = 255.0);
double intensity_from_optical_density(double od, double background_intensity = 255.0);

ChannelStats channel_stats(const PlanarImage & img);

std::array<Histogram, 3> channel_histograms(const PlanarImage & img, std::size_t bin_count, const ChannelRanges & ranges);
std::array<Histogram, 3> channel_histograms(const RgbImage & img, std::size_t bin_count,
                                            const ChannelRanges & ranges = kRgbRanges);

/// mean(R) / mean(B) over every pixel.
double red_blue_ratio(const RgbImage & img);

} // namespace stainnorm
