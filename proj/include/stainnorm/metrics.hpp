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

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stainnorm
{

double histogram_intersection(std::span<const double> p, std::span<const double> q);

/// Pearson correlation of two weight vectors; empty when either vector has
/// zero variance.
std::optional<double> histogram_pcc(std::span<const double> p, std::span<const double> q);

double histogram_euclidean(std::span<const double> p, std::span<const double> q);

/// Jensen-Shannon divergence with base-2 logarithms, so the result is in
/// [0, 1].
double js_divergence(std::span<const double> p, std::span<const double> q);

struct ChannelMetrics
{
  double intersection = 0.0;
  std::optional<double> pcc;
  double euclidean = 0.0;
  double js_divergence = 0.0;
};

/// Per-channel scores and their unweighted channel means. A channel whose
/// PCC is undefined is left out of the PCC mean and reported in `warnings`.
struct HistogramMetricSet
{
  double intersection = 0.0;
  std::optional<double> pcc;
  double euclidean = 0.0;
  double js_divergence = 0.0;
  std::array<ChannelMetrics, 3> per_channel{};
  std::vector<std::string> warnings;
};

HistogramMetricSet histogram_metrics(const std::array<Histogram, 3> & src, const std::array<Histogram, 3> & ref);

struct SsimParams
{
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Luminance image with ITU-R 601 weights, unquantised.
std::vector<double> luminance(const RgbImage & img);

/// Mean SSIM over the luminance channel. Local statistics use a normalised
/// Gaussian window with periodic boundaries, so every pixel contributes.
double ssim(const RgbImage & a, const RgbImage & b, const SsimParams & params = {});

struct MetricReport
{
  std::string image_id;
  std::string method;
  HistogramMetricSet histogram;
  double ssim = 0.0;
  double red_blue_ratio = 0.0;
};

/// lαβ histograms of `reference` with the fixed channel ranges.
std::array<Histogram, 3> lab_histograms(const RgbImage & img, std::size_t bins = kDefaultBins);

/// Histogram scores of `normalized` against `reference` in lαβ, SSIM of
/// `normalized` against `original`, and the red/blue ratio of `normalized`.
MetricReport evaluate_pair(const RgbImage & normalized, const RgbImage & reference, const RgbImage & original,
                           std::size_t bins = kDefaultBins, const SsimParams & params = {});

MetricReport evaluate_pair(const RgbImage & normalized, const std::array<Histogram, 3> & reference_histograms,
                           const RgbImage & original, const SsimParams & params = {});

/// Fixed-point, locale-independent formatting with six decimals.
std::string format_fixed(double v, int decimals = 6);

/// image_id,method,intersection,pcc,euclidean,js_divergence,ssim,red_blue_ratio
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricReport & report);

/// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string & s);

} // namespace stainnorm
