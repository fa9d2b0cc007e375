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

#include "stainnorm/colorspace.hpp"
#include "stainnorm/kernels.hpp"
#include "stainnorm/pixel_ops.hpp"

#include <cmath>
#include <numeric>

namespace stainnorm
{

namespace
{

void require_space(const PlanarImage & img, ColorSpace space, const char * what)
{
  if (img.space() != space)
  {
    throw Error(Errc::WrongSpace, what);
  }
}

void require_background(double background)
{
  if (!(background > 0.0) || !std::isfinite(background))
  {
    throw Error(Errc::InvalidBackground, "background intensity must be positive");
  }
}

Histogram normalise(const std::vector<std::uint64_t> & counts, double lo, double hi)
{
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  const auto total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{ 0 }));
  h.weights.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
  {
    h.weights[i] = static_cast<double>(counts[i]) / total;
  }
  return h;
}

void validate_histogram_args(std::size_t bin_count, const ChannelRanges & ranges)
{
  if (bin_count < 2)
  {
    throw Error(Errc::InvalidRange, "histograms need at least two bins");
  }
  for (const auto & r : ranges)
  {
    if (!(r[1] > r[0]))
    {
      throw Error(Errc::InvalidRange, "histogram range must satisfy hi > lo");
    }
  }
}

} // namespace

PlanarImage rgb_to_lab(const RgbImage & img)
{
  PlanarImage lab(img.width(), img.height(), ColorSpace::Lab);
  kernels::omp::rgb_to_lab(img.data(), lab.plane(0), lab.plane(1), lab.plane(2));
  return lab;
}

RgbImage lab_to_rgb(const PlanarImage & lab)
{
  require_space(lab, ColorSpace::Lab, "lab_to_rgb expects an lαβ image");
  RgbImage out(lab.width(), lab.height());
  kernels::omp::lab_to_rgb(lab.plane(0), lab.plane(1), lab.plane(2), out.data());
  return out;
}

PlanarImage rgb_to_od(const RgbImage & img, double background_intensity)
{
  require_background(background_intensity);
  PlanarImage od(img.width(), img.height(), ColorSpace::OpticalDensity);
  kernels::omp::rgb_to_od(img.data(), background_intensity, { od.plane(0), od.plane(1), od.plane(2) });
  return od;
}

RgbImage od_to_rgb(const PlanarImage & od, double background_intensity)
{
  require_space(od, ColorSpace::OpticalDensity, "od_to_rgb expects an optical-density image");
  require_background(background_intensity);
  RgbImage out(od.width(), od.height());
  kernels::omp::od_to_rgb({ od.plane(0), od.plane(1), od.plane(2) }, background_intensity, out.data());
  return out;
}

double optical_density(double intensity, double background_intensity)
{
  require_background(background_intensity);
  return pixel::optical_density(intensity, background_intensity);
}

double intensity_from_optical_density(double od, double background_intensity)
{
  require_background(background_intensity);
  return pixel::intensity_from_od(od, background_intensity);
}

ChannelStats channel_stats(const PlanarImage & img)
{
  if (img.pixel_count() == 0)
  {
    throw Error(Errc::EmptyImage, "channel_stats of an empty image");
  }
  ChannelStats stats;
  for (std::size_t c = 0; c < 3; ++c)
  {
    const auto m = kernels::omp::plane_moments(img.plane(c));
    stats.mean[c] = m.mean;
    stats.std[c] = std::sqrt(m.variance);
  }
  return stats;
}

std::array<Histogram, 3> channel_histograms(const PlanarImage & img, std::size_t bin_count, const ChannelRanges & ranges)
{
  validate_histogram_args(bin_count, ranges);
  if (img.pixel_count() == 0)
  {
    throw Error(Errc::EmptyImage, "histogram of an empty image");
  }
  std::array<Histogram, 3> out;
  std::vector<std::uint64_t> counts(bin_count);
  for (std::size_t c = 0; c < 3; ++c)
  {
    kernels::omp::histogram_counts(img.plane(c), ranges[c][0], ranges[c][1], counts);
    out[c] = normalise(counts, ranges[c][0], ranges[c][1]);
  }
  return out;
}

std::array<Histogram, 3> channel_histograms(const RgbImage & img, std::size_t bin_count, const ChannelRanges & ranges)
{
  validate_histogram_args(bin_count, ranges);
  if (img.empty())
  {
    throw Error(Errc::EmptyImage, "histogram of an empty image");
  }
  std::array<Histogram, 3> out;
  std::vector<std::uint64_t> counts(bin_count);
  const auto data = img.data();
  for (std::size_t c = 0; c < 3; ++c)
  {
    if (bin_count == 256 && ranges[c][0] == 0.0 && ranges[c][1] == 255.0)
    {
      kernels::omp::histogram_counts_u8(data, c, counts);
    }
    else
    {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = c; i < data.size(); i += 3)
      {
        ++counts[pixel::bin_index(data[i], ranges[c][0], ranges[c][1], bin_count)];
      }
    }
    out[c] = normalise(counts, ranges[c][0], ranges[c][1]);
  }
  return out;
}

double red_blue_ratio(const RgbImage & img)
{
  if (img.empty())
  {
    throw Error(Errc::EmptyImage, "red_blue_ratio of an empty image");
  }
  const std::uint64_t red = kernels::omp::channel_sum(img.data(), 0);
  const std::uint64_t blue = kernels::omp::channel_sum(img.data(), 2);
  if (blue == 0)
  {
    throw Error(Errc::DivideByZero, "blue channel mean is zero");
  }
  return static_cast<double>(red) / static_cast<double>(blue);
}

} // namespace stainnorm
