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

#include "stainnorm/kernels.hpp"
#include "stainnorm/pixel_ops.hpp"

#include <vector>

namespace stainnorm::kernels::serial
{

void rgb_to_lab(std::span<const std::uint8_t> rgb, std::span<float> l, std::span<float> alpha, std::span<float> beta)
{
  for (std::size_t i = 0; i < l.size(); ++i)
  {
    const auto lab = pixel::rgb_to_lab(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    l[i] = static_cast<float>(lab[0]);
    alpha[i] = static_cast<float>(lab[1]);
    beta[i] = static_cast<float>(lab[2]);
  }
}

void lab_to_rgb(std::span<const float> l, std::span<const float> alpha, std::span<const float> beta,
                std::span<std::uint8_t> rgb)
{
  for (std::size_t i = 0; i < l.size(); ++i)
  {
    const auto v = pixel::lab_to_rgb_exact(l[i], alpha[i], beta[i]);
    rgb[3 * i] = pixel::quantize(v[0]);
    rgb[3 * i + 1] = pixel::quantize(v[1]);
    rgb[3 * i + 2] = pixel::quantize(v[2]);
  }
}

void rgb_to_od(std::span<const std::uint8_t> rgb, double background, MutableOdPlanes od)
{
  for (std::size_t i = 0; i < od.r.size(); ++i)
  {
    od.r[i] = static_cast<float>(pixel::optical_density(rgb[3 * i], background));
    od.g[i] = static_cast<float>(pixel::optical_density(rgb[3 * i + 1], background));
    od.b[i] = static_cast<float>(pixel::optical_density(rgb[3 * i + 2], background));
  }
}

void od_to_rgb(OdPlanes od, double background, std::span<std::uint8_t> rgb)
{
  for (std::size_t i = 0; i < od.r.size(); ++i)
  {
    rgb[3 * i] = pixel::quantize(pixel::intensity_from_od(od.r[i], background));
    rgb[3 * i + 1] = pixel::quantize(pixel::intensity_from_od(od.g[i], background));
    rgb[3 * i + 2] = pixel::quantize(pixel::intensity_from_od(od.b[i], background));
  }
}

Moments plane_moments(std::span<const float> plane)
{
  if (plane.empty())
  {
    return {};
  }
  const auto n = static_cast<double>(plane.size());
  double sum = 0.0;
  for (float v : plane)
  {
    sum += v;
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (float v : plane)
  {
    const double d = v - mean;
    ss += d * d;
  }
  return { mean, ss / n };
}

std::uint64_t channel_sum(std::span<const std::uint8_t> rgb, std::size_t channel)
{
  std::uint64_t sum = 0;
  for (std::size_t i = channel; i < rgb.size(); i += 3)
  {
    sum += rgb[i];
  }
  return sum;
}

void histogram_counts(std::span<const float> plane, double lo, double hi, std::span<std::uint64_t> counts)
{
  std::fill(counts.begin(), counts.end(), 0);
  for (float v : plane)
  {
    ++counts[pixel::bin_index(v, lo, hi, counts.size())];
  }
}

void histogram_counts_u8(std::span<const std::uint8_t> rgb, std::size_t channel, std::span<std::uint64_t> counts)
{
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = channel; i < rgb.size(); i += 3)
  {
    ++counts[rgb[i]];
  }
}

OdGram od_gram(OdPlanes od, double threshold)
{
  OdGram g;
  for (std::size_t i = 0; i < od.r.size(); ++i)
  {
    const double r = od.r[i];
    const double gg = od.g[i];
    const double b = od.b[i];
    if (r < threshold && gg < threshold && b < threshold)
    {
      continue;
    }
    g.xx[0] += r * r;
    g.xx[1] += r * gg;
    g.xx[2] += r * b;
    g.xx[3] += gg * gg;
    g.xx[4] += gg * b;
    g.xx[5] += b * b;
    ++g.count;
  }
  return g;
}

void solve_concentrations(OdPlanes od, const StainMatrix & stains, double lambda, std::span<float> h,
                          std::span<float> e)
{
  const pixel::StainSystem sys(stains);
  for (std::size_t i = 0; i < od.r.size(); ++i)
  {
    const auto c = pixel::solve_two_stain(sys, od.r[i], od.g[i], od.b[i], lambda);
    h[i] = static_cast<float>(c[0]);
    e[i] = static_cast<float>(c[1]);
  }
}

void compose_od(const StainMatrix & stains, std::span<const float> h, std::span<const float> e,
                std::array<double, 2> scale, MutableOdPlanes od)
{
  const Vec3 & s0 = stains.columns[0];
  const Vec3 & s1 = stains.columns[1];
  for (std::size_t i = 0; i < h.size(); ++i)
  {
    const double ch = h[i] * scale[0];
    const double ce = e[i] * scale[1];
    od.r[i] = static_cast<float>(s0[0] * ch + s1[0] * ce);
    od.g[i] = static_cast<float>(s0[1] * ch + s1[1] * ce);
    od.b[i] = static_cast<float>(s0[2] * ch + s1[2] * ce);
  }
}

void gaussian_blur_wrap(std::span<const double> in, std::size_t width, std::size_t height,
                        std::span<const double> taps, std::span<double> out)
{
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  std::vector<double> tmp(in.size());
  for (std::size_t y = 0; y < height; ++y)
  {
    for (std::size_t x = 0; x < width; ++x)
    {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
      {
        acc += taps[static_cast<std::size_t>(k + radius)] *
               in[y * width + pixel::wrap(static_cast<std::ptrdiff_t>(x) + k, width)];
      }
      tmp[y * width + x] = acc;
    }
  }
  for (std::size_t y = 0; y < height; ++y)
  {
    for (std::size_t x = 0; x < width; ++x)
    {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
      {
        acc += taps[static_cast<std::size_t>(k + radius)] *
               tmp[pixel::wrap(static_cast<std::ptrdiff_t>(y) + k, height) * width + x];
      }
      out[y * width + x] = acc;
    }
  }
}

void downsample_mean(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height, std::size_t factor,
                     std::span<std::uint8_t> out)
{
  const std::size_t ow = (width + factor - 1) / factor;
  const std::size_t oh = (height + factor - 1) / factor;
  for (std::size_t oy = 0; oy < oh; ++oy)
  {
    for (std::size_t ox = 0; ox < ow; ++ox)
    {
      std::array<std::uint64_t, 3> sum{};
      std::uint64_t count = 0;
      for (std::size_t y = oy * factor; y < std::min(height, (oy + 1) * factor); ++y)
      {
        for (std::size_t x = ox * factor; x < std::min(width, (ox + 1) * factor); ++x)
        {
          for (std::size_t c = 0; c < 3; ++c)
          {
            sum[c] += rgb[(y * width + x) * 3 + c];
          }
          ++count;
        }
      }
      for (std::size_t c = 0; c < 3; ++c)
      {
        out[(oy * ow + ox) * 3 + c] = static_cast<std::uint8_t>((sum[c] + count / 2) / count);
      }
    }
  }
}

} // namespace stainnorm::kernels::serial
