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
#include "stainnorm/parallel.hpp"
#include "stainnorm/pixel_ops.hpp"

#include <vector>

namespace stainnorm::kernels::omp
{

namespace
{

std::ptrdiff_t signed_size(std::size_t n)
{
  return static_cast<std::ptrdiff_t>(n);
}

} // namespace

void rgb_to_lab(std::span<const std::uint8_t> rgb, std::span<float> l, std::span<float> alpha, std::span<float> beta)
{
  const std::ptrdiff_t n = signed_size(l.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
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
  const std::ptrdiff_t n = signed_size(l.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    const auto v = pixel::lab_to_rgb_exact(l[i], alpha[i], beta[i]);
    rgb[3 * i] = pixel::quantize(v[0]);
    rgb[3 * i + 1] = pixel::quantize(v[1]);
    rgb[3 * i + 2] = pixel::quantize(v[2]);
  }
}

void rgb_to_od(std::span<const std::uint8_t> rgb, double background, MutableOdPlanes od)
{
  // 8-bit input: tabulate the 256 possible densities once.
  std::array<float, 256> lut{};
  for (std::size_t v = 0; v < lut.size(); ++v)
  {
    lut[v] = static_cast<float>(pixel::optical_density(static_cast<double>(v), background));
  }
  const std::ptrdiff_t n = signed_size(od.r.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    od.r[i] = lut[rgb[3 * i]];
    od.g[i] = lut[rgb[3 * i + 1]];
    od.b[i] = lut[rgb[3 * i + 2]];
  }
}

void od_to_rgb(OdPlanes od, double background, std::span<std::uint8_t> rgb)
{
  const std::ptrdiff_t n = signed_size(od.r.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
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
  const auto plus = [](double a, double b) { return a + b; };
  const double sum = parallel::chunked_reduce(
    plane.size(),
    0.0,
    [&](std::size_t begin, std::size_t end) {
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i)
      {
        s += plane[i];
      }
      return s;
    },
    plus);
  const double mean = sum / n;
  const double ss = parallel::chunked_reduce(
    plane.size(),
    0.0,
    [&](std::size_t begin, std::size_t end) {
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i)
      {
        const double d = plane[i] - mean;
        s += d * d;
      }
      return s;
    },
    plus);
  return { mean, ss / n };
}

std::uint64_t channel_sum(std::span<const std::uint8_t> rgb, std::size_t channel)
{
  const std::ptrdiff_t n = signed_size(rgb.size() / 3);
  std::uint64_t sum = 0;
#pragma omp parallel for schedule(static) reduction(+ : sum)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    sum += rgb[3 * static_cast<std::size_t>(i) + channel];
  }
  return sum;
}

namespace
{

template <typename BinOf>
void parallel_histogram(std::ptrdiff_t n, std::span<std::uint64_t> counts, BinOf bin_of)
{
  std::fill(counts.begin(), counts.end(), 0);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(counts.size(), 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i)
    {
      ++local[bin_of(i)];
    }
#pragma omp critical(stainnorm_histogram_merge)
    for (std::size_t k = 0; k < counts.size(); ++k)
    {
      counts[k] += local[k];
    }
  }
}

} // namespace

void histogram_counts(std::span<const float> plane, double lo, double hi, std::span<std::uint64_t> counts)
{
  const std::size_t bins = counts.size();
  parallel_histogram(signed_size(plane.size()), counts,
                     [&](std::ptrdiff_t i) { return pixel::bin_index(plane[i], lo, hi, bins); });
}

void histogram_counts_u8(std::span<const std::uint8_t> rgb, std::size_t channel, std::span<std::uint64_t> counts)
{
  parallel_histogram(signed_size(rgb.size() / 3), counts,
                     [&](std::ptrdiff_t i) { return rgb[3 * static_cast<std::size_t>(i) + channel]; });
}

OdGram od_gram(OdPlanes od, double threshold)
{
  return parallel::chunked_reduce(
    od.r.size(),
    OdGram{},
    [&](std::size_t begin, std::size_t end) {
      OdGram g;
      for (std::size_t i = begin; i < end; ++i)
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
    },
    [](OdGram a, const OdGram & b) {
      for (std::size_t k = 0; k < a.xx.size(); ++k)
      {
        a.xx[k] += b.xx[k];
      }
      a.count += b.count;
      return a;
    });
}

void solve_concentrations(OdPlanes od, const StainMatrix & stains, double lambda, std::span<float> h,
                          std::span<float> e)
{
  const pixel::StainSystem sys(stains);
  const std::ptrdiff_t n = signed_size(od.r.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
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
  const std::ptrdiff_t n = signed_size(h.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
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
  const std::ptrdiff_t rows = signed_size(height);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < rows; ++y)
  {
    const std::size_t row = static_cast<std::size_t>(y) * width;
    for (std::size_t x = 0; x < width; ++x)
    {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
      {
        acc += taps[static_cast<std::size_t>(k + radius)] * in[row + pixel::wrap(static_cast<std::ptrdiff_t>(x) + k, width)];
      }
      tmp[row + x] = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < rows; ++y)
  {
    for (std::size_t x = 0; x < width; ++x)
    {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
      {
        acc += taps[static_cast<std::size_t>(k + radius)] * tmp[pixel::wrap(y + k, height) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
}

void downsample_mean(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height, std::size_t factor,
                     std::span<std::uint8_t> out)
{
  const std::size_t ow = (width + factor - 1) / factor;
  const std::ptrdiff_t oh = signed_size((height + factor - 1) / factor);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oy = 0; oy < oh; ++oy)
  {
    const std::size_t y0 = static_cast<std::size_t>(oy) * factor;
    const std::size_t y1 = std::min(height, y0 + factor);
    for (std::size_t ox = 0; ox < ow; ++ox)
    {
      std::array<std::uint64_t, 3> sum{};
      std::uint64_t count = 0;
      for (std::size_t y = y0; y < y1; ++y)
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
        out[(static_cast<std::size_t>(oy) * ow + ox) * 3 + c] = static_cast<std::uint8_t>((sum[c] + count / 2) / count);
      }
    }
  }
}

} // namespace stainnorm::kernels::omp
