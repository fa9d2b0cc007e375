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

#include "stainnorm/metrics.hpp"
#include "stainnorm/kernels.hpp"
#include "stainnorm/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace stainnorm
{

namespace
{

constexpr double kZeroVariance = 1e-30;

void require_same_length(std::span<const double> p, std::span<const double> q)
{
  if (p.size() != q.size() || p.empty())
  {
    throw Error(Errc::BinMismatch, "histograms differ in bin count");
  }
}

double kl_term(double a, double m)
{
  return a > 0.0 ? a * std::log2(a / m) : 0.0;
}

std::vector<double> gaussian_taps(std::size_t window, double sigma)
{
  std::vector<double> taps(window);
  const double centre = static_cast<double>(window / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < window; ++i)
  {
    const double d = static_cast<double>(i) - centre;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double & t : taps)
  {
    t /= sum;
  }
  return taps;
}

} // namespace

double histogram_intersection(std::span<const double> p, std::span<const double> q)
{
  require_same_length(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    s += std::min(p[i], q[i]);
  }
  return s;
}

std::optional<double> histogram_pcc(std::span<const double> p, std::span<const double> q)
{
  require_same_length(p, q);
  const auto n = static_cast<double>(p.size());
  double mp = 0.0;
  double mq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    mp += p[i];
    mq += q[i];
  }
  mp /= n;
  mq /= n;
  double spp = 0.0;
  double sqq = 0.0;
  double spq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    const double a = p[i] - mp;
    const double b = q[i] - mq;
    spp += a * a;
    sqq += b * b;
    spq += a * b;
  }
  if (spp <= kZeroVariance || sqq <= kZeroVariance)
  {
    return std::nullopt;
  }
  return std::clamp(spq / std::sqrt(spp * sqq), -1.0, 1.0);
}

double histogram_euclidean(std::span<const double> p, std::span<const double> q)
{
  require_same_length(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    const double d = p[i] - q[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double js_divergence(std::span<const double> p, std::span<const double> q)
{
  require_same_length(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    const double m = 0.5 * (p[i] + q[i]);
    s += 0.5 * kl_term(p[i], m) + 0.5 * kl_term(q[i], m);
  }
  return std::clamp(s, 0.0, 1.0);
}

HistogramMetricSet histogram_metrics(const std::array<Histogram, 3> & src, const std::array<Histogram, 3> & ref)
{
  HistogramMetricSet set;
  double pcc_sum = 0.0;
  int pcc_count = 0;
  for (std::size_t c = 0; c < 3; ++c)
  {
    if (src[c].bin_count() != ref[c].bin_count() || src[c].lo != ref[c].lo || src[c].hi != ref[c].hi)
    {
      throw Error(Errc::BinMismatch, "channel " + std::to_string(c) + " histograms use different bins or ranges");
    }
    ChannelMetrics & m = set.per_channel[c];
    m.intersection = histogram_intersection(src[c].weights, ref[c].weights);
    m.pcc = histogram_pcc(src[c].weights, ref[c].weights);
    m.euclidean = histogram_euclidean(src[c].weights, ref[c].weights);
    m.js_divergence = js_divergence(src[c].weights, ref[c].weights);
    set.intersection += m.intersection / 3.0;
    set.euclidean += m.euclidean / 3.0;
    set.js_divergence += m.js_divergence / 3.0;
    if (m.pcc)
    {
      pcc_sum += *m.pcc;
      ++pcc_count;
    }
    else
    {
      set.warnings.push_back("ZeroVariance: PCC undefined for channel " + std::to_string(c) +
                             "; excluded from the mean");
    }
  }
  if (pcc_count > 0)
  {
    set.pcc = pcc_sum / pcc_count;
  }
  return set;
}

std::vector<double> luminance(const RgbImage & img)
{
  std::vector<double> y(img.pixel_count());
  const auto d = img.data();
  const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    const auto k = static_cast<std::size_t>(i) * 3;
    y[static_cast<std::size_t>(i)] = 0.299 * d[k] + 0.587 * d[k + 1] + 0.114 * d[k + 2];
  }
  return y;
}

double ssim(const RgbImage & a, const RgbImage & b, const SsimParams & params)
{
  if (a.width() != b.width() || a.height() != b.height())
  {
    throw Error(Errc::DimensionMismatch, "SSIM needs images of equal size");
  }
  if (a.empty())
  {
    throw Error(Errc::EmptyImage, "SSIM of an empty image");
  }
  if (params.window == 0 || params.window % 2 == 0 || !(params.sigma > 0.0) || !(params.k1 > 0.0) ||
      !(params.k2 > 0.0) || !(params.dynamic_range > 0.0))
  {
    throw Error(Errc::InvalidArgument, "SSIM window must be odd and constants positive");
  }
  const std::size_t w = a.width();
  const std::size_t h = a.height();
  const std::size_t n = w * h;
  const std::vector<double> taps = gaussian_taps(params.window, params.sigma);
  const std::vector<double> x = luminance(a);
  const std::vector<double> y = luminance(b);

  std::vector<double> xx(n);
  std::vector<double> yy(n);
  std::vector<double> xy(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  std::vector<double> mu_x(n), mu_y(n), e_xx(n), e_yy(n), e_xy(n);
  kernels::omp::gaussian_blur_wrap(x, w, h, taps, mu_x);
  kernels::omp::gaussian_blur_wrap(y, w, h, taps, mu_y);
  kernels::omp::gaussian_blur_wrap(xx, w, h, taps, e_xx);
  kernels::omp::gaussian_blur_wrap(yy, w, h, taps, e_yy);
  kernels::omp::gaussian_blur_wrap(xy, w, h, taps, e_xy);

  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  const double total = parallel::chunked_reduce(
    n,
    0.0,
    [&](std::size_t begin, std::size_t end) {
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i)
      {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double vx = e_xx[i] - mx * mx;
        const double vy = e_yy[i] - my * my;
        const double cxy = e_xy[i] - mx * my;
        s += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
      return s;
    },
    [](double p, double q) { return p + q; });
  return total / static_cast<double>(n);
}

std::array<Histogram, 3> lab_histograms(const RgbImage & img, std::size_t bins)
{
  return channel_histograms(rgb_to_lab(img), bins, kLabRanges);
}

MetricReport evaluate_pair(const RgbImage & normalized, const RgbImage & reference, const RgbImage & original,
                           std::size_t bins, const SsimParams & params)
{
  return evaluate_pair(normalized, lab_histograms(reference, bins), original, params);
}

MetricReport evaluate_pair(const RgbImage & normalized, const std::array<Histogram, 3> & reference_histograms,
                           const RgbImage & original, const SsimParams & params)
{
  MetricReport report;
  report.histogram = histogram_metrics(lab_histograms(normalized, reference_histograms[0].bin_count()),
                                       reference_histograms);
  report.ssim = ssim(normalized, original, params);
  report.red_blue_ratio = red_blue_ratio(normalized);
  return report;
}

std::string format_fixed(double v, int decimals)
{
  if (!std::isfinite(v))
  {
    return "";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
  std::string s(buf, res.ptr);
  // "-0.000000" prints as "0.000000".
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos)
  {
    s.erase(0, 1);
  }
  return s;
}

std::string metrics_csv_header()
{
  return "image_id,method,intersection,pcc,euclidean,js_divergence,ssim,red_blue_ratio";
}

std::string csv_field(const std::string & s)
{
  if (s.find_first_of(",\"\n\r") == std::string::npos)
  {
    return s;
  }
  std::string out = "\"";
  for (char c : s)
  {
    if (c == '"')
    {
      out += '"';
    }
    out += c;
  }
  return out + "\"";
}

std::string metrics_csv_row(const MetricReport & r)
{
  const HistogramMetricSet & h = r.histogram;
  return csv_field(r.image_id) + "," + csv_field(r.method) + "," + format_fixed(h.intersection) + "," +
         (h.pcc ? format_fixed(*h.pcc) : std::string()) + "," + format_fixed(h.euclidean) + "," +
         format_fixed(h.js_divergence) + "," + format_fixed(r.ssim) + "," + format_fixed(r.red_blue_ratio);
}

} // namespace stainnorm
