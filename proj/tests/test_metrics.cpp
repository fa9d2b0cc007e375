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

#include "support/synthetic.hpp"

#include "stainnorm/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace stainnorm;

namespace
{

RgbImage pattern_a()
{
  RgbImage img(23, 17);
  for (std::size_t y = 0; y < 17; ++y)
  {
    for (std::size_t x = 0; x < 23; ++x)
    {
      for (std::size_t c = 0; c < 3; ++c)
      {
        img.at(x, y, c) = std::uint8_t((x * 37 + y * 11 + c * 53) % 256);
      }
    }
  }
  return img;
}

RgbImage pattern_b()
{
  RgbImage img(23, 17);
  for (std::size_t y = 0; y < 17; ++y)
  {
    for (std::size_t x = 0; x < 23; ++x)
    {
      for (std::size_t c = 0; c < 3; ++c)
      {
        img.at(x, y, c) = std::uint8_t((x * x + 3 * y + c * 29 + ((x * y) % 7) * 9) % 256);
      }
    }
  }
  return img;
}

RgbImage brighter(const RgbImage & img, int delta)
{
  RgbImage out = img;
  for (auto & v : out.data())
  {
    v = std::uint8_t(std::clamp(int(v) + delta, 0, 255));
  }
  return out;
}

RgbImage rolled(const RgbImage & img, std::size_t dx, std::size_t dy)
{
  RgbImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
  {
    for (std::size_t x = 0; x < img.width(); ++x)
    {
      for (std::size_t c = 0; c < 3; ++c)
      {
        out.at((x + dx) % img.width(), (y + dy) % img.height(), c) = img.at(x, y, c);
      }
    }
  }
  return out;
}

const std::vector<double> kP{ 0.1, 0.2, 0.3, 0.4 };
const std::vector<double> kQ{ 0.4, 0.3, 0.2, 0.1 };

} // namespace

TEST_SUITE("metrics")
{
  TEST_CASE("histogram scores against scipy oracles")
  {
    CHECK(histogram_intersection(kP, kQ) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(*histogram_pcc(kP, kQ) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(histogram_euclidean(kP, kQ) == doctest::Approx(0.44721359549995798).epsilon(1e-12));
    CHECK(js_divergence(kP, kQ) == doctest::Approx(0.15356065532898464).epsilon(1e-12));
    const std::vector<double> half{ 0.5, 0.5 };
    const std::vector<double> point{ 1.0, 0.0 };
    CHECK(js_divergence(half, point) == doctest::Approx(0.31127812445913278).epsilon(1e-12));
  }

  TEST_CASE("histogram score identities")
  {
    CHECK(histogram_intersection(kP, kP) == doctest::Approx(1.0));
    CHECK(*histogram_pcc(kP, kP) == doctest::Approx(1.0));
    CHECK(histogram_euclidean(kP, kP) == 0.0);
    CHECK(js_divergence(kP, kP) == 0.0);
    CHECK(js_divergence(kP, kQ) == js_divergence(kQ, kP));
    const std::vector<double> a{ 1.0, 0.0 };
    const std::vector<double> b{ 0.0, 1.0 };
    CHECK(js_divergence(a, b) == doctest::Approx(1.0));
    CHECK(histogram_intersection(a, b) == 0.0);
    const std::vector<double> flat{ 0.25, 0.25, 0.25, 0.25 };
    CHECK_FALSE(histogram_pcc(flat, kP).has_value());
    const std::vector<double> short_q{ 0.5, 0.5 };
    CHECK_THROWS_AS(histogram_intersection(kP, short_q), Error);
  }

  TEST_CASE("js divergence is bounded on random histograms")
  {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t)
    {
      std::vector<double> p(16);
      std::vector<double> q(16);
      double sp = 0.0;
      double sq = 0.0;
      for (std::size_t i = 0; i < 16; ++i)
      {
        p[i] = u(rng) < 0.3 ? 0.0 : u(rng);
        q[i] = u(rng);
        sp += p[i];
        sq += q[i];
      }
      for (std::size_t i = 0; i < 16; ++i)
      {
        p[i] /= sp;
        q[i] /= sq;
      }
      const double js = js_divergence(p, q);
      CHECK(js >= 0.0);
      CHECK(js <= 1.0);
      const double inter = histogram_intersection(p, q);
      CHECK(inter >= 0.0);
      CHECK(inter <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("ssim against the gaussian-filter oracle")
  {
    const RgbImage a = pattern_a();
    CHECK(ssim(a, pattern_b()) == doctest::Approx(-0.16837186202314355).epsilon(1e-9));
    CHECK(ssim(a, brighter(a, 20)) == doctest::Approx(0.9889966283986622).epsilon(1e-9));
  }

  TEST_CASE("ssim identities")
  {
    const RgbImage a = pattern_a();
    const RgbImage b = pattern_b();
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    // Periodic boundaries make SSIM invariant under joint cyclic shifts.
    CHECK(ssim(rolled(a, 5, 3), rolled(b, 5, 3)) == doctest::Approx(ssim(a, b)).epsilon(1e-9));
    // Constant images: only the luminance term remains.
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    CHECK(ssim(RgbImage::filled(12, 12, { 0, 0, 0 }), RgbImage::filled(12, 12, { 255, 255, 255 })) ==
          doctest::Approx(c1 / (255.0 * 255.0 + c1)).epsilon(1e-9));
    CHECK_THROWS_AS(ssim(a, RgbImage::filled(4, 4, { 0, 0, 0 })), Error);
  }

  TEST_CASE("luminance weights")
  {
    const auto l = luminance(RgbImage::filled(1, 1, { 100, 50, 200 }));
    CHECK(l[0] == doctest::Approx(0.299 * 100 + 0.587 * 50 + 0.114 * 200));
  }

  TEST_CASE("evaluate_pair overloads agree")
  {
    const RgbImage ref = testing::diverse_slide(0, 64, 64);
    const RgbImage orig = testing::diverse_slide(1, 64, 64);
    const RgbImage norm = testing::diverse_slide(2, 64, 64);
    const MetricReport a = evaluate_pair(norm, ref, orig);
    const MetricReport b = evaluate_pair(norm, lab_histograms(ref), orig);
    CHECK(a.histogram.intersection == b.histogram.intersection);
    CHECK(a.histogram.js_divergence == b.histogram.js_divergence);
    CHECK(a.ssim == b.ssim);
    CHECK(a.red_blue_ratio == doctest::Approx(red_blue_ratio(norm)));
    const MetricReport self = evaluate_pair(ref, ref, ref);
    CHECK(self.histogram.intersection == doctest::Approx(1.0));
    CHECK(self.histogram.js_divergence == doctest::Approx(0.0));
    CHECK(self.ssim == doctest::Approx(1.0));
  }

  TEST_CASE("csv formatting")
  {
    CHECK(format_fixed(0.5) == "0.500000");
    CHECK(format_fixed(-1e-9) == "0.000000");
    CHECK(format_fixed(std::nan("")) == "");
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(metrics_csv_header() == "image_id,method,intersection,pcc,euclidean,js_divergence,ssim,red_blue_ratio");
    MetricReport r;
    r.image_id = "s1";
    r.method = "reinhard";
    r.histogram.intersection = 0.9;
    r.histogram.euclidean = 0.1;
    r.histogram.js_divergence = 0.05;
    r.ssim = std::nan("");
    r.red_blue_ratio = 1.25;
    CHECK(metrics_csv_row(r) == "s1,reinhard,0.900000,,0.100000,0.050000,,1.250000");
  }
}
