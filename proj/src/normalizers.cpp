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

#include "stainnorm/normalizers.hpp"
#include "stainnorm/kernels.hpp"

#include <cmath>

namespace stainnorm
{

namespace
{

constexpr double kDegenerateStd = 1e-9;
constexpr double kDegenerateScale = 1e-12;
constexpr double kCdfSlack = 1e-12;

const char * const kChannelNames[3] = { "l", "alpha", "beta" };

StainMatrix estimate_for(Method method, const PlanarImage & od, const NormalizerOptions & options)
{
  if (method == Method::Macenko)
  {
    return estimate_stains_macenko(od, options.macenko);
  }
  return estimate_stains_vahadane(od, options.snmf, options.macenko);
}

ConcentrationMap concentrations_for(Method method, const PlanarImage & od, const StainMatrix & stains,
                                    const NormalizerOptions & options)
{
  if (method == Method::Vahadane)
  {
    return compute_concentrations(od, stains, options.vahadane_solver, options.vahadane_coding_lambda);
  }
  return compute_concentrations(od, stains, ConcentrationSolver::LeastSquares);
}

struct StainFit
{
  StainMatrix stains;
  std::array<double, 2> max_concentration{};
};

StainFit fit_stains(Method method, const RgbImage & img, const NormalizerOptions & options)
{
  const PlanarImage od = rgb_to_od(img, options.background_intensity);
  StainFit f;
  f.stains = estimate_for(method, od, options);
  const ConcentrationMap conc = concentrations_for(method, od, f.stains, options);
  f.max_concentration = { percentile(conc.hematoxylin, options.macenko.concentration_percentile),
                          percentile(conc.eosin, options.macenko.concentration_percentile) };
  return f;
}

} // namespace

std::string_view to_string(Method method)
{
  switch (method)
  {
    case Method::HistMatch:
      return "histmatch";
    case Method::Reinhard:
      return "reinhard";
    case Method::Macenko:
      return "macenko";
    case Method::Vahadane:
      return "vahadane";
  }
  return "unknown";
}

Method parse_method(std::string_view name)
{
  for (Method m : { Method::HistMatch, Method::Reinhard, Method::Macenko, Method::Vahadane })
  {
    if (name == to_string(m))
    {
      return m;
    }
  }
  throw Error(Errc::InvalidArgument, "unknown normalization method '" + std::string(name) + "'");
}

std::array<std::array<double, 256>, 3> rgb_cdfs(const RgbImage & img)
{
  if (img.empty())
  {
    throw Error(Errc::EmptyImage, "CDF of an empty image");
  }
  std::array<std::array<double, 256>, 3> cdf{};
  std::array<std::uint64_t, 256> counts{};
  const auto total = static_cast<double>(img.pixel_count());
  for (std::size_t c = 0; c < 3; ++c)
  {
    kernels::omp::histogram_counts_u8(img.data(), c, counts);
    std::uint64_t running = 0;
    for (std::size_t v = 0; v < 256; ++v)
    {
      running += counts[v];
      cdf[c][v] = static_cast<double>(running) / total;
    }
  }
  return cdf;
}

std::array<std::uint8_t, 256> match_cdf(const std::array<double, 256> & source_cdf,
                                        const std::array<double, 256> & reference_cdf)
{
  std::array<std::uint8_t, 256> lut{};
  std::size_t u = 0;
  for (std::size_t v = 0; v < 256; ++v)
  {
    // Both CDFs are non-decreasing, so the match index only moves forward.
    while (u < 255 && reference_cdf[u] < source_cdf[v] - kCdfSlack)
    {
      ++u;
    }
    lut[v] = static_cast<std::uint8_t>(u);
  }
  return lut;
}

PlanarImage reinhard_match(const PlanarImage & source_lab, const ChannelStats & source, const ChannelStats & reference,
                           std::vector<std::string> * warnings)
{
  if (source_lab.space() != ColorSpace::Lab)
  {
    throw Error(Errc::WrongSpace, "Reinhard matching expects an lαβ image");
  }
  PlanarImage out = source_lab;
  for (std::size_t c = 0; c < 3; ++c)
  {
    auto plane = out.plane(c);
    const double mu_ref = reference.mean[c];
    if (source.std[c] < kDegenerateStd)
    {
      std::fill(plane.begin(), plane.end(), static_cast<float>(mu_ref));
      if (warnings != nullptr)
      {
        warnings->push_back(std::string("reinhard: source channel ") + kChannelNames[c] +
                            " has zero deviation; pinned to reference mean " + std::to_string(mu_ref));
      }
      continue;
    }
    const double gain = reference.std[c] / source.std[c];
    const double mu_src = source.mean[c];
    const auto n = static_cast<std::ptrdiff_t>(plane.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
    {
      plane[static_cast<std::size_t>(i)] = static_cast<float>((plane[static_cast<std::size_t>(i)] - mu_src) * gain + mu_ref);
    }
  }
  return out;
}

NormalizerModel fit(Method method, const RgbImage & reference, const NormalizerOptions & options)
{
  if (reference.empty())
  {
    throw Error(Errc::EmptyImage, "reference image is empty");
  }
  NormalizerModel model;
  model.method = method;
  model.options = options;
  switch (method)
  {
    case Method::HistMatch:
      model.payload = HistMatchPayload{ rgb_cdfs(reference) };
      break;
    case Method::Reinhard:
      model.payload = ReinhardPayload{ channel_stats(rgb_to_lab(reference)) };
      break;
    case Method::Macenko:
    case Method::Vahadane:
    {
      const StainFit f = fit_stains(method, reference, options);
      model.payload = StainPayload{ f.stains, f.max_concentration };
      break;
    }
  }
  return model;
}

SourceAnalysis analyze_source(const NormalizerModel & model, const RgbImage & source)
{
  if (source.empty())
  {
    throw Error(Errc::EmptyImage, "source image is empty");
  }
  SourceAnalysis analysis;
  switch (model.method)
  {
    case Method::HistMatch:
    {
      const auto & ref = std::get<HistMatchPayload>(model.payload);
      const auto src = rgb_cdfs(source);
      SourceAnalysis::Lut lut;
      for (std::size_t c = 0; c < 3; ++c)
      {
        lut.map[c] = match_cdf(src[c], ref.cdf[c]);
      }
      analysis.state = lut;
      break;
    }
    case Method::Reinhard:
    {
      const auto & ref = std::get<ReinhardPayload>(model.payload);
      const ChannelStats src = channel_stats(rgb_to_lab(source));
      for (std::size_t c = 0; c < 3; ++c)
      {
        if (src.std[c] < kDegenerateStd)
        {
          analysis.warnings.push_back(std::string("reinhard: source channel ") + kChannelNames[c] +
                                      " has zero deviation; pinned to reference mean " +
                                      std::to_string(ref.lab_stats.mean[c]));
        }
      }
      analysis.state = SourceAnalysis::Moments{ src };
      break;
    }
    case Method::Macenko:
    case Method::Vahadane:
    {
      const auto & ref = std::get<StainPayload>(model.payload);
      const StainFit src = fit_stains(model.method, source, model.options);
      SourceAnalysis::Stains st;
      st.stains = src.stains;
      for (std::size_t k = 0; k < 2; ++k)
      {
        if (src.max_concentration[k] > kDegenerateScale)
        {
          st.scale[k] = ref.max_concentration[k] / src.max_concentration[k];
        }
        else
        {
          analysis.warnings.push_back(std::string(to_string(model.method)) + ": source " +
                                      (k == 0 ? "hematoxylin" : "eosin") +
                                      " density percentile is zero; density left unscaled");
        }
      }
      analysis.state = st;
      break;
    }
  }
  return analysis;
}

RgbImage apply_normalization(const NormalizerModel & model, const SourceAnalysis & analysis, const RgbImage & region)
{
  switch (model.method)
  {
    case Method::HistMatch:
    {
      const auto & lut = std::get<SourceAnalysis::Lut>(analysis.state);
      RgbImage out = region;
      auto data = out.data();
      const auto n = static_cast<std::ptrdiff_t>(out.pixel_count());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i)
      {
        const auto k = static_cast<std::size_t>(i) * 3;
        data[k] = lut.map[0][data[k]];
        data[k + 1] = lut.map[1][data[k + 1]];
        data[k + 2] = lut.map[2][data[k + 2]];
      }
      return out;
    }
    case Method::Reinhard:
    {
      const auto & ref = std::get<ReinhardPayload>(model.payload);
      const auto & src = std::get<SourceAnalysis::Moments>(analysis.state);
      return lab_to_rgb(reinhard_match(rgb_to_lab(region), src.lab_stats, ref.lab_stats));
    }
    case Method::Macenko:
    case Method::Vahadane:
    {
      const auto & ref = std::get<StainPayload>(model.payload);
      const auto & src = std::get<SourceAnalysis::Stains>(analysis.state);
      const PlanarImage od = rgb_to_od(region, model.options.background_intensity);
      const ConcentrationMap conc = concentrations_for(model.method, od, src.stains, model.options);
      return reconstruct_rgb(ref.stains, conc, model.options.background_intensity, src.scale);
    }
  }
  throw Error(Errc::InvalidArgument, "unknown method");
}

NormalizationOutcome transform(const NormalizerModel & model, const RgbImage & source)
{
  SourceAnalysis analysis = analyze_source(model, source);
  RgbImage image = apply_normalization(model, analysis, source);
  return { std::move(image), std::move(analysis.warnings) };
}

std::vector<BatchItem> fit_transform(Method method, const RgbImage & reference, const std::vector<RgbImage> & sources,
                                     const NormalizerOptions & options)
{
  const NormalizerModel model = fit(method, reference, options);
  std::vector<BatchItem> items(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i)
  {
    try
    {
      items[i].outcome = transform(model, sources[i]);
    }
    catch (const Error & e)
    {
      items[i].error = BatchError{ i, e.code(), e.what() };
    }
  }
  return items;
}

} // namespace stainnorm
