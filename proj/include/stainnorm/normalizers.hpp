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
#include "stainnorm/stain_model.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stainnorm
{

enum class Method
{
  HistMatch,
  Reinhard,
  Macenko,
  Vahadane,
};

std::string_view to_string(Method method);

/// Accepts the CLI spellings: histmatch, reinhard, macenko, vahadane.
Method parse_method(std::string_view name);

struct NormalizerOptions
{
  MacenkoParams macenko;
  SnmfParams snmf;
  /// How Vahadane solves per-pixel densities during fit and transform.
  ConcentrationSolver vahadane_solver = ConcentrationSolver::SparseCoding;
  double vahadane_coding_lambda = 0.01;
  double background_intensity = 255.0;
};

/// Right-continuous per-channel CDFs over the 256 RGB levels.
struct HistMatchPayload
{
  std::array<std::array<double, 256>, 3> cdf{};
};

struct ReinhardPayload
{
  ChannelStats lab_stats;
};

struct StainPayload
{
  StainMatrix stains;
  /// Robust per-stain maximum density (hematoxylin, eosin).
  std::array<double, 2> max_concentration{};
};

/// Fitted reference state. Immutable after fit and safe to share between
/// threads.
struct NormalizerModel
{
  Method method = Method::HistMatch;
  std::variant<HistMatchPayload, ReinhardPayload, StainPayload> payload;
  NormalizerOptions options;
};

struct NormalizationOutcome
{
  RgbImage image;
  std::vector<std::string> warnings;
};

struct SourceLut
{
  std::array<std::array<std::uint8_t, 256>, 3> map{};
};

struct SourceMoments
{
  ChannelStats lab_stats;
};

struct SourceStains
{
  StainMatrix stains;
  std::array<double, 2> scale{ 1.0, 1.0 };
};

/// Whole-source quantities a transform needs before it can run pointwise.
struct SourceAnalysis
{
  using Lut = SourceLut;
  using Moments = SourceMoments;
  using Stains = SourceStains;

  std::variant<Lut, Moments, Stains> state;
  std::vector<std::string> warnings;
};

NormalizerModel fit(Method method, const RgbImage & reference, const NormalizerOptions & options = {});

/// Whole-image analysis of `source` against the model (source CDFs, source
/// lαβ moments or source stain basis and density scales).
SourceAnalysis analyze_source(const NormalizerModel & model, const RgbImage & source);

/// Pointwise part of the transform. Applying it to tiles of the analysed
/// source and stitching gives the same pixels as applying it once.
RgbImage apply_normalization(const NormalizerModel & model, const SourceAnalysis & analysis, const RgbImage & region);

NormalizationOutcome transform(const NormalizerModel & model, const RgbImage & source);

/// Reinhard moment matching in lαβ before quantisation. A channel whose
/// source deviation is zero is set to the reference mean.
PlanarImage reinhard_match(const PlanarImage & source_lab, const ChannelStats & source, const ChannelStats & reference,
                           std::vector<std::string> * warnings = nullptr);

/// Quantile-mapping lookup: for each level v, the smallest reference level u
/// with F_ref(u) >= F_src(v).
std::array<std::uint8_t, 256> match_cdf(const std::array<double, 256> & source_cdf,
                                        const std::array<double, 256> & reference_cdf);

std::array<std::array<double, 256>, 3> rgb_cdfs(const RgbImage & img);

struct BatchError
{
  std::size_t index = 0;
  Errc code = Errc::InvalidArgument;
  std::string message;
};

struct BatchItem
{
  std::optional<NormalizationOutcome> outcome;
  std::optional<BatchError> error;
};

/// One shared fit, then a transform per source. Per-source failures are
/// recorded and the batch continues; output order follows input order.
std::vector<BatchItem> fit_transform(Method method, const RgbImage & reference, const std::vector<RgbImage> & sources,
                                     const NormalizerOptions & options = {});

} // namespace stainnorm
