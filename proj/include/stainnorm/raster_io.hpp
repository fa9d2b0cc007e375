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

#include <filesystem>

namespace stainnorm
{

/// Decodes a PNG or TIFF (8 or 16 bits per sample, gray/RGB/RGBA, stripped
/// or tiled). 16-bit samples keep their high byte; alpha is dropped.
RgbImage load_image(const std::filesystem::path & path);

/// Writes a lossless 8-bit RGB PNG, replacing any existing file.
void save_image(const RgbImage & img, const std::filesystem::path & path);

/// Integer-factor mean pooling. Output is ceil(w/f) x ceil(h/f); partial edge
/// blocks average only the pixels they contain. Means round half up.
RgbImage downsample(const RgbImage & img, std::size_t factor);

TileGrid tile_image(const RgbImage & img, std::size_t tile_size);

RgbImage stitch_tiles(const TileGrid & grid);

/// Integer pooling factor that takes `meta` to `target_magnification`
/// (20x -> 10x gives 2). Factors below 1 clamp to 1.
std::size_t downsample_factor_for(const ResolutionMeta & meta, double target_magnification);

ResolutionMeta resampled(const ResolutionMeta & meta, std::size_t factor);

} // namespace stainnorm
