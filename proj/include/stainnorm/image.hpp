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

#include "stainnorm/error.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stainnorm
{

/// Row-major interleaved 8-bit RGB raster.
class RgbImage
{
public:
  RgbImage() = default;

  RgbImage(std::size_t width, std::size_t height)
    : width_(width)
    , height_(height)
    , data_(checked_size(width, height), 0)
  {}

  RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width)
    , height_(height)
    , data_(std::move(data))
  {
    if (data_.size() != checked_size(width, height))
    {
      throw Error(Errc::DimensionMismatch, "RGB buffer length does not equal width*height*3");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t & at(std::size_t x, std::size_t y, std::size_t c) { return data_[(y * width_ + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return data_[(y * width_ + x) * 3 + c]; }

  void set_pixel(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> rgb)
  {
    const std::size_t i = (y * width_ + x) * 3;
    data_[i] = rgb[0];
    data_[i + 1] = rgb[1];
    data_[i + 2] = rgb[2];
  }

  /// Uniformly filled image.
  static RgbImage filled(std::size_t width, std::size_t height, std::array<std::uint8_t, 3> rgb)
  {
    RgbImage img(width, height);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
    {
      img.data_[3 * i] = rgb[0];
      img.data_[3 * i + 1] = rgb[1];
      img.data_[3 * i + 2] = rgb[2];
    }
    return img;
  }

  friend bool operator==(const RgbImage &, const RgbImage &) = default;

private:
  static std::size_t checked_size(std::size_t width, std::size_t height)
  {
    if (width == 0 || height == 0)
    {
      throw Error(Errc::EmptyImage, "image dimensions must be at least 1x1");
    }
    return width * height * 3;
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

enum class ColorSpace
{
  Lab,
  OpticalDensity,
};

/// Three float planes over the same pixel grid, tagged with the space they
/// live in.
class PlanarImage
{
public:
  PlanarImage() = default;

  PlanarImage(std::size_t width, std::size_t height, ColorSpace space)
    : width_(width)
    , height_(height)
    , space_(space)
  {
    if (width == 0 || height == 0)
    {
      throw Error(Errc::EmptyImage, "planar image dimensions must be at least 1x1");
    }
    for (auto & plane : planes_)
    {
      plane.assign(width * height, 0.0F);
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  ColorSpace space() const noexcept { return space_; }

  std::span<const float> plane(std::size_t c) const { return planes_.at(c); }
  std::span<float> plane(std::size_t c) { return planes_.at(c); }

  std::array<float, 3> pixel(std::size_t i) const { return { planes_[0][i], planes_[1][i], planes_[2][i] }; }

  void set_pixel(std::size_t i, std::array<float, 3> v)
  {
    planes_[0][i] = v[0];
    planes_[1][i] = v[1];
    planes_[2][i] = v[2];
  }

  friend bool operator==(const PlanarImage &, const PlanarImage &) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  ColorSpace space_ = ColorSpace::Lab;
  std::array<std::vector<float>, 3> planes_;
};

struct Tile
{
  std::size_t row = 0;
  std::size_t col = 0;
  RgbImage image;
};

/// Row-major partition of a source raster into tiles; edge tiles keep only
/// the pixels that exist in the source.
struct TileGrid
{
  std::size_t tile_size = 512;
  std::size_t source_width = 0;
  std::size_t source_height = 0;
  std::vector<Tile> tiles;

  std::size_t rows() const { return tile_size == 0 ? 0 : (source_height + tile_size - 1) / tile_size; }
  std::size_t cols() const { return tile_size == 0 ? 0 : (source_width + tile_size - 1) / tile_size; }
};

/// Scan resolution bookkeeping for resampling decisions.
struct ResolutionMeta
{
  double microns_per_pixel = 0.46;
  double magnification = 20.0;
};

} // namespace stainnorm
