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

#include "stainnorm/raster_io.hpp"
#include "stainnorm/kernels.hpp"

#include <png.h>
#include <tiffio.h>

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <system_error>

namespace stainnorm
{

namespace
{

namespace fs = std::filesystem;

struct FileCloser
{
  void operator()(std::FILE * f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_signature(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char *>(sig.data()), sig.size());
  return in.gcount() == 8 && png_sig_cmp(sig.data(), 0, 8) == 0;
}

bool has_tiff_signature(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  std::array<char, 4> sig{};
  in.read(sig.data(), sig.size());
  if (in.gcount() != 4)
  {
    return false;
  }
  return (sig[0] == 'I' && sig[1] == 'I' && (sig[2] == 42 || sig[2] == 43) && sig[3] == 0) ||
         (sig[0] == 'M' && sig[1] == 'M' && sig[2] == 0 && (sig[3] == 42 || sig[3] == 43));
}

// libpng reports errors through longjmp; everything that lives across the
// setjmp below is plain data owned by the caller.
struct PngReadState
{
  png_structp png = nullptr;
  png_infop info = nullptr;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  std::vector<std::uint8_t> * pixels = nullptr;
  std::vector<png_bytep> * rows = nullptr;
  char message[256] = {};
};

void png_error_handler(png_structp png, png_const_charp msg)
{
  auto * state = static_cast<PngReadState *>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

bool read_png_rows(std::FILE * fp, PngReadState & state)
{
  if (setjmp(png_jmpbuf(state.png)))
  {
    return false;
  }
  png_init_io(state.png, fp);
  png_read_info(state.png, state.info);
  state.width = png_get_image_width(state.png, state.info);
  state.height = png_get_image_height(state.png, state.info);
  const int color_type = png_get_color_type(state.png, state.info);
  const int bit_depth = png_get_bit_depth(state.png, state.info);

  if (bit_depth == 16)
  {
    png_set_strip_16(state.png);
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE)
  {
    png_set_palette_to_rgb(state.png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
  {
    png_set_expand_gray_1_2_4_to_8(state.png);
  }
  if (png_get_valid(state.png, state.info, PNG_INFO_tRNS))
  {
    png_set_tRNS_to_alpha(state.png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
  {
    png_set_gray_to_rgb(state.png);
  }
  png_set_strip_alpha(state.png);
  png_set_interlace_handling(state.png);
  png_read_update_info(state.png, state.info);

  if (state.width == 0 || state.height == 0 || png_get_rowbytes(state.png, state.info) != state.width * 3U)
  {
    std::snprintf(state.message, sizeof(state.message), "unexpected PNG row layout");
    return false;
  }
  state.pixels->resize(std::size_t{ state.width } * state.height * 3);
  state.rows->resize(state.height);
  for (png_uint_32 y = 0; y < state.height; ++y)
  {
    (*state.rows)[y] = state.pixels->data() + std::size_t{ y } * state.width * 3;
  }
  png_read_image(state.png, state.rows->data());
  png_read_end(state.png, nullptr);
  return true;
}

RgbImage load_png(const fs::path & path)
{
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp)
  {
    throw Error(Errc::IoError, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  PngReadState state;
  state.pixels = &pixels;
  state.rows = &rows;
  state.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler, png_warning_handler);
  if (state.png == nullptr)
  {
    throw Error(Errc::DecodeError, "png_create_read_struct failed");
  }
  state.info = png_create_info_struct(state.png);
  const bool ok = state.info != nullptr && read_png_rows(fp.get(), state);
  png_destroy_read_struct(&state.png, state.info != nullptr ? &state.info : nullptr, nullptr);
  if (!ok)
  {
    throw Error(Errc::DecodeError, path.string() + ": " + state.message);
  }
  return RgbImage(state.width, state.height, std::move(pixels));
}

struct TiffCloser
{
  void operator()(TIFF * t) const noexcept { TIFFClose(t); }
};

// Route libtiff diagnostics into an exception message instead of stderr.
thread_local std::string g_tiff_error;

void tiff_error_handler(const char * module, const char * fmt, va_list ap)
{
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  g_tiff_error = std::string(module != nullptr ? module : "tiff") + ": " + buf;
}

void tiff_warning_handler(const char *, const char *, va_list) {}

// Copies one decoded block of interleaved samples into the RGB raster.
void put_block(const std::vector<std::uint8_t> & buf, std::size_t block_w, std::size_t block_h, std::size_t x0,
               std::size_t y0, std::size_t spp, std::size_t bits, std::span<std::uint8_t> dst, std::size_t width,
               std::size_t height)
{
  const std::size_t bytes_per_sample = bits / 8;
  for (std::size_t by = 0; by < block_h && y0 + by < height; ++by)
  {
    for (std::size_t bx = 0; bx < block_w && x0 + bx < width; ++bx)
    {
      const std::size_t src = (by * block_w + bx) * spp;
      std::array<std::uint8_t, 3> rgb{};
      for (std::size_t c = 0; c < 3; ++c)
      {
        const std::size_t s = spp >= 3 ? c : 0;
        if (bytes_per_sample == 1)
        {
          rgb[c] = buf[src + s];
        }
        else
        {
          std::uint16_t v = 0;
          std::memcpy(&v, &buf[(src + s) * 2], sizeof(v));
          rgb[c] = static_cast<std::uint8_t>(v >> 8);
        }
      }
      const std::size_t d = ((y0 + by) * width + x0 + bx) * 3;
      dst[d] = rgb[0];
      dst[d + 1] = rgb[1];
      dst[d + 2] = rgb[2];
    }
  }
}

RgbImage load_tiff(const fs::path & path)
{
  TIFFSetErrorHandler(tiff_error_handler);
  TIFFSetWarningHandler(tiff_warning_handler);
  g_tiff_error.clear();
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.c_str(), "r"));
  if (!tif)
  {
    throw Error(Errc::DecodeError, path.string() + ": " + g_tiff_error);
  }
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t spp = 1;
  std::uint16_t bits = 8;
  std::uint16_t planar = PLANARCONFIG_CONTIG;
  std::uint16_t photometric = PHOTOMETRIC_RGB;
  std::uint16_t sample_format = SAMPLEFORMAT_UINT;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &sample_format);
  if (!TIFFGetField(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric))
  {
    photometric = spp >= 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK;
  }

  if (width == 0 || height == 0)
  {
    throw Error(Errc::DecodeError, path.string() + ": empty TIFF");
  }
  if ((bits != 8 && bits != 16) || sample_format != SAMPLEFORMAT_UINT || planar != PLANARCONFIG_CONTIG ||
      !(spp == 1 || spp == 2 || spp == 3 || spp == 4) ||
      !(photometric == PHOTOMETRIC_RGB || photometric == PHOTOMETRIC_MINISBLACK))
  {
    throw Error(Errc::DecodeError, path.string() + ": unsupported TIFF layout (need 8/16-bit unsigned, contiguous, "
                                                   "gray or RGB)");
  }

  RgbImage img(width, height);
  auto dst = img.data();
  if (TIFFIsTiled(tif.get()))
  {
    std::uint32_t tw = 0;
    std::uint32_t th = 0;
    TIFFGetField(tif.get(), TIFFTAG_TILEWIDTH, &tw);
    TIFFGetField(tif.get(), TIFFTAG_TILELENGTH, &th);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(TIFFTileSize(tif.get())));
    for (std::uint32_t y = 0; y < height; y += th)
    {
      for (std::uint32_t x = 0; x < width; x += tw)
      {
        if (TIFFReadTile(tif.get(), buf.data(), x, y, 0, 0) < 0)
        {
          throw Error(Errc::DecodeError, path.string() + ": " + g_tiff_error);
        }
        put_block(buf, tw, th, x, y, spp, bits, dst, width, height);
      }
    }
  }
  else
  {
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(TIFFScanlineSize(tif.get())));
    for (std::uint32_t y = 0; y < height; ++y)
    {
      if (TIFFReadScanline(tif.get(), buf.data(), y, 0) < 0)
      {
        throw Error(Errc::DecodeError, path.string() + ": " + g_tiff_error);
      }
      put_block(buf, width, 1, 0, y, spp, bits, dst, width, height);
    }
  }
  return img;
}

} // namespace

RgbImage load_image(const std::filesystem::path & path)
{
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
  {
    throw Error(Errc::FileNotFound, path.string());
  }
  if (has_png_signature(path))
  {
    return load_png(path);
  }
  if (has_tiff_signature(path))
  {
    return load_tiff(path);
  }
  throw Error(Errc::DecodeError, path.string() + ": not a PNG or TIFF file");
}

void save_image(const RgbImage & img, const std::filesystem::path & path)
{
  if (img.empty())
  {
    throw Error(Errc::EmptyImage, "cannot save an empty image");
  }
  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(img.width());
  out.height = static_cast<png_uint_32>(img.height());
  out.format = PNG_FORMAT_RGB;
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp)
  {
    throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  }
  const int ok = png_image_write_to_stdio(&out, fp.get(), 0, img.data().data(), 0, nullptr);
  const std::string message = out.message;
  png_image_free(&out);
  if (ok == 0)
  {
    throw Error(Errc::IoError, path.string() + ": " + message);
  }
  if (std::fflush(fp.get()) != 0)
  {
    throw Error(Errc::IoError, "write failed for " + path.string());
  }
}

RgbImage downsample(const RgbImage & img, std::size_t factor)
{
  if (factor == 0)
  {
    throw Error(Errc::InvalidFactor, "downsample factor must be >= 1");
  }
  if (factor == 1)
  {
    return img;
  }
  RgbImage out((img.width() + factor - 1) / factor, (img.height() + factor - 1) / factor);
  kernels::omp::downsample_mean(img.data(), img.width(), img.height(), factor, out.data());
  return out;
}

TileGrid tile_image(const RgbImage & img, std::size_t tile_size)
{
  if (tile_size == 0)
  {
    throw Error(Errc::InvalidTileSize, "tile size must be >= 1");
  }
  TileGrid grid;
  grid.tile_size = tile_size;
  grid.source_width = img.width();
  grid.source_height = img.height();
  const auto src = img.data();
  for (std::size_t row = 0; row < grid.rows(); ++row)
  {
    for (std::size_t col = 0; col < grid.cols(); ++col)
    {
      const std::size_t x0 = col * tile_size;
      const std::size_t y0 = row * tile_size;
      const std::size_t w = std::min(tile_size, img.width() - x0);
      const std::size_t h = std::min(tile_size, img.height() - y0);
      RgbImage tile(w, h);
      auto dst = tile.data();
      for (std::size_t y = 0; y < h; ++y)
      {
        std::memcpy(&dst[y * w * 3], &src[((y0 + y) * img.width() + x0) * 3], w * 3);
      }
      grid.tiles.push_back({ row, col, std::move(tile) });
    }
  }
  return grid;
}

RgbImage stitch_tiles(const TileGrid & grid)
{
  if (grid.tile_size == 0 || grid.source_width == 0 || grid.source_height == 0)
  {
    throw Error(Errc::InconsistentGrid, "grid has no extent");
  }
  const std::size_t rows = grid.rows();
  const std::size_t cols = grid.cols();
  if (grid.tiles.size() != rows * cols)
  {
    throw Error(Errc::InconsistentGrid, "expected " + std::to_string(rows * cols) + " tiles, got " +
                                          std::to_string(grid.tiles.size()));
  }
  std::vector<bool> seen(rows * cols, false);
  RgbImage out(grid.source_width, grid.source_height);
  auto dst = out.data();
  for (const Tile & t : grid.tiles)
  {
    if (t.row >= rows || t.col >= cols || seen[t.row * cols + t.col])
    {
      throw Error(Errc::InconsistentGrid, "tile position out of range or duplicated");
    }
    seen[t.row * cols + t.col] = true;
    const std::size_t x0 = t.col * grid.tile_size;
    const std::size_t y0 = t.row * grid.tile_size;
    const std::size_t w = std::min(grid.tile_size, grid.source_width - x0);
    const std::size_t h = std::min(grid.tile_size, grid.source_height - y0);
    if (t.image.width() != w || t.image.height() != h)
    {
      throw Error(Errc::InconsistentGrid, "tile dimensions do not match grid geometry");
    }
    const auto src = t.image.data();
    for (std::size_t y = 0; y < h; ++y)
    {
      std::memcpy(&dst[((y0 + y) * grid.source_width + x0) * 3], &src[y * w * 3], w * 3);
    }
  }
  return out;
}

std::size_t downsample_factor_for(const ResolutionMeta & meta, double target_magnification)
{
  if (!(meta.microns_per_pixel > 0.0) || !(target_magnification > 0.0))
  {
    throw Error(Errc::InvalidArgument, "resolution and target magnification must be positive");
  }
  const double ratio = meta.magnification / target_magnification;
  return ratio < 1.0 ? 1 : static_cast<std::size_t>(std::lround(ratio));
}

ResolutionMeta resampled(const ResolutionMeta & meta, std::size_t factor)
{
  if (factor == 0)
  {
    throw Error(Errc::InvalidFactor, "downsample factor must be >= 1");
  }
  return { meta.microns_per_pixel * static_cast<double>(factor), meta.magnification / static_cast<double>(factor) };
}

} // namespace stainnorm
