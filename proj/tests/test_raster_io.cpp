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

#include "stainnorm/raster_io.hpp"

#include <doctest.h>
#include <tiffio.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <cmath>
#include <cstring>

using namespace stainnorm;
namespace fs = std::filesystem;

namespace
{

struct TempDir
{
  fs::path path;
  TempDir()
    : path(fs::temp_directory_path() / ("stainnorm_io_" + std::to_string(::getpid())))
  {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_tiff(const fs::path & p, std::uint32_t w, std::uint32_t h, int bits, int spp, bool tiled)
{
  TIFF * t = TIFFOpen(p.c_str(), "w");
  REQUIRE(t != nullptr);
  TIFFSetField(t, TIFFTAG_IMAGEWIDTH, w);
  TIFFSetField(t, TIFFTAG_IMAGELENGTH, h);
  TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, bits);
  TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, spp);
  TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(t, TIFFTAG_PHOTOMETRIC, spp >= 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK);
  const std::size_t bps = static_cast<std::size_t>(bits / 8);
  auto sample = [&](std::uint32_t x, std::uint32_t y, int c) -> std::uint32_t {
    const std::uint32_t v8 = (x * 40 + y * 7 + static_cast<std::uint32_t>(c) * 90) % 256;
    return bits == 16 ? v8 * 256 + 0x5A : v8;
  };
  auto put = [&](std::vector<std::uint8_t> & buf, std::size_t off, std::uint32_t v) {
    if (bps == 2)
    {
      const auto v16 = static_cast<std::uint16_t>(v);
      std::memcpy(buf.data() + off, &v16, 2);
    }
    else
    {
      buf[off] = static_cast<std::uint8_t>(v);
    }
  };
  if (tiled)
  {
    const std::uint32_t ts = 16;
    TIFFSetField(t, TIFFTAG_TILEWIDTH, ts);
    TIFFSetField(t, TIFFTAG_TILELENGTH, ts);
    std::vector<std::uint8_t> buf(ts * ts * static_cast<std::size_t>(spp) * bps);
    for (std::uint32_t ty = 0; ty < h; ty += ts)
    {
      for (std::uint32_t tx = 0; tx < w; tx += ts)
      {
        std::fill(buf.begin(), buf.end(), 0);
        for (std::uint32_t y = 0; y < ts && ty + y < h; ++y)
        {
          for (std::uint32_t x = 0; x < ts && tx + x < w; ++x)
          {
            for (int c = 0; c < spp; ++c)
            {
              put(buf, ((y * ts + x) * static_cast<std::size_t>(spp) + static_cast<std::size_t>(c)) * bps,
                  sample(tx + x, ty + y, c));
            }
          }
        }
        TIFFWriteTile(t, buf.data(), tx, ty, 0, 0);
      }
    }
  }
  else
  {
    TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, 1);
    std::vector<std::uint8_t> row(w * static_cast<std::size_t>(spp) * bps);
    for (std::uint32_t y = 0; y < h; ++y)
    {
      for (std::uint32_t x = 0; x < w; ++x)
      {
        for (int c = 0; c < spp; ++c)
        {
          put(row, (x * static_cast<std::size_t>(spp) + static_cast<std::size_t>(c)) * bps, sample(x, y, c));
        }
      }
      TIFFWriteScanline(t, row.data(), y, 0);
    }
  }
  TIFFClose(t);
}

std::uint8_t expected_sample(std::uint32_t x, std::uint32_t y, int c)
{
  return static_cast<std::uint8_t>((x * 40 + y * 7 + static_cast<std::uint32_t>(c) * 90) % 256);
}

} // namespace

TEST_SUITE("raster_io")
{
  TEST_CASE("png round trip is lossless")
  {
    TempDir dir;
    const RgbImage img = testing::noise_image(37, 21, 3);
    save_image(img, dir.path / "a.png");
    const RgbImage back = load_image(dir.path / "a.png");
    CHECK(back.width() == 37);
    CHECK(back.height() == 21);
    CHECK(back == img);
  }

  TEST_CASE("2x2 png echoes its dimensions")
  {
    TempDir dir;
    save_image(RgbImage::filled(2, 2, { 1, 2, 3 }), dir.path / "s.png");
    const RgbImage back = load_image(dir.path / "s.png");
    CHECK(back.width() == 2);
    CHECK(back.height() == 2);
  }

  TEST_CASE("1x1 red pixel and overwrite")
  {
    TempDir dir;
    const fs::path p = dir.path / "r.png";
    save_image(RgbImage::filled(1, 1, { 255, 0, 0 }), p);
    CHECK(load_image(p) == RgbImage::filled(1, 1, { 255, 0, 0 }));
    save_image(RgbImage::filled(3, 2, { 0, 9, 200 }), p);
    CHECK(load_image(p) == RgbImage::filled(3, 2, { 0, 9, 200 }));
  }

  TEST_CASE("load errors")
  {
    TempDir dir;
    CHECK_THROWS_AS(load_image(dir.path / "missing.png"), Error);
    try
    {
      load_image(dir.path / "missing.png");
    }
    catch (const Error & e)
    {
      CHECK(e.code() == Errc::FileNotFound);
    }
    std::ofstream(dir.path / "junk.png") << "not an image at all";
    try
    {
      load_image(dir.path / "junk.png");
      FAIL("expected DecodeError");
    }
    catch (const Error & e)
    {
      CHECK(e.code() == Errc::DecodeError);
    }
    // A truncated PNG keeps its signature but cannot decode.
    save_image(testing::noise_image(30, 30, 1), dir.path / "full.png");
    std::ifstream in(dir.path / "full.png", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir.path / "cut.png", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    try
    {
      load_image(dir.path / "cut.png");
      FAIL("expected DecodeError");
    }
    catch (const Error & e)
    {
      CHECK(e.code() == Errc::DecodeError);
    }
  }

  TEST_CASE("save into a missing directory is an IoError")
  {
    TempDir dir;
    try
    {
      save_image(RgbImage::filled(1, 1, { 0, 0, 0 }), dir.path / "no" / "such" / "x.png");
      FAIL("expected IoError");
    }
    catch (const Error & e)
    {
      CHECK(e.code() == Errc::IoError);
    }
  }

  TEST_CASE("tiff variants decode with the high byte kept")
  {
    TempDir dir;
    for (int bits : { 8, 16 })
    {
      for (int spp : { 1, 3, 4 })
      {
        for (bool tiled : { false, true })
        {
          CAPTURE(bits);
          CAPTURE(spp);
          CAPTURE(tiled);
          const fs::path p = dir.path / "t.tif";
          write_tiff(p, 35, 20, bits, spp, tiled);
          const RgbImage img = load_image(p);
          REQUIRE(img.width() == 35);
          REQUIRE(img.height() == 20);
          bool ok = true;
          for (std::uint32_t y = 0; y < 20; ++y)
          {
            for (std::uint32_t x = 0; x < 35; ++x)
            {
              for (int c = 0; c < 3; ++c)
              {
                const std::uint8_t want = expected_sample(x, y, spp == 1 ? 0 : c);
                ok = ok && img.at(x, y, static_cast<std::size_t>(c)) == want;
              }
            }
          }
          CHECK(ok);
        }
      }
    }
  }

  TEST_CASE("downsample")
  {
    const RgbImage img = testing::noise_image(9, 7, 5);
    CHECK(downsample(img, 1) == img);
    CHECK(downsample(RgbImage::filled(4, 4, { 100, 100, 100 }), 2) == RgbImage::filled(2, 2, { 100, 100, 100 }));

    RgbImage q(2, 2);
    const std::array<std::uint8_t, 4> v{ 0, 100, 200, 100 };
    for (std::size_t i = 0; i < 4; ++i)
    {
      q.set_pixel(i % 2, i / 2, { v[i], v[i], v[i] });
    }
    CHECK(downsample(q, 2) == RgbImage::filled(1, 1, { 100, 100, 100 }));

    const RgbImage d = downsample(img, 4);
    CHECK(d.width() == 3);
    CHECK(d.height() == 2);
    // Partial edge block (8,4)..(8,6): three pixels.
    const int sum = img.at(8, 4, 0) + img.at(8, 5, 0) + img.at(8, 6, 0);
    CHECK(d.at(2, 1, 0) == static_cast<int>(std::floor(sum / 3.0 + 0.5)));
    CHECK_THROWS_AS(downsample(img, 0), Error);

    for (std::size_t f : { 2, 3, 5 })
    {
      CHECK(downsample(RgbImage::filled(11, 13, { 7, 8, 9 }), f) ==
            RgbImage::filled((11 + f - 1) / f, (13 + f - 1) / f, { 7, 8, 9 }));
    }
  }

  TEST_CASE("downsample rounds half up")
  {
    RgbImage img(2, 1);
    img.set_pixel(0, 0, { 0, 1, 2 });
    img.set_pixel(1, 0, { 1, 2, 5 });
    const RgbImage d = downsample(img, 2);
    CHECK(d.at(0, 0, 0) == 1);
    CHECK(d.at(0, 0, 1) == 2);
    CHECK(d.at(0, 0, 2) == 4);
  }

  TEST_CASE("tiling and stitching")
  {
    const TileGrid g1 = tile_image(RgbImage(1024, 1024), 512);
    CHECK(g1.tiles.size() == 4);
    for (const auto & t : g1.tiles)
    {
      CHECK(t.image.width() == 512);
      CHECK(t.image.height() == 512);
    }

    const RgbImage big = testing::noise_image(700, 700, 9);
    const TileGrid g2 = tile_image(big, 512);
    REQUIRE(g2.tiles.size() == 4);
    CHECK(g2.tiles[1].image.width() == 188);
    CHECK(g2.tiles[2].image.height() == 188);
    CHECK(g2.tiles[3].image.width() == 188);
    CHECK(g2.tiles[1].row == 0);
    CHECK(g2.tiles[1].col == 1);
    CHECK(stitch_tiles(g2) == big);

    const RgbImage small = testing::noise_image(100, 100, 2);
    const TileGrid g3 = tile_image(small, 512);
    REQUIRE(g3.tiles.size() == 1);
    CHECK(g3.tiles[0].image == small);
    CHECK(stitch_tiles(g3) == small);

    CHECK_THROWS_AS(tile_image(small, 0), Error);
  }

  TEST_CASE("stitch round trip for many sizes")
  {
    for (std::size_t w : { 1, 5, 17, 64 })
    {
      for (std::size_t h : { 1, 9, 33 })
      {
        const RgbImage img = testing::noise_image(w, h, w * 100 + h);
        for (std::size_t ts : { 1, 4, 16, 100 })
        {
          const TileGrid g = tile_image(img, ts);
          CHECK(g.tiles.size() == g.rows() * g.cols());
          CHECK(stitch_tiles(g) == img);
        }
      }
    }
  }

  TEST_CASE("inconsistent grids")
  {
    TileGrid g = tile_image(testing::noise_image(20, 20, 1), 8);
    TileGrid missing = g;
    missing.tiles.pop_back();
    CHECK_THROWS_AS(stitch_tiles(missing), Error);

    TileGrid wrong_size = g;
    wrong_size.tiles[0].image = RgbImage(7, 8);
    CHECK_THROWS_AS(stitch_tiles(wrong_size), Error);

    TileGrid duplicate = g;
    duplicate.tiles[1].col = 0;
    try
    {
      stitch_tiles(duplicate);
      FAIL("expected InconsistentGrid");
    }
    catch (const Error & e)
    {
      CHECK(e.code() == Errc::InconsistentGrid);
    }
  }

  TEST_CASE("resolution bookkeeping")
  {
    const ResolutionMeta native;
    CHECK(downsample_factor_for(native, 10.0) == 2);
    CHECK(downsample_factor_for(native, 20.0) == 1);
    CHECK(downsample_factor_for(native, 40.0) == 1);
    const ResolutionMeta r = resampled(native, 2);
    CHECK(r.microns_per_pixel == doctest::Approx(0.92));
    CHECK(r.magnification == doctest::Approx(10.0));
  }
}
