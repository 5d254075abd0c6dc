#pragma once

// Minimal single-band GeoTIFF reader/writer on top of libtiff. Supports
// north-up rasters described by ModelPixelScale + ModelTiepoint, the EPSG
// code from the GeoKey directory and GDAL's nodata tag.

#include <tiffio.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "seaice/errors.hpp"
#include "seaice/raster.hpp"

namespace seaice {

template <typename T>
struct GeoRaster {
  Raster<T> data;
  GeoTransform geo;
  std::optional<double> nodata;
};

namespace geotiff_detail {

inline constexpr ttag_t kPixelScaleTag = 33550;
inline constexpr ttag_t kTiepointTag = 33922;
inline constexpr ttag_t kGeoKeyDirectoryTag = 34735;
inline constexpr ttag_t kGdalNodataTag = 42113;

inline constexpr std::uint16_t kModelTypeKey = 1024;
inline constexpr std::uint16_t kRasterTypeKey = 1025;
inline constexpr std::uint16_t kGeographicTypeKey = 2048;
inline constexpr std::uint16_t kProjectedCsTypeKey = 3072;

inline TIFFExtendProc& parent_extender() {
  static TIFFExtendProc parent = nullptr;
  return parent;
}

inline void tag_extender(TIFF* tif) {
  static const TIFFFieldInfo geo_fields[] = {
      {kPixelScaleTag, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
       const_cast<char*>("ModelPixelScaleTag")},
      {kTiepointTag, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
       const_cast<char*>("ModelTiepointTag")},
      {kGeoKeyDirectoryTag, -1, -1, TIFF_SHORT, FIELD_CUSTOM, 1, 1,
       const_cast<char*>("GeoKeyDirectoryTag")},
  };
  static const TIFFFieldInfo nodata_field[] = {
      {kGdalNodataTag, -1, -1, TIFF_ASCII, FIELD_CUSTOM, 1, 0, const_cast<char*>("GDALNoDataValue")},
  };
  TIFFMergeFieldInfo(tif, geo_fields, 3);
  if (TIFFFindField(tif, kGdalNodataTag, TIFF_ANY) == nullptr) {
    TIFFMergeFieldInfo(tif, nodata_field, 1);
  }
  if (parent_extender()) parent_extender()(tif);
}

inline void register_tags() {
  static std::once_flag once;
  std::call_once(once, [] {
    parent_extender() = TIFFSetTagExtender(tag_extender);
    TIFFSetWarningHandler(nullptr);
  });
}

struct TiffCloser {
  void operator()(TIFF* t) const noexcept { TIFFClose(t); }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

inline TiffHandle open(const std::string& path, const char* mode) {
  register_tags();
  TiffHandle handle(TIFFOpen(path.c_str(), mode));
  if (!handle) throw IngestError(path + ": cannot open TIFF");
  return handle;
}

template <typename T>
constexpr std::pair<std::uint16_t, std::uint16_t> sample_layout() {
  if constexpr (std::is_same_v<T, float>) return {SAMPLEFORMAT_IEEEFP, 32};
  else if constexpr (std::is_same_v<T, std::uint8_t>) return {SAMPLEFORMAT_UINT, 8};
  else static_assert(sizeof(T) == 0, "unsupported sample type");
}

template <typename T>
T convert_sample(const unsigned char* p, std::uint16_t format, std::uint16_t bits) {
  auto load = [p]<typename S>(S) {
    S v;
    std::memcpy(&v, p, sizeof(S));
    return static_cast<T>(v);
  };
  if (format == SAMPLEFORMAT_IEEEFP) {
    if (bits == 32) return load(float{});
    if (bits == 64) return load(double{});
  } else if (format == SAMPLEFORMAT_INT) {
    if (bits == 8) return load(std::int8_t{});
    if (bits == 16) return load(std::int16_t{});
    if (bits == 32) return load(std::int32_t{});
  } else {
    if (bits == 8) return load(std::uint8_t{});
    if (bits == 16) return load(std::uint16_t{});
    if (bits == 32) return load(std::uint32_t{});
  }
  throw IngestError("unsupported TIFF sample layout");
}

}  // namespace geotiff_detail

/// Reads band 1 of a GeoTIFF, converting samples to T.
template <typename T>
GeoRaster<T> read_geotiff(const std::string& path) {
  using namespace geotiff_detail;
  auto handle = open(path, "r");
  TIFF* tif = handle.get();

  std::uint32_t width = 0, height = 0;
  std::uint16_t spp = 1, bits = 8, format = SAMPLEFORMAT_UINT, planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif, TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLEFORMAT, &format);
  TIFFGetFieldDefaulted(tif, TIFFTAG_PLANARCONFIG, &planar);
  if (width == 0 || height == 0) throw IngestError(path + ": empty raster");
  if (bits % 8 != 0) throw IngestError(path + ": unsupported bit depth");
  const std::size_t bytes = bits / 8;
  // Band 1 only; with contiguous interleave skip the other samples.
  const std::size_t stride = planar == PLANARCONFIG_CONTIG ? bytes * spp : bytes;

  GeoRaster<T> out;
  out.data = Raster<T>(height, width);
  try {
    if (TIFFIsTiled(tif)) {
      std::uint32_t tw = 0, th = 0;
      TIFFGetField(tif, TIFFTAG_TILEWIDTH, &tw);
      TIFFGetField(tif, TIFFTAG_TILELENGTH, &th);
      std::vector<unsigned char> buf(TIFFTileSize(tif));
      for (std::uint32_t y0 = 0; y0 < height; y0 += th) {
        for (std::uint32_t x0 = 0; x0 < width; x0 += tw) {
          if (TIFFReadTile(tif, buf.data(), x0, y0, 0, 0) < 0) {
            throw IngestError(path + ": tile read failed");
          }
          for (std::uint32_t y = y0; y < std::min(height, y0 + th); ++y) {
            for (std::uint32_t x = x0; x < std::min(width, x0 + tw); ++x) {
              const auto* p = buf.data() + ((y - y0) * tw + (x - x0)) * stride;
              out.data(y, x) = convert_sample<T>(p, format, bits);
            }
          }
        }
      }
    } else {
      std::vector<unsigned char> buf(TIFFScanlineSize(tif));
      for (std::uint32_t y = 0; y < height; ++y) {
        if (TIFFReadScanline(tif, buf.data(), y, 0) < 0) {
          throw IngestError(path + ": scanline read failed");
        }
        for (std::uint32_t x = 0; x < width; ++x) {
          out.data(y, x) = convert_sample<T>(buf.data() + x * stride, format, bits);
        }
      }
    }
  } catch (const IngestError& e) {
    if (std::string(e.what()).starts_with(path)) throw;
    throw IngestError(path + ": " + e.what());
  }

  std::uint16_t count = 0;
  double* scale = nullptr;
  double* tie = nullptr;
  if (TIFFGetField(tif, kPixelScaleTag, &count, &scale) && count >= 2) {
    out.geo.pixel_width = scale[0];
    out.geo.pixel_height = scale[1];
  } else {
    throw IngestError(path + ": missing ModelPixelScale tag (not georeferenced)");
  }
  if (TIFFGetField(tif, kTiepointTag, &count, &tie) && count >= 6) {
    out.geo.origin_x = tie[3] - tie[0] * out.geo.pixel_width;
    out.geo.origin_y = tie[4] + tie[1] * out.geo.pixel_height;
  } else {
    throw IngestError(path + ": missing ModelTiepoint tag (not georeferenced)");
  }
  std::uint16_t* keys = nullptr;
  if (TIFFGetField(tif, kGeoKeyDirectoryTag, &count, &keys) && count >= 4) {
    const std::size_t n = keys[3];
    for (std::size_t k = 0; k < n && 4 + 4 * k + 3 < count; ++k) {
      const std::uint16_t* entry = keys + 4 + 4 * k;
      if (entry[1] != 0) continue;
      if (entry[0] == kProjectedCsTypeKey || (entry[0] == kGeographicTypeKey && out.geo.epsg == 0)) {
        out.geo.epsg = entry[3];
      }
      if (entry[0] == kRasterTypeKey && entry[3] == 2) {
        // PixelIsPoint: the tiepoint refers to the pixel centre.
        out.geo.origin_x -= 0.5 * out.geo.pixel_width;
        out.geo.origin_y += 0.5 * out.geo.pixel_height;
      }
    }
  }
  char* nodata = nullptr;
  if (TIFFGetField(tif, kGdalNodataTag, &nodata) && nodata != nullptr) {
    char* end = nullptr;
    const double v = std::strtod(nodata, &end);
    if (end != nodata) out.nodata = v;
  }
  return out;
}

/// Writes a single-band, deflate-compressed (when available) GeoTIFF. The
/// output carries no timestamps, so identical inputs give identical bytes.
template <typename T>
void write_geotiff(const std::string& path, const Raster<T>& data, const GeoTransform& geo,
                   std::optional<double> nodata) {
  using namespace geotiff_detail;
  auto handle = open(path, "w");
  TIFF* tif = handle.get();
  const auto [format, bits] = sample_layout<T>();
  const auto width = static_cast<std::uint32_t>(data.cols());
  const auto height = static_cast<std::uint32_t>(data.rows());
  TIFFSetField(tif, TIFFTAG_IMAGEWIDTH, width);
  TIFFSetField(tif, TIFFTAG_IMAGELENGTH, height);
  TIFFSetField(tif, TIFFTAG_SAMPLESPERPIXEL, 1);
  TIFFSetField(tif, TIFFTAG_BITSPERSAMPLE, bits);
  TIFFSetField(tif, TIFFTAG_SAMPLEFORMAT, format);
  TIFFSetField(tif, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  const bool deflate = TIFFIsCODECConfigured(COMPRESSION_ADOBE_DEFLATE);
  TIFFSetField(tif, TIFFTAG_COMPRESSION, deflate ? COMPRESSION_ADOBE_DEFLATE : COMPRESSION_NONE);
  TIFFSetField(tif, TIFFTAG_ROWSPERSTRIP, std::min<std::uint32_t>(height, 16));

  const std::array<double, 3> scale = {geo.pixel_width, geo.pixel_height, 0.0};
  const std::array<double, 6> tie = {0.0, 0.0, 0.0, geo.origin_x, geo.origin_y, 0.0};
  TIFFSetField(tif, kPixelScaleTag, std::uint16_t{3}, scale.data());
  TIFFSetField(tif, kTiepointTag, std::uint16_t{6}, tie.data());
  std::vector<std::uint16_t> keys = {1, 1, 0, 2, kModelTypeKey, 0, 1, 1, kRasterTypeKey, 0, 1, 1};
  if (geo.epsg != 0) {
    keys[3] = 3;
    keys.insert(keys.end(), {kProjectedCsTypeKey, 0, 1, static_cast<std::uint16_t>(geo.epsg)});
  }
  TIFFSetField(tif, kGeoKeyDirectoryTag, static_cast<std::uint16_t>(keys.size()), keys.data());
  std::string nodata_text;
  if (nodata) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *nodata);
    nodata_text = buf;
    TIFFSetField(tif, kGdalNodataTag, nodata_text.c_str());
  }

  std::vector<T> row(width);
  for (std::uint32_t y = 0; y < height; ++y) {
    std::copy_n(data.data() + std::size_t{y} * width, width, row.begin());
    if (TIFFWriteScanline(tif, row.data(), y, 0) < 0) {
      throw IngestError(path + ": write failed");
    }
  }
}

}  // namespace seaice
