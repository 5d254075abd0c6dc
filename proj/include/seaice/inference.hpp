#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <cstdint>
#include <new>
#include <string>
#include <vector>

#include "seaice/errors.hpp"
#include "seaice/model.hpp"
#include "seaice/raster.hpp"

namespace seaice {

inline constexpr std::size_t kTileOverlap = 128;

struct PredictOptions {
  bool tiled = false;
  std::size_t tile_size = 1024;
};

/// [3, H, W] float tensor view of a normalised stack (copied).
inline torch::Tensor to_tensor(const NormalizedStack& stack) {
  return torch::from_blob(const_cast<float*>(stack.values.data()),
                          {3, std::int64_t(stack.rows), std::int64_t(stack.cols)}, torch::kFloat32)
      .clone();
}

namespace inference_detail {

inline torch::Tensor argmax_classes(SegmentationNetImpl& net, const torch::Tensor& chw) {
  return net.forward(chw.unsqueeze(0)).argmax(1).squeeze(0).to(torch::kUInt8).contiguous();
}

/// Tile origins along one axis: consecutive tiles overlap by at least
/// kTileOverlap and the last tile ends at the scene edge.
inline std::vector<std::size_t> tile_origins(std::size_t extent, std::size_t tile) {
  std::vector<std::size_t> out;
  if (extent <= tile) return {0};
  const std::size_t step = tile - kTileOverlap;
  for (std::size_t r = 0;; r = std::min(r + step, extent - tile)) {
    out.push_back(r);
    if (r + tile >= extent) break;
  }
  return out;
}

}  // namespace inference_detail

/// Per-pixel argmax over the full scene. The default is a single forward
/// pass; tiled mode uses overlapping tiles and keeps each tile's centre.
/// Nodata pixels are set to the ignore value.
inline LabelRaster predict_scene(SegmentationNetImpl& net, const NormalizedStack& stack,
                                 const GeoTransform& geo, const PredictOptions& options = {}) {
  torch::NoGradGuard guard;
  net.eval();
  const auto image = to_tensor(stack);
  LabelRaster out;
  out.geo = geo;
  out.codes = Raster<std::uint8_t>(stack.rows, stack.cols, kIgnoreLabel);

  auto copy_block = [&](const torch::Tensor& classes, std::size_t r0, std::size_t c0, std::size_t kr0,
                        std::size_t kr1, std::size_t kc0, std::size_t kc1) {
    const auto* src = classes.data_ptr<std::uint8_t>();
    const auto width = std::size_t(classes.size(1));
    for (std::size_t r = kr0; r < kr1; ++r) {
      for (std::size_t c = kc0; c < kc1; ++c) out.codes(r, c) = src[(r - r0) * width + (c - c0)];
    }
  };

  if (!options.tiled) {
    torch::Tensor classes;
    try {
      classes = inference_detail::argmax_classes(net, image);
    } catch (const std::bad_alloc&) {
      throw Error("out of memory during single-pass inference; rerun with --tiled");
    } catch (const c10::Error& e) {
      const std::string what = e.what();
      if (what.find("alloc") != std::string::npos || what.find("memory") != std::string::npos) {
        throw Error("out of memory during single-pass inference; rerun with --tiled");
      }
      throw;
    }
    copy_block(classes, 0, 0, 0, stack.rows, 0, stack.cols);
  } else {
    if (options.tile_size <= 2 * kTileOverlap) throw Error("tile size must exceed 256 pixels");
    const std::size_t half = kTileOverlap / 2;
    const auto row_origins = inference_detail::tile_origins(stack.rows, options.tile_size);
    const auto col_origins = inference_detail::tile_origins(stack.cols, options.tile_size);
    for (auto r0 : row_origins) {
      const std::size_t r1 = std::min(stack.rows, r0 + options.tile_size);
      for (auto c0 : col_origins) {
        const std::size_t c1 = std::min(stack.cols, c0 + options.tile_size);
        const auto tile = image.slice(1, std::int64_t(r0), std::int64_t(r1))
                              .slice(2, std::int64_t(c0), std::int64_t(c1));
        const auto classes = inference_detail::argmax_classes(net, tile);
        copy_block(classes, r0, c0, r0 == 0 ? 0 : r0 + half, r1 == stack.rows ? r1 : r1 - half,
                   c0 == 0 ? 0 : c0 + half, c1 == stack.cols ? c1 : c1 - half);
      }
    }
  }
  for (std::size_t i = 0; i < out.codes.size(); ++i) {
    if (stack.nodata_mask.values()[i]) out.codes.values()[i] = kIgnoreLabel;
  }
  return out;
}

}  // namespace seaice
