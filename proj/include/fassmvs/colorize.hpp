#pragma once

#include "fassmvs/raster.hpp"

namespace fassmvs {

// Depth over [lo, hi] through a viridis-style perceptually ordered colormap
// (lo maps to the dark end). Invalid pixels are black.
RgbImage colorize_depth(const DepthMap& map, double lo, double hi);

// Normals as (n + 1) / 2 in RGB; invalid pixels are black.
RgbImage colorize_normals(const NormalMap& map);

// Confidence as grayscale; invalid (zero) pixels are black.
RgbImage colorize_confidence(const ConfidenceMap& map);

}  // namespace fassmvs
