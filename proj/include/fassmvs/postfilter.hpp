#pragma once

#include <vector>

#include "fassmvs/geometry.hpp"
#include "fassmvs/raster.hpp"

namespace fassmvs {

// Per-pixel keep mask; nonzero = keep the estimate.
using TextureMask = Raster<std::uint8_t>;

// Difference-of-Gaussian texture mask: |I - gauss7x7(I)| > 0.5 gray levels
// marks textured pixels; activation speckles under 7 px are removed, the
// mask is dilated 3x3, then deactivation speckles under 21 px are removed
// from the inverted mask. False marks weakly textured areas whose estimates
// get dropped.
TextureMask dog_mask(const ImageU8& image);

// Invalidate all three maps wherever the mask is false.
void apply_mask(DepthMap& depth, NormalMap& normals, ConfidenceMap& confidence,
                const TextureMask& mask);

struct ConsistencyView {
    DepthMap depth;
    Intrinsics intrinsics;
    Pose pose;
};

enum class DepthLookup { Nearest, Bilinear };

struct GeomFilterConfig {
    double eta_r = 10.0;  // reprojection error threshold, pixels
    int eta_h = 3;        // required number of consistent neighbor views
    DepthLookup lookup = DepthLookup::Nearest;
};

// Mutual-reprojection consistency of the reference view against the other
// window views: each valid reference pixel is projected into a neighbor via
// its depth, the neighbor's depth is looked up there and projected back; the
// view counts as a hit when the round trip lands within eta_r pixels. Pixels
// with fewer than eta_h hits are dropped.
TextureMask geometric_consistency_mask(const std::vector<ConsistencyView>& window,
                                       int ref_index, const GeomFilterConfig& config = {});

void geometric_filter(const std::vector<ConsistencyView>& window, int ref_index,
                      DepthMap& depth, NormalMap& normals, ConfidenceMap& confidence,
                      const GeomFilterConfig& config = {});

}  // namespace fassmvs
