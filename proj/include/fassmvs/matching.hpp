#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fassmvs/geometry.hpp"
#include "fassmvs/raster.hpp"

namespace fassmvs {

enum class CostKind { CensusHamming, NccTruncated };

struct CostFunctionSpec {
    CostKind kind = CostKind::NccTruncated;
    int window_w = 5;
    int window_h = 5;

    // Supported: census 5x5 and 9x7 (bit strings fit a 64-bit word),
    // NCC 5x5 and 9x9.
    void validate() const;
    int census_bits() const { return window_w * window_h - 1; }
};

// Per-pixel depth interval to sample; uniform at the coarsest level.
struct SamplingRange {
    Raster<float> lo, hi;

    static SamplingRange uniform(const DepthBounds& bounds, int width, int height);
};

// Dynamic cost volume: a global plane list shared by all pixels plus a
// contiguous per-pixel index interval with one integer cost per plane.
// Costs are in [0, 255 * per_side]; per_side is the matching-image count on
// one side of the reference.
struct CostVolume {
    int width = 0, height = 0;
    PlaneStack planes;
    int per_side = 1;

    std::vector<std::int32_t> first;     // per-pixel first global plane index
    std::vector<std::int32_t> count;     // per-pixel plane count (0 = empty)
    std::vector<std::size_t> offset;     // per-pixel offset into costs
    std::vector<std::uint16_t> costs;

    std::size_t pixel(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    std::span<const std::uint16_t> pixel_costs(int x, int y) const {
        const std::size_t p = pixel(x, y);
        return {costs.data() + offset[p], static_cast<std::size_t>(count[p])};
    }
};

// Census bit string per pixel: neighbors scanned row-major over the window,
// center skipped, bit set iff neighbor < center, first neighbor in the most
// significant used bit. Borders sample edge-clamped.
Raster<std::uint64_t> census_transform(const ImageU8& image, int window_w, int window_h);

std::uint64_t census_bits_at(const ImageU8& image, int x, int y, int window_w, int window_h);

// Negated, truncated, scaled NCC between two equal-size patches:
// round(255 * min(1 - ncc, 1)). Zero-variance patches score 255.
int ncc_cost(std::span<const float> patch_ref, std::span<const float> patch_other);

// Plane-sweep multi-image matching. For every pixel and every plane whose
// induced depth lies in the pixel's sampling range, matching-image patches
// are warped into the reference view through the plane homography and scored
// against the reference patch; per-image costs are summed separately over
// the views left and right of the reference and the smaller sum is stored.
// A warp whose patch center leaves the matching image scores the per-image
// maximum (255); patch samples are edge-clamped, matching images sampled
// bilinearly, the reference patch on the integer grid.
CostVolume sweep_cost_volume(const std::vector<CalibratedView>& bundle, int ref_index,
                             const PlaneStack& planes, const SamplingRange& ranges,
                             const CostFunctionSpec& costfn);

}  // namespace fassmvs
