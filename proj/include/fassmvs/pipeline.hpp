#pragma once

#include <vector>

#include "fassmvs/geometry.hpp"
#include "fassmvs/matching.hpp"
#include "fassmvs/sgm.hpp"

namespace fassmvs {

// Per-pixel sampling-range radius for the next finer level.
struct RangePolicy {
    enum class Kind {
        Full,             // the whole depth interval everywhere
        Fixed,            // value = radius in world units
        SpacingMultiple,  // value * local inter-plane depth spacing of the coarser level
    };
    Kind kind = Kind::SpacingMultiple;
    double value = 3.0;
};

struct PipelineConfig {
    int bundle_size = 5;  // used by sequence assembly; must be odd, >= 3
    int pyramid_levels = 3;
    DepthBounds depth_bounds;
    Eigen::Vector3d sweep_normal = Eigen::Vector3d(0, 0, -1);
    RangePolicy range_policy;
    int max_planes = 256;  // cap at the coarsest level
    SgmConfig sgm;
    CostFunctionSpec cost;
    int normal_smoothing_radius = 2;

    explicit PipelineConfig(DepthBounds bounds) : depth_bounds(bounds) {}
    void validate() const;
};

struct BundleResult {
    DepthMap depth;
    NormalMap normals;
    ConfidenceMap confidence;
};

// Level 0 holds the input bundle; each further level blurs with a 3x3
// Gaussian (sigma 1, reflected borders) and halves the image (ceil) and the
// intrinsics.
struct PyramidLevelSet {
    std::vector<std::vector<CalibratedView>> levels;
};

PyramidLevelSet build_pyramids(const std::vector<CalibratedView>& bundle, int levels);

// Separable Gaussian with reflected borders (edge pixel not repeated);
// float output so thresholding filters keep sub-gray-level precision.
Raster<float> gaussian_blur(const ImageU8& image, int radius, double sigma);

// Nearest-neighbor 2x upscale: target (x, y) reads source (x/2, y/2).
// Identity when the target size equals the source size.
DepthMap upscale_nearest(const DepthMap& map, int width, int height);
NormalMap upscale_nearest(const NormalMap& map, int width, int height);

// Per-pixel range [prior - dd, prior + dd] clamped to the depth bounds;
// pixels with an invalid prior sample the whole interval. The spacing-
// multiple policy needs the coarser level's plane stack and the current
// intrinsics to measure the local plane spacing in depth units.
SamplingRange refine_range(const DepthMap& prior, const RangePolicy& policy,
                           const DepthBounds& bounds, const PlaneStack* coarser_planes = nullptr,
                           const Intrinsics* intrinsics = nullptr);

// 5x5 median over the valid window samples; a pixel goes invalid when fewer
// than half of the in-image window pixels are valid. Isolated invalid
// pixels surrounded by valid ones get filled.
DepthMap median_filter_5x5(const DepthMap& depth);

// Full coarse-to-fine estimate for one bundle: per level plane spacing,
// plane-sweep matching, SGM aggregation, WTA with parabola refinement,
// median filter, normal extraction/smoothing and confidence scoring. The
// surface-normal SGM variant runs as the plane variant at the coarsest
// level (no prior exists yet) and consumes the upscaled prior maps below.
BundleResult estimate_bundle(const std::vector<CalibratedView>& bundle,
                             const PipelineConfig& config);

}  // namespace fassmvs
