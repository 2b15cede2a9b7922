#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fassmvs/geometry.hpp"
#include "fassmvs/matching.hpp"
#include "fassmvs/raster.hpp"

namespace fassmvs {

enum class SgmVariant {
    Plane,          // penalize plane-index jumps directly
    SurfaceNormal,  // shift the zero-cost transition by prior surface normals
    PathGradient,   // shift it by the running gradient of the minimum cost path
};

struct SgmConfig {
    SgmVariant variant = SgmVariant::Plane;
    int paths = 8;  // 8 or 4; 4 omits the diagonal directions
    double phi1 = 100.0;
    bool phi2_adaptive = true;  // phi1 * (1 + alpha * exp(-dI / beta))
    double phi2_fixed = 0.0;
    double alpha = 8.0;
    double beta = 10.0;
    // Penalties are multiplied by the per-side matching-image count so they
    // stay on the scale of the summed matching costs.
    int penalty_scale = 1;

    void validate() const;
};

// Second smoothness penalty as a function of the intensity step to the
// previous pixel on the path.
double adaptive_phi2(double phi1, double alpha, double beta, double intensity_delta);

// Path-summed costs; same dynamic indexing as the cost volume it came from.
struct AggregatedVolume {
    int width = 0, height = 0;
    PlaneStack planes;
    std::vector<std::int32_t> first, count;
    std::vector<std::size_t> offset;
    std::vector<std::uint32_t> values;

    std::size_t pixel(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
};

// Winning global plane index per pixel, -1 where no hypothesis exists.
using PlaneIndexMap = Raster<std::int32_t>;

// Canonical path step directions; the remaining four are their negations.
inline constexpr std::array<std::array<int, 2>, 4> kCanonicalDirs = {
    {{1, 0}, {0, 1}, {1, 1}, {1, -1}}};

// Per-pixel zero-cost transition shifts for the canonical directions,
// derived from prior surface normals: the tangent plane through the prior
// scene point is intersected with the ray of the path predecessor and the
// landing position is expressed as a plane-index difference. Opposite
// directions use the negated shift. Pixels with an invalid normal or prior
// depth get shift 0.
using NormalOffsets = Raster<std::array<std::int16_t, 4>>;

NormalOffsets compute_normal_offsets(const NormalMap& prior_normals,
                                     const DepthMap& prior_depth, const PlaneStack& planes,
                                     const Intrinsics& intrinsics);

// Shift for an arbitrary path step direction; opposite directions negate.
int normal_offset_for_dir(const NormalOffsets& offsets, int x, int y, int dir_x, int dir_y);

// Recursive path aggregation with min-normalization:
//   L(p, i) = S(p, i) + min(prev[i + di], prev[i + di +- 1] + phi1,
//                           min(prev) + phi2) - min(prev)
// where di is 0 (Plane), the precomputed normal shift (SurfaceNormal) or the
// running minimum-cost-path shift (PathGradient). With phi2 >= phi1 (which
// validate() enforces for fixed penalties and the adaptive form satisfies by
// construction) this equals the full minimum over the predecessor's labels
// with the three-level jump penalty. Transitions into indices outside the
// predecessor's range cost phi2. Results are bit-identical for any worker
// count.
AggregatedVolume aggregate(const CostVolume& volume, const ImageU8& image,
                           const SgmConfig& config, const Intrinsics& intrinsics,
                           const NormalMap* prior_normals = nullptr,
                           const DepthMap* prior_depth = nullptr);

AggregatedVolume aggregate_single_path(const CostVolume& volume, const ImageU8& image,
                                       const SgmConfig& config, const Intrinsics& intrinsics,
                                       int dir_x, int dir_y,
                                       const NormalMap* prior_normals = nullptr,
                                       const DepthMap* prior_depth = nullptr);

// Per-pixel argmin; ties break to the smallest plane index.
PlaneIndexMap wta(const AggregatedVolume& volume);

// Vertex abscissa of the parabola through three (depth, cost) samples with
// arbitrary spacing, clamped to [d_prev, d_next]. Degenerate (collinear)
// samples return d_win.
double parabola_refine(double d_prev, double d_win, double d_next, double c_prev,
                       double c_win, double c_next);

}  // namespace fassmvs
