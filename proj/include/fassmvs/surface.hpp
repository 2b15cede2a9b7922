#pragma once

#include "fassmvs/geometry.hpp"
#include "fassmvs/raster.hpp"

namespace fassmvs {

// Raw surface normals from central differences of reprojected scene points:
// n = normalize(h x v), sign flipped to face the camera (z <= 0). Pixels
// with any invalid 4-neighbor become invalid.
NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& intrinsics);

// Appearance-weighted Gaussian smoothing: neighbors are weighted by a
// spatial Gaussian (sigma = radius) damped by exp(-|dI| / beta), beta = 10;
// the weighted sum is renormalized. Invalid neighbors contribute nothing; a
// zero-length sum keeps the raw normal.
NormalMap smooth_normals(const NormalMap& raw, const ImageU8& image, int radius);

// Geometry-based confidence: (<n_p, n_plane> <n_plane, v> - cos rho) /
// (1 - cos rho) when both enclosed angles stay within the critical angle
// rho, else 0; v is the reverted viewing direction (0, 0, -1). Scores are
// clamped to [0, 1]; invalid normals score 0.
ConfidenceMap confidence_map(const NormalMap& normals, const Eigen::Vector3d& sweep_normal,
                             double rho_degrees = 60.0);

}  // namespace fassmvs
