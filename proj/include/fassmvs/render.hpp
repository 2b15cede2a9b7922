#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "fassmvs/geometry.hpp"
#include "fassmvs/raster.hpp"

namespace fassmvs {

enum class TextureKind { Checkerboard, ValueNoise };

// Textured analytic plane in the world frame. extent_u/extent_v are half
// sizes of the textured rectangle around `point` (infinite by default).
struct ScenePlane {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d(0, 0, -1);
    Eigen::Vector3d u_axis = Eigen::Vector3d(1, 0, 0);
    double extent_u = std::numeric_limits<double>::infinity();
    double extent_v = std::numeric_limits<double>::infinity();
};

struct SyntheticScene {
    std::vector<ScenePlane> planes;
    std::vector<Pose> poses;
    Intrinsics intrinsics;
    TextureKind texture = TextureKind::ValueNoise;
    double texture_scale = 0.5;  // world units per texture cell
    std::uint64_t seed = 1;
};

struct RenderedView {
    CalibratedView view;
    DepthMap gt_depth;
    NormalMap gt_normals;
};

// Deterministic fractal value noise in [0, 1): hashed lattice values,
// smoothstep-interpolated, three octaves.
double value_noise(double u, double v, std::uint64_t seed);

// Each pixel casts its viewing ray, intersects the nearest scene plane and
// evaluates the analytic texture at the hit point, so the views of one plane
// are exact homography warps of each other. Ground-truth depth is the ray's
// z-depth, ground-truth normals are the plane normals in the camera frame
// (camera-facing sign). Rays that miss every plane are invalid.
std::vector<RenderedView> render_scene(const SyntheticScene& scene);

// Camera centers stepped along +x with identity orientation, centered on
// the origin.
std::vector<Pose> lateral_trajectory(int views, double step);

// Single fronto-parallel plane at the given depth, value-noise texture.
SyntheticScene fronto_scene(int width, int height, double focal, double depth, int views,
                            double baseline_step, std::uint64_t seed);

// Single plane tilted about the x-axis by tilt_deg, passing through
// (0, 0, depth).
SyntheticScene slanted_scene(int width, int height, double focal, double depth,
                             double tilt_deg, int views, double baseline_step,
                             std::uint64_t seed);

}  // namespace fassmvs
