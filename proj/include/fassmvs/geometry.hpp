#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fassmvs/errors.hpp"
#include "fassmvs/raster.hpp"

namespace fassmvs {

// Camera coordinate convention: right-handed, +z along the viewing
// direction, pixel (0,0) at the top-left pixel center. Fronto-parallel
// sweep planes have normal (0, 0, -1); a plane (n, delta) contains the
// camera-frame points X with n.X + delta = 0.

struct Intrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    void validate() const;
    Eigen::Matrix3d matrix() const;

    // K^-1 * (x, y, 1); z component is always 1, so scaling the ray by d
    // places the point at z-depth d.
    Eigen::Vector3d unproject(const Eigen::Vector2d& px) const {
        return {(px.x() - cx) / fx, (px.y() - cy) / fy, 1.0};
    }
    Eigen::Vector2d project(const Eigen::Vector3d& camera_point) const {
        return {fx * camera_point.x() / camera_point.z() + cx,
                fy * camera_point.y() / camera_point.z() + cy};
    }

    // Next pyramid level: focal length and principal point halve, image
    // dimensions halve rounding up.
    Intrinsics halved() const;
};

// rotation maps reference-frame vectors into the camera frame; center is the
// optical center in the reference frame. Projection of a reference-frame
// point X: K * rotation * (X - center).
struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d center = Eigen::Vector3d::Zero();

    void validate() const;  // orthonormal, det +1, to 1e-9

    Eigen::Vector3d to_camera(const Eigen::Vector3d& x) const { return rotation * (x - center); }
    Eigen::Vector3d to_world(const Eigen::Vector3d& xc) const {
        return rotation.transpose() * xc + center;
    }
    Eigen::Matrix<double, 3, 4> projection(const Intrinsics& k) const;
};

struct CalibratedView {
    ImageU8 image;
    Intrinsics intrinsics;
    Pose pose;

    void validate() const;  // image dimensions must match the intrinsics
};

// Sweep plane in the reference camera frame: unit normal and orthogonal
// distance (> 0) from the reference optical center.
struct SweepPlane {
    Eigen::Vector3d normal;
    double distance = 0;

    void validate() const;
};

struct DepthBounds {
    double d_min = 0, d_max = 0;

    DepthBounds(double lo, double hi) : d_min(lo), d_max(hi) { validate(); }
    void validate() const;
};

// The ordered list of sweep-plane distances (far to near) sharing one
// normal; the hypothesis axis of the cost volume.
struct PlaneStack {
    Eigen::Vector3d normal = Eigen::Vector3d(0, 0, -1);
    std::vector<double> distances;

    int count() const { return static_cast<int>(distances.size()); }
    SweepPlane plane(int i) const { return {normal, distances[i]}; }

    // Fractional position of a distance in the (strictly decreasing) list,
    // linearly extrapolated beyond the ends, and its rounded clamped index.
    double fractional_index(double delta) const;
    int nearest_index(double delta) const;
};

// Homography mapping reference-image points onto points of the other image,
// for scene points on the given plane: K_k * (R - t n^T) / delta * K_ref^-1.
Eigen::Matrix3d plane_homography(const SweepPlane& plane, const Intrinsics& ref_intr,
                                 const Pose& ref_pose, const Intrinsics& other_intr,
                                 const Pose& other_pose);

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& h, const Eigen::Vector2d& px);

// Bounding-plane distances for a sweep with the given normal: the reference
// view frustum is truncated at d_min/d_max and the distances are the minimum
// |n . X| over the four corner points on each of the two planes. For a
// fronto-parallel normal these are exactly (d_min, d_max).
std::pair<double, double> bounding_distances(const DepthBounds& bounds,
                                             const Eigen::Vector3d& normal,
                                             const Intrinsics& ref_intr);

// All camera centers must lie in front of the near bounding plane
// (n . C + delta_min > 0), otherwise the warped image orientation flips.
// Centers are given in the reference camera frame.
void require_centers_in_front(const Eigen::Vector3d& normal, double delta_min,
                              std::span<const Eigen::Vector3d> centers_in_ref);

// Cross-ratio of four distinct collinear points (2- or 3-vectors):
// d(p1,p3) d(p2,p4) / (d(p1,p4) d(p2,p3)).
double cross_ratio(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                   const Eigen::Vector2d& p3, const Eigen::Vector2d& p4);
double cross_ratio(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                   const Eigen::Vector3d& p3, const Eigen::Vector3d& p4);

// Plane distances between delta_max and delta_min (strictly decreasing),
// spaced so that warping the extremal corner pixel with two consecutive
// planes moves it by at most one pixel along the epipolar line in the other
// view. `other` should be the bundle camera inducing the largest disparity.
// If unit-pixel stepping yields more than max_planes distances, the list is
// subsampled uniformly in epipolar-line pixel coordinates, endpoints kept.
std::vector<double> plane_distances(const Intrinsics& ref_intr, const Pose& ref_pose,
                                    const Intrinsics& other_intr, const Pose& other_pose,
                                    double delta_min, double delta_max,
                                    const Eigen::Vector3d& normal, int max_planes);

// z-depth of the intersection of the viewing ray through `pixel` with the
// plane: -delta / (n . K^-1 (x, y, 1)). Returns 0 when the ray is parallel
// to the plane or the intersection lies behind the camera.
double depth_from_plane(const Eigen::Vector2d& pixel, const SweepPlane& plane,
                        const Intrinsics& intr);

}  // namespace fassmvs
