#include "fassmvs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fassmvs {

namespace {

constexpr double kOrthonormalTol = 1e-9;
constexpr double kUnitTol = 1e-9;
constexpr double kParallelTol = 1e-12;

}  // namespace

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw InvalidInputError("intrinsics: focal lengths must be positive");
    if (width < 1 || height < 1)
        throw InvalidInputError("intrinsics: image dimensions must be at least 1");
}

Eigen::Matrix3d Intrinsics::matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
}

Intrinsics Intrinsics::halved() const {
    Intrinsics h;
    h.fx = fx / 2.0;
    h.fy = fy / 2.0;
    h.cx = cx / 2.0;
    h.cy = cy / 2.0;
    h.width = (width + 1) / 2;
    h.height = (height + 1) / 2;
    return h;
}

void Pose::validate() const {
    const Eigen::Matrix3d gram = rotation * rotation.transpose();
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kOrthonormalTol)
        throw InvalidInputError("pose: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > kOrthonormalTol)
        throw InvalidInputError("pose: rotation determinant is not +1");
}

Eigen::Matrix<double, 3, 4> Pose::projection(const Intrinsics& k) const {
    Eigen::Matrix<double, 3, 4> rt;
    rt.leftCols<3>() = rotation;
    rt.col(3) = -rotation * center;
    return k.matrix() * rt;
}

void CalibratedView::validate() const {
    intrinsics.validate();
    pose.validate();
    if (image.width() != intrinsics.width || image.height() != intrinsics.height)
        throw InvalidInputError("calibrated view: image size does not match intrinsics");
}

void SweepPlane::validate() const {
    if (std::abs(normal.norm() - 1.0) > kUnitTol)
        throw InvalidInputError("sweep plane: normal must be unit length");
    if (!(distance > 0.0))
        throw InvalidInputError("sweep plane: distance must be positive");
}

void DepthBounds::validate() const {
    if (!(d_min > 0.0) || !(d_min < d_max))
        throw InvalidInputError("depth bounds: need 0 < d_min < d_max");
}

double PlaneStack::fractional_index(double delta) const {
    const auto& d = distances;
    const int n = count();
    if (n <= 1)
        return 0.0;
    if (delta >= d[0])
        return -(delta - d[0]) / (d[0] - d[1]);
    if (delta <= d[n - 1])
        return (n - 1) + (d[n - 1] - delta) / (d[n - 2] - d[n - 1]);
    int lo = 0, hi = n - 1;  // d[lo] >= delta >= d[lo+1]
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (d[mid] >= delta)
            lo = mid;
        else
            hi = mid;
    }
    return lo + (d[lo] - delta) / (d[lo] - d[lo + 1]);
}

int PlaneStack::nearest_index(double delta) const {
    const double f = fractional_index(delta);
    return std::clamp(static_cast<int>(std::llround(f)), 0, count() - 1);
}

Eigen::Matrix3d plane_homography(const SweepPlane& plane, const Intrinsics& ref_intr,
                                 const Pose& ref_pose, const Intrinsics& other_intr,
                                 const Pose& other_pose) {
    plane.validate();
    ref_intr.validate();
    other_intr.validate();
    const Eigen::Matrix3d r = other_pose.rotation * ref_pose.rotation.transpose();
    const Eigen::Vector3d t = other_pose.rotation * (ref_pose.center - other_pose.center);
    const Eigen::Matrix3d mid = r - t * plane.normal.transpose() / plane.distance;
    Eigen::Matrix3d k_ref_inv;
    k_ref_inv << 1.0 / ref_intr.fx, 0, -ref_intr.cx / ref_intr.fx,
                 0, 1.0 / ref_intr.fy, -ref_intr.cy / ref_intr.fy,
                 0, 0, 1;
    return other_intr.matrix() * mid * k_ref_inv;
}

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& h, const Eigen::Vector2d& px) {
    const Eigen::Vector3d q = h * Eigen::Vector3d(px.x(), px.y(), 1.0);
    return {q.x() / q.z(), q.y() / q.z()};
}

std::pair<double, double> bounding_distances(const DepthBounds& bounds,
                                             const Eigen::Vector3d& normal,
                                             const Intrinsics& ref_intr) {
    bounds.validate();
    ref_intr.validate();
    if (std::abs(normal.norm() - 1.0) > kUnitTol)
        throw InvalidInputError("bounding distances: normal must be unit length");

    const Eigen::Vector2d corners[4] = {
        {0.0, 0.0},
        {static_cast<double>(ref_intr.width - 1), 0.0},
        {0.0, static_cast<double>(ref_intr.height - 1)},
        {static_cast<double>(ref_intr.width - 1), static_cast<double>(ref_intr.height - 1)}};

    double delta_min = std::numeric_limits<double>::infinity();
    double delta_max = std::numeric_limits<double>::infinity();
    for (const auto& c : corners) {
        const Eigen::Vector3d ray = ref_intr.unproject(c);
        delta_min = std::min(delta_min, std::abs(normal.dot(bounds.d_min * ray)));
        delta_max = std::min(delta_max, std::abs(normal.dot(bounds.d_max * ray)));
    }
    if (!(delta_min > 0.0) || !(delta_min < delta_max))
        throw GeometryError("bounding distances: sweep normal degenerate for this frustum");
    return {delta_min, delta_max};
}

void require_centers_in_front(const Eigen::Vector3d& normal, double delta_min,
                              std::span<const Eigen::Vector3d> centers_in_ref) {
    for (const auto& c : centers_in_ref) {
        if (!(normal.dot(c) + delta_min > 0.0))
            throw GeometryError("sweep geometry: camera center behind the near bounding plane");
    }
}

namespace {

template <typename Vec>
double cross_ratio_impl(const Vec& p1, const Vec& p2, const Vec& p3, const Vec& p4) {
    const double d14 = (p4 - p1).norm();
    const double d23 = (p3 - p2).norm();
    if (d14 == 0.0 || d23 == 0.0)
        throw InvalidInputError("cross ratio: coincident points p1=p4 or p2=p3");
    return (p3 - p1).norm() * (p4 - p2).norm() / (d14 * d23);
}

// Unsigned sine of the angle between two rays.
double ray_sin(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return a.cross(b).norm() / (a.norm() * b.norm());
}

}  // namespace

double cross_ratio(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                   const Eigen::Vector2d& p3, const Eigen::Vector2d& p4) {
    return cross_ratio_impl(p1, p2, p3, p4);
}

double cross_ratio(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                   const Eigen::Vector3d& p3, const Eigen::Vector3d& p4) {
    return cross_ratio_impl(p1, p2, p3, p4);
}

std::vector<double> plane_distances(const Intrinsics& ref_intr, const Pose& ref_pose,
                                    const Intrinsics& other_intr, const Pose& other_pose,
                                    double delta_min, double delta_max,
                                    const Eigen::Vector3d& normal, int max_planes) {
    if (!(delta_min > 0.0) || delta_min > delta_max)
        throw InvalidInputError("plane distances: need 0 < delta_min <= delta_max");
    if (max_planes < 1)
        throw ConfigError("plane distances: max_planes must be at least 1");
    if (delta_min == delta_max)
        return {delta_min};

    // Corner pixel with the largest displacement under the near-plane warp.
    const SweepPlane near_plane{normal, delta_min};
    const Eigen::Matrix3d h_near =
        plane_homography(near_plane, ref_intr, ref_pose, other_intr, other_pose);
    const Eigen::Vector2d corners[4] = {
        {0.0, 0.0},
        {static_cast<double>(ref_intr.width - 1), 0.0},
        {0.0, static_cast<double>(ref_intr.height - 1)},
        {static_cast<double>(ref_intr.width - 1), static_cast<double>(ref_intr.height - 1)}};
    Eigen::Vector2d p_ref = corners[0];
    double best = -1.0;
    for (const auto& c : corners) {
        const double disp = (apply_homography(h_near, c) - c).norm();
        if (disp > best) {
            best = disp;
            p_ref = c;
        }
    }

    // Viewing ray through p_ref intersected with the bounding planes.
    const Eigen::Vector3d ray = ref_intr.unproject(p_ref);
    const double denom = normal.dot(ray);
    if (std::abs(denom) < kParallelTol)
        throw GeometryError("plane distances: corner ray parallel to the sweep planes");
    const Eigen::Vector3d p_min_ref = -delta_min / denom * ray;  // reference camera frame
    const Eigen::Vector3d p_max_ref = -delta_max / denom * ray;

    // Both scene points and the reference center expressed in the frame of
    // the other camera. The epipole direction stays usable even when its
    // image point is at infinity (pure lateral motion).
    const Pose rel{other_pose.rotation * ref_pose.rotation.transpose(),
                   other_pose.rotation * (ref_pose.center - other_pose.center)};
    const auto to_other = [&](const Eigen::Vector3d& x_ref) -> Eigen::Vector3d {
        return rel.rotation * x_ref + rel.center;
    };
    const Eigen::Vector3d v_epipole = rel.center;  // direction toward C_ref
    if (v_epipole.norm() < kParallelTol)
        throw GeometryError("plane distances: zero baseline between the two cameras");

    const Eigen::Vector3d x_min = to_other(p_min_ref);
    const Eigen::Vector3d x_max = to_other(p_max_ref);
    if (!(x_min.z() > 0.0) || !(x_max.z() > 0.0))
        throw GeometryError("plane distances: bounding intersections behind the other camera");
    const Eigen::Vector2d px_min = other_intr.project(x_min);
    const Eigen::Vector2d px_max = other_intr.project(x_max);

    const double span = (px_min - px_max).norm();
    if (span < kParallelTol)
        throw GeometryError("plane distances: no disparity change across the depth range");
    if (span > 1e6)
        throw GeometryError("plane distances: epipolar segment degenerate (near epipole)");
    const Eigen::Vector2d step = (px_min - px_max) / span;

    const Eigen::Vector3d v_max = other_intr.unproject(px_max);
    const Eigen::Vector3d v_min = other_intr.unproject(px_min);
    const double sin_e_max = ray_sin(v_epipole, v_max);
    const double sin_min_max = ray_sin(v_min, v_max);
    if (sin_e_max < kParallelTol || sin_min_max < kParallelTol)
        throw GeometryError("plane distances: epipole coincides with a bounding point");

    // Unit-pixel stepping from px_max toward px_min. The sine form of the
    // cross-ratio of (epipole, near point, sample, far point) rays equals the
    // cross-ratio of (C_ref, delta_min, delta, delta_max) along the viewing
    // ray, which solves in closed form for delta.
    std::vector<double> deltas;
    deltas.reserve(static_cast<std::size_t>(span) + 2);
    deltas.push_back(delta_max);
    const double range = delta_max - delta_min;
    for (double t = 1.0; t < span; t += 1.0) {
        const Eigen::Vector2d px = px_max + t * step;
        const Eigen::Vector3d v = other_intr.unproject(px);
        const double sin_e_i = ray_sin(v_epipole, v);
        const double sin_min_i = ray_sin(v_min, v);
        if (sin_min_i < kParallelTol)
            break;  // reached the near point within numerical precision
        const double q = (sin_e_i * sin_min_max) / (sin_e_max * sin_min_i);
        const double denom_q = q * delta_max - range;
        if (!(denom_q > 0.0))
            throw GeometryError("plane distances: cross-ratio solve degenerate");
        const double delta = q * delta_max * delta_min / denom_q;
        if (delta <= delta_min || delta >= deltas.back())
            continue;
        deltas.push_back(delta);
    }
    deltas.push_back(delta_min);

    const int n = static_cast<int>(deltas.size());
    if (n <= max_planes)
        return deltas;

    // Too many planes: keep max_planes of them, uniform in epipolar-line
    // pixel coordinates (list positions are unit steps), endpoints kept. The
    // one-pixel guarantee then degrades to ceil(n / max_planes) pixels per
    // retained pair.
    std::vector<double> picked;
    picked.reserve(max_planes);
    for (int m = 0; m < max_planes; ++m) {
        const int idx = static_cast<int>(
            std::llround(static_cast<double>(m) * (n - 1) / (max_planes - 1)));
        if (picked.empty() || deltas[idx] < picked.back())
            picked.push_back(deltas[idx]);
    }
    return picked;
}

double depth_from_plane(const Eigen::Vector2d& pixel, const SweepPlane& plane,
                        const Intrinsics& intr) {
    const double denom = plane.normal.dot(intr.unproject(pixel));
    if (std::abs(denom) < kParallelTol)
        return 0.0;
    const double d = -plane.distance / denom;
    return d > 0.0 ? d : 0.0;
}

}  // namespace fassmvs
