#include "fassmvs/render.hpp"

#include <cmath>
#include <limits>

#include "fassmvs/parallel.hpp"

namespace fassmvs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
    const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(ix) * 0x8da6b343ULL ^
                                       static_cast<std::uint64_t>(iy) * 0xd8163841ULL ^ seed);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double noise_octave(double u, double v, std::uint64_t seed) {
    const double fu = std::floor(u), fv = std::floor(v);
    const std::int64_t iu = static_cast<std::int64_t>(fu);
    const std::int64_t iv = static_cast<std::int64_t>(fv);
    double au = u - fu, av = v - fv;
    au = au * au * (3.0 - 2.0 * au);  // smoothstep
    av = av * av * (3.0 - 2.0 * av);
    const double v00 = lattice_value(iu, iv, seed);
    const double v10 = lattice_value(iu + 1, iv, seed);
    const double v01 = lattice_value(iu, iv + 1, seed);
    const double v11 = lattice_value(iu + 1, iv + 1, seed);
    return (1 - av) * ((1 - au) * v00 + au * v10) + av * ((1 - au) * v01 + au * v11);
}

}  // namespace

double value_noise(double u, double v, std::uint64_t seed) {
    double sum = 0.0, amp = 1.0, total = 0.0, freq = 1.0;
    for (int octave = 0; octave < 3; ++octave) {
        sum += amp * noise_octave(u * freq, v * freq, seed + octave);
        total += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / total;
}

std::vector<RenderedView> render_scene(const SyntheticScene& scene) {
    scene.intrinsics.validate();
    if (scene.planes.empty() || scene.poses.empty())
        throw InvalidInputError("render: scene needs at least one plane and one pose");
    if (!(scene.texture_scale > 0.0))
        throw InvalidInputError("render: texture scale must be positive");

    struct PlaneFrame {
        Eigen::Vector3d point, normal, u_axis, v_axis;
        double extent_u, extent_v;
    };
    std::vector<PlaneFrame> frames;
    for (const auto& p : scene.planes) {
        PlaneFrame f;
        f.point = p.point;
        f.normal = p.normal.normalized();
        f.u_axis = (p.u_axis - p.u_axis.dot(f.normal) * f.normal).normalized();
        f.v_axis = f.normal.cross(f.u_axis);
        f.extent_u = p.extent_u;
        f.extent_v = p.extent_v;
        frames.push_back(f);
    }

    const int w = scene.intrinsics.width, h = scene.intrinsics.height;
    std::vector<RenderedView> out(scene.poses.size());
    for (std::size_t vi = 0; vi < scene.poses.size(); ++vi) {
        const Pose& pose = scene.poses[vi];
        pose.validate();
        RenderedView rv;
        rv.view.intrinsics = scene.intrinsics;
        rv.view.pose = pose;
        rv.view.image = ImageU8(w, h, 0);
        rv.gt_depth = DepthMap(w, h, 0.0f);
        rv.gt_normals = make_normal_map(w, h);

        parallel_for(0, h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                const Eigen::Vector3d ray_cam = scene.intrinsics.unproject(
                    {static_cast<double>(x), static_cast<double>(y)});
                const Eigen::Vector3d dir = pose.rotation.transpose() * ray_cam;

                double best_t = std::numeric_limits<double>::infinity();
                int best_plane = -1;
                double best_u = 0, best_v = 0;
                for (std::size_t pi = 0; pi < frames.size(); ++pi) {
                    const PlaneFrame& f = frames[pi];
                    const double denom = f.normal.dot(dir);
                    if (std::abs(denom) < 1e-12)
                        continue;
                    const double t = f.normal.dot(f.point - pose.center) / denom;
                    if (t <= 0.0 || t >= best_t)
                        continue;
                    const Eigen::Vector3d hit = pose.center + t * dir;
                    const double pu = (hit - f.point).dot(f.u_axis);
                    const double pv = (hit - f.point).dot(f.v_axis);
                    if (std::abs(pu) > f.extent_u || std::abs(pv) > f.extent_v)
                        continue;
                    best_t = t;
                    best_plane = static_cast<int>(pi);
                    best_u = pu;
                    best_v = pv;
                }
                if (best_plane < 0)
                    continue;

                double value;
                const double tu = best_u / scene.texture_scale;
                const double tv = best_v / scene.texture_scale;
                if (scene.texture == TextureKind::Checkerboard) {
                    const long parity = static_cast<long>(std::floor(tu)) +
                                        static_cast<long>(std::floor(tv));
                    value = (parity & 1) ? 224.0 / 255.0 : 32.0 / 255.0;
                } else {
                    value = value_noise(tu, tv, scene.seed + 7919 * best_plane);
                }
                rv.view.image.at(x, y) =
                    static_cast<std::uint8_t>(std::lround(255.0 * value));

                // ray_cam has unit z, so the ray parameter is the z-depth
                rv.gt_depth.at(x, y) = static_cast<float>(best_t);
                Eigen::Vector3d n_cam = pose.rotation * frames[best_plane].normal;
                if (n_cam.z() > 0.0)
                    n_cam = -n_cam;
                rv.gt_normals.at(x, y) = n_cam.cast<float>();
            }
        });
        out[vi] = std::move(rv);
    }
    return out;
}

std::vector<Pose> lateral_trajectory(int views, double step) {
    std::vector<Pose> poses(views);
    for (int i = 0; i < views; ++i)
        poses[i].center = Eigen::Vector3d((i - (views - 1) / 2.0) * step, 0.0, 0.0);
    return poses;
}

namespace {

SyntheticScene base_scene(int width, int height, double focal, int views,
                          double baseline_step, std::uint64_t seed) {
    SyntheticScene s;
    s.intrinsics = {focal, focal, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
    s.poses = lateral_trajectory(views, baseline_step);
    s.seed = seed;
    return s;
}

}  // namespace

SyntheticScene fronto_scene(int width, int height, double focal, double depth, int views,
                            double baseline_step, std::uint64_t seed) {
    SyntheticScene s = base_scene(width, height, focal, views, baseline_step, seed);
    ScenePlane plane;
    plane.point = Eigen::Vector3d(0, 0, depth);
    plane.normal = Eigen::Vector3d(0, 0, -1);
    s.planes.push_back(plane);
    return s;
}

SyntheticScene slanted_scene(int width, int height, double focal, double depth,
                             double tilt_deg, int views, double baseline_step,
                             std::uint64_t seed) {
    SyntheticScene s = base_scene(width, height, focal, views, baseline_step, seed);
    const double rad = tilt_deg * M_PI / 180.0;
    ScenePlane plane;
    plane.point = Eigen::Vector3d(0, 0, depth);
    plane.normal = Eigen::Vector3d(0.0, -std::sin(rad), -std::cos(rad));
    s.planes.push_back(plane);
    return s;
}

}  // namespace fassmvs
