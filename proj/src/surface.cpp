#include "fassmvs/surface.hpp"

#include <cmath>

#include "fassmvs/parallel.hpp"

namespace fassmvs {

NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& intrinsics) {
    NormalMap out = make_normal_map(depth.width(), depth.height());
    parallel_for(0, depth.height(), [&](int y) {
        for (int x = 0; x < depth.width(); ++x) {
            if (x < 1 || y < 1 || x >= depth.width() - 1 || y >= depth.height() - 1)
                continue;
            const float dc = depth.at(x, y);
            const float dl = depth.at(x - 1, y), dr = depth.at(x + 1, y);
            const float du = depth.at(x, y - 1), dd = depth.at(x, y + 1);
            if (!depth_valid(dc) || !depth_valid(dl) || !depth_valid(dr) ||
                !depth_valid(du) || !depth_valid(dd))
                continue;
            const auto point = [&](int px, int py, float d) -> Eigen::Vector3d {
                return static_cast<double>(d) *
                       intrinsics.unproject({static_cast<double>(px),
                                             static_cast<double>(py)});
            };
            const Eigen::Vector3d h = point(x + 1, y, dr) - point(x - 1, y, dl);
            const Eigen::Vector3d v = point(x, y + 1, dd) - point(x, y - 1, du);
            Eigen::Vector3d n = h.cross(v);
            const double len = n.norm();
            if (len < 1e-15)
                continue;
            n /= len;
            if (n.z() > 0.0)
                n = -n;
            out.at(x, y) = n.cast<float>();
        }
    });
    return out;
}

NormalMap smooth_normals(const NormalMap& raw, const ImageU8& image, int radius) {
    if (radius < 1)
        throw ConfigError("smooth normals: radius must be at least 1");
    if (raw.width() != image.width() || raw.height() != image.height())
        throw InvalidInputError("smooth normals: normal map and image sizes differ");
    const double sigma = radius;
    const double beta = 10.0;
    const double gauss_norm = 1.0 / std::sqrt(2.0 * M_PI * sigma * sigma);

    NormalMap out = make_normal_map(raw.width(), raw.height());
    parallel_for(0, raw.height(), [&](int y) {
        for (int x = 0; x < raw.width(); ++x) {
            const Eigen::Vector3f center = raw.at(x, y);
            if (!normal_valid(center))
                continue;
            Eigen::Vector3d sum = center.cast<double>();
            const double ic = image.at(x, y);
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (dx == 0 && dy == 0)
                        continue;
                    const int qx = x + dx, qy = y + dy;
                    if (!raw.contains(qx, qy))
                        continue;
                    const Eigen::Vector3f nq = raw.at(qx, qy);
                    if (!normal_valid(nq))
                        continue;
                    const double dist2 = static_cast<double>(dx) * dx +
                                         static_cast<double>(dy) * dy;
                    const double di = std::abs(static_cast<double>(image.at(qx, qy)) - ic);
                    const double w = gauss_norm *
                                     std::exp(-dist2 / (2.0 * sigma * sigma) - di / beta);
                    sum += w * nq.cast<double>();
                }
            }
            const double len = sum.norm();
            out.at(x, y) = len > 1e-15 ? (sum / len).cast<float>() : center;
        }
    });
    return out;
}

ConfidenceMap confidence_map(const NormalMap& normals, const Eigen::Vector3d& sweep_normal,
                             double rho_degrees) {
    const double cos_rho = std::cos(rho_degrees * M_PI / 180.0);
    const Eigen::Vector3d view(0, 0, -1);
    const double plane_dot_view = sweep_normal.dot(view);

    ConfidenceMap out(normals.width(), normals.height(), 0.0f);
    parallel_for(0, normals.height(), [&](int y) {
        for (int x = 0; x < normals.width(); ++x) {
            const Eigen::Vector3f n = normals.at(x, y);
            if (!normal_valid(n))
                continue;
            const double normal_dot_plane = n.cast<double>().dot(sweep_normal);
            if (normal_dot_plane < cos_rho || plane_dot_view < cos_rho)
                continue;  // an enclosed angle exceeds the critical angle
            const double score = (normal_dot_plane * plane_dot_view - cos_rho) /
                                 (1.0 - cos_rho);
            out.at(x, y) = static_cast<float>(std::clamp(score, 0.0, 1.0));
        }
    });
    return out;
}

}  // namespace fassmvs
