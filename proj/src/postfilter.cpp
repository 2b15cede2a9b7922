#include "fassmvs/postfilter.hpp"

#include <cmath>
#include <vector>

#include "fassmvs/parallel.hpp"
#include "fassmvs/pipeline.hpp"

namespace fassmvs {

namespace {

// Remove 8-connected components of `value` pixels smaller than min_size.
void remove_speckles(TextureMask& mask, std::uint8_t value, int min_size) {
    const int w = mask.width(), h = mask.height();
    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::pair<int, int>> stack;
    std::vector<std::pair<int, int>> component;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            if (mask.at(x, y) != value || label[p] != -1)
                continue;
            stack.assign(1, {x, y});
            component.clear();
            label[p] = 1;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                component.emplace_back(cx, cy);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if ((dx == 0 && dy == 0) || !mask.contains(nx, ny))
                            continue;
                        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                        if (mask.at(nx, ny) == value && label[q] == -1) {
                            label[q] = 1;
                            stack.emplace_back(nx, ny);
                        }
                    }
                }
            }
            if (static_cast<int>(component.size()) < min_size)
                for (const auto& [cx, cy] : component)
                    mask.at(cx, cy) = value ? 0 : 1;
        }
    }
}

TextureMask dilate_3x3(const TextureMask& mask) {
    TextureMask out(mask.width(), mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            std::uint8_t v = 0;
            for (int dy = -1; dy <= 1 && !v; ++dy)
                for (int dx = -1; dx <= 1 && !v; ++dx)
                    if (mask.contains(x + dx, y + dy) && mask.at(x + dx, y + dy))
                        v = 1;
            out.at(x, y) = v;
        }
    return out;
}

}  // namespace

TextureMask dog_mask(const ImageU8& image) {
    const Raster<float> smooth = gaussian_blur(image, 3, 1.4);
    TextureMask mask(image.width(), image.height(), 0);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            mask.at(x, y) =
                std::abs(static_cast<float>(image.at(x, y)) - smooth.at(x, y)) > 0.5f ? 1 : 0;

    remove_speckles(mask, 1, 7);
    mask = dilate_3x3(mask);
    remove_speckles(mask, 0, 21);
    return mask;
}

void apply_mask(DepthMap& depth, NormalMap& normals, ConfidenceMap& confidence,
                const TextureMask& mask) {
    if (!depth.same_size(normals) || !depth.same_size(confidence) ||
        depth.width() != mask.width() || depth.height() != mask.height())
        throw InvalidInputError("apply mask: map sizes differ");
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x)
            if (!mask.at(x, y)) {
                depth.at(x, y) = 0.0f;
                normals.at(x, y).setZero();
                confidence.at(x, y) = 0.0f;
            }
}

TextureMask geometric_consistency_mask(const std::vector<ConsistencyView>& window,
                                       int ref_index, const GeomFilterConfig& config) {
    if (config.eta_h < 1 || static_cast<int>(window.size()) < config.eta_h + 1)
        throw ConfigError("geometric filter: window smaller than eta_h + 1 views");
    if (ref_index < 0 || ref_index >= static_cast<int>(window.size()))
        throw InvalidInputError("geometric filter: reference index out of range");

    const ConsistencyView& ref = window[ref_index];
    const DepthMap& rd = ref.depth;
    TextureMask keep(rd.width(), rd.height(), 1);

    parallel_for(0, rd.height(), [&](int y) {
        for (int x = 0; x < rd.width(); ++x) {
            const float d = rd.at(x, y);
            if (!depth_valid(d))
                continue;
            const Eigen::Vector2d px(static_cast<double>(x), static_cast<double>(y));
            const Eigen::Vector3d world =
                ref.pose.to_world(static_cast<double>(d) * ref.intrinsics.unproject(px));

            int hits = 0;
            for (int k = 0; k < static_cast<int>(window.size()); ++k) {
                if (k == ref_index)
                    continue;
                const ConsistencyView& nb = window[k];
                const Eigen::Vector3d cam = nb.pose.to_camera(world);
                if (cam.z() <= 0.0)
                    continue;
                const Eigen::Vector2d q = nb.intrinsics.project(cam);
                if (q.x() < 0.0 || q.y() < 0.0 || q.x() > nb.depth.width() - 1.0 ||
                    q.y() > nb.depth.height() - 1.0)
                    continue;

                double dq = 0.0;
                const int qx = static_cast<int>(std::lround(q.x()));
                const int qy = static_cast<int>(std::lround(q.y()));
                if (config.lookup == DepthLookup::Bilinear) {
                    const int x0 = static_cast<int>(q.x()), y0 = static_cast<int>(q.y());
                    const int x1 = std::min(x0 + 1, nb.depth.width() - 1);
                    const int y1 = std::min(y0 + 1, nb.depth.height() - 1);
                    if (depth_valid(nb.depth.at(x0, y0)) && depth_valid(nb.depth.at(x1, y0)) &&
                        depth_valid(nb.depth.at(x0, y1)) && depth_valid(nb.depth.at(x1, y1)))
                        dq = bilinear(nb.depth, q.x(), q.y());
                    else
                        dq = nb.depth.at(qx, qy);
                } else {
                    dq = nb.depth.at(qx, qy);
                }
                if (!depth_valid(static_cast<float>(dq)))
                    continue;

                const Eigen::Vector3d back =
                    nb.pose.to_world(dq * nb.intrinsics.unproject(q));
                const Eigen::Vector3d ref_cam = ref.pose.to_camera(back);
                if (ref_cam.z() <= 0.0)
                    continue;
                const Eigen::Vector2d reproj = ref.intrinsics.project(ref_cam);
                if ((reproj - px).norm() < config.eta_r)
                    ++hits;
            }
            if (hits < config.eta_h)
                keep.at(x, y) = 0;
        }
    });
    return keep;
}

void geometric_filter(const std::vector<ConsistencyView>& window, int ref_index,
                      DepthMap& depth, NormalMap& normals, ConfidenceMap& confidence,
                      const GeomFilterConfig& config) {
    const TextureMask keep = geometric_consistency_mask(window, ref_index, config);
    apply_mask(depth, normals, confidence, keep);
}

}  // namespace fassmvs
