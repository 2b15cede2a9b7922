#include "fassmvs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fassmvs/parallel.hpp"
#include "fassmvs/surface.hpp"

namespace fassmvs {

void PipelineConfig::validate() const {
    if (bundle_size < 3 || bundle_size % 2 == 0)
        throw ConfigError("pipeline: bundle size must be odd and at least 3");
    if (pyramid_levels < 1)
        throw ConfigError("pipeline: need at least one pyramid level");
    depth_bounds.validate();
    if (std::abs(sweep_normal.norm() - 1.0) > 1e-9)
        throw ConfigError("pipeline: sweep normal must be unit length");
    if (max_planes < 2)
        throw ConfigError("pipeline: max_planes must be at least 2");
    if (normal_smoothing_radius < 1)
        throw ConfigError("pipeline: normal smoothing radius must be at least 1");
    sgm.validate();
    cost.validate();
    if (sgm.variant == SgmVariant::SurfaceNormal && pyramid_levels < 2)
        throw ConfigError(
            "pipeline: surface-normal SGM needs a prior normal map and therefore at least "
            "two pyramid levels");
}

Raster<float> gaussian_blur(const ImageU8& image, int radius, double sigma) {
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (auto& k : kernel)
        k /= sum;

    const int w = image.width(), h = image.height();
    // Mirror without repeating the edge pixel; constant images stay constant.
    const auto reflect = [](int i, int n) {
        if (n == 1)
            return 0;
        while (i < 0 || i >= n) {
            if (i < 0)
                i = -i;
            if (i >= n)
                i = 2 * (n - 1) - i;
        }
        return i;
    };

    Raster<float> tmp(w, h, 0.0f);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * image.at(reflect(x + i, w), y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    });
    Raster<float> out(w, h, 0.0f);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(x, reflect(y + i, h));
            out.at(x, y) = static_cast<float>(acc);
        }
    });
    return out;
}

namespace {

ImageU8 blur_and_halve(const ImageU8& image) {
    const Raster<float> blurred = gaussian_blur(image, 1, 1.0);
    const int w = (image.width() + 1) / 2;
    const int h = (image.height() + 1) / 2;
    ImageU8 out(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = static_cast<std::uint8_t>(
                std::clamp<long>(std::lround(blurred.at(2 * x, 2 * y)), 0, 255));
    return out;
}

template <typename T>
Raster<T> upscale_nearest_impl(const Raster<T>& map, int width, int height) {
    if (width == map.width() && height == map.height())
        return map;
    if ((map.width() + 1) / 2 > width || (map.height() + 1) / 2 > height)
        throw InvalidInputError("upscale: target smaller than the source level");
    Raster<T> out(width, height, T{});
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.at(x, y) = map.at(std::min(x / 2, map.width() - 1),
                                  std::min(y / 2, map.height() - 1));
    return out;
}

}  // namespace

PyramidLevelSet build_pyramids(const std::vector<CalibratedView>& bundle, int levels) {
    if (levels < 1)
        throw ConfigError("pyramids: need at least one level");
    for (const auto& v : bundle)
        v.validate();
    PyramidLevelSet set;
    set.levels.resize(levels);
    set.levels[0] = bundle;
    for (int l = 1; l < levels; ++l) {
        set.levels[l].reserve(bundle.size());
        for (const auto& prev : set.levels[l - 1]) {
            CalibratedView v;
            v.image = blur_and_halve(prev.image);
            v.intrinsics = prev.intrinsics.halved();
            v.pose = prev.pose;
            set.levels[l].push_back(std::move(v));
        }
    }
    return set;
}

DepthMap upscale_nearest(const DepthMap& map, int width, int height) {
    return upscale_nearest_impl(map, width, height);
}

NormalMap upscale_nearest(const NormalMap& map, int width, int height) {
    return upscale_nearest_impl(map, width, height);
}

SamplingRange refine_range(const DepthMap& prior, const RangePolicy& policy,
                           const DepthBounds& bounds, const PlaneStack* coarser_planes,
                           const Intrinsics* intrinsics) {
    bounds.validate();
    if (policy.kind == RangePolicy::Kind::SpacingMultiple &&
        (!coarser_planes || !intrinsics || coarser_planes->count() < 2))
        throw ConfigError("refine range: spacing policy needs the coarser plane stack");

    SamplingRange r = SamplingRange::uniform(bounds, prior.width(), prior.height());
    if (policy.kind == RangePolicy::Kind::Full)
        return r;

    for (int y = 0; y < prior.height(); ++y) {
        for (int x = 0; x < prior.width(); ++x) {
            const float d = prior.at(x, y);
            if (!depth_valid(d))
                continue;  // keep the full interval
            double dd = policy.value;
            if (policy.kind == RangePolicy::Kind::SpacingMultiple) {
                const double denom = coarser_planes->normal.dot(intrinsics->unproject(
                    {static_cast<double>(x), static_cast<double>(y)}));
                if (std::abs(denom) < 1e-12)
                    continue;
                const double scale = -1.0 / denom;
                if (scale <= 0.0)
                    continue;
                const int i = coarser_planes->nearest_index(d / scale);
                const int j = std::min(i, coarser_planes->count() - 2);
                const double gap =
                    coarser_planes->distances[j] - coarser_planes->distances[j + 1];
                dd = policy.value * scale * gap;
            }
            r.lo.at(x, y) = static_cast<float>(std::max(bounds.d_min, d - dd));
            r.hi.at(x, y) = static_cast<float>(std::min(bounds.d_max, d + dd));
        }
    }
    return r;
}

DepthMap median_filter_5x5(const DepthMap& depth) {
    DepthMap out(depth.width(), depth.height(), 0.0f);
    parallel_for(0, depth.height(), [&](int y) {
        float window[25];
        for (int x = 0; x < depth.width(); ++x) {
            int in_image = 0, valid = 0;
            for (int dy = -2; dy <= 2; ++dy) {
                for (int dx = -2; dx <= 2; ++dx) {
                    if (!depth.contains(x + dx, y + dy))
                        continue;
                    ++in_image;
                    const float d = depth.at(x + dx, y + dy);
                    if (depth_valid(d))
                        window[valid++] = d;
                }
            }
            if (2 * valid < in_image)
                continue;
            std::sort(window, window + valid);
            out.at(x, y) = window[valid / 2];
        }
    });
    return out;
}

BundleResult estimate_bundle(const std::vector<CalibratedView>& bundle,
                             const PipelineConfig& config) {
    config.validate();
    if (bundle.size() < 3 || bundle.size() % 2 == 0)
        throw InvalidInputError("estimate: bundle must hold an odd number (>= 3) of views");
    const int ref_index = static_cast<int>(bundle.size()) / 2;
    const int per_side = static_cast<int>(bundle.size()) / 2;
    const int n = config.pyramid_levels;

    const PyramidLevelSet pyramids = build_pyramids(bundle, n);

    DepthMap prior_depth;
    NormalMap prior_normals;
    PlaneStack coarser_stack;
    bool have_prior = false;
    BundleResult result;

    for (int l = n - 1; l >= 0; --l) {
        const auto& views = pyramids.levels[l];
        const CalibratedView& ref = views[ref_index];
        const Intrinsics& intr = ref.intrinsics;
        const int w = intr.width, h = intr.height;

        // Plane stack: unit-pixel spacing against the most distant camera.
        const auto [delta_min, delta_max] =
            bounding_distances(config.depth_bounds, config.sweep_normal, intr);
        int far_view = ref_index == 0 ? 1 : 0;
        double far_dist = -1.0;
        for (int k = 0; k < static_cast<int>(views.size()); ++k) {
            if (k == ref_index)
                continue;
            const double dist = (views[k].pose.center - ref.pose.center).norm();
            if (dist > far_dist) {
                far_dist = dist;
                far_view = k;
            }
        }
        const int cap = l == n - 1 ? config.max_planes : std::numeric_limits<int>::max();
        PlaneStack stack;
        stack.normal = config.sweep_normal;
        stack.distances =
            plane_distances(intr, ref.pose, views[far_view].intrinsics, views[far_view].pose,
                            delta_min, delta_max, config.sweep_normal, cap);

        SamplingRange ranges =
            l == n - 1 ? SamplingRange::uniform(config.depth_bounds, w, h)
                       : refine_range(prior_depth, config.range_policy, config.depth_bounds,
                                      &coarser_stack, &intr);

        const CostVolume volume =
            sweep_cost_volume(views, ref_index, stack, ranges, config.cost);

        SgmConfig sgm_cfg = config.sgm;
        sgm_cfg.penalty_scale = per_side;
        if (sgm_cfg.variant == SgmVariant::SurfaceNormal && !have_prior)
            sgm_cfg.variant = SgmVariant::Plane;  // bootstrap at the coarsest level
        const AggregatedVolume agg =
            aggregate(volume, ref.image, sgm_cfg, intr,
                      have_prior ? &prior_normals : nullptr,
                      have_prior ? &prior_depth : nullptr);
        const PlaneIndexMap winners = wta(agg);

        // Depth conversion with parabola refinement between plane neighbors.
        DepthMap depth(w, h, 0.0f);
        parallel_for(0, h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                const std::int32_t i = winners.at(x, y);
                if (i < 0)
                    continue;
                const Eigen::Vector2d px(static_cast<double>(x), static_cast<double>(y));
                const double d_win = depth_from_plane(px, stack.plane(i), intr);
                if (d_win <= 0.0)
                    continue;
                const std::size_t p = agg.pixel(x, y);
                const std::int32_t f = agg.first[p];
                double d = d_win;
                if (i - 1 >= f && i + 1 < f + agg.count[p]) {
                    const std::uint32_t* v = agg.values.data() + agg.offset[p];
                    const double d_lo = depth_from_plane(px, stack.plane(i + 1), intr);
                    const double d_hi = depth_from_plane(px, stack.plane(i - 1), intr);
                    if (d_lo > 0.0 && d_hi > 0.0 && d_lo < d_win && d_win < d_hi)
                        d = parabola_refine(d_lo, d_win, d_hi,
                                            static_cast<double>(v[i + 1 - f]),
                                            static_cast<double>(v[i - f]),
                                            static_cast<double>(v[i - 1 - f]));
                }
                depth.at(x, y) = static_cast<float>(d);
            }
        });

        depth = median_filter_5x5(depth);

        const NormalMap raw = normals_from_depth(depth, intr);
        NormalMap normals = smooth_normals(raw, ref.image, config.normal_smoothing_radius);
        ConfidenceMap conf = confidence_map(normals, config.sweep_normal);

        if (l > 0) {
            const Intrinsics& next = pyramids.levels[l - 1][ref_index].intrinsics;
            prior_depth = upscale_nearest(depth, next.width, next.height);
            prior_normals = upscale_nearest(normals, next.width, next.height);
            coarser_stack = stack;
            have_prior = true;
        } else {
            result.depth = std::move(depth);
            result.normals = std::move(normals);
            result.confidence = std::move(conf);
        }
    }
    return result;
}

}  // namespace fassmvs
