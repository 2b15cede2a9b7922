#include "fassmvs/sgm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fassmvs/parallel.hpp"

namespace fassmvs {

void SgmConfig::validate() const {
    if (paths != 8 && paths != 4)
        throw ConfigError("sgm: paths must be 8 or 4");
    if (phi1 < 0.0)
        throw ConfigError("sgm: penalties must be non-negative");
    if (!phi2_adaptive && phi2_fixed < phi1)
        throw ConfigError("sgm: the second penalty must not be smaller than the first");
    if (penalty_scale < 1)
        throw ConfigError("sgm: penalty scale must be at least 1");
}

double adaptive_phi2(double phi1, double alpha, double beta, double intensity_delta) {
    return phi1 * (1.0 + alpha * std::exp(-intensity_delta / beta));
}

namespace {

struct PathState {
    // Previous pixel on the path
    bool has_prev = false;
    int prev_x = 0, prev_y = 0;
    std::int32_t prev_first = 0, prev_count = 0;
    std::vector<std::uint32_t> prev_values;
    // Minimum-cost history for the path-gradient variant
    bool hist1_ok = false, hist2_ok = false;
    Eigen::Vector3d hist1_point, hist2_point;
    int hist1_index = 0;

    void reset() {
        has_prev = false;
        hist1_ok = hist2_ok = false;
    }
};

// Scene point of a (pixel, plane) pair, in the reference camera frame.
bool scene_point(const Intrinsics& intr, const PlaneStack& planes, int x, int y,
                 int plane_index, Eigen::Vector3d* out) {
    const Eigen::Vector3d ray =
        intr.unproject({static_cast<double>(x), static_cast<double>(y)});
    const double denom = planes.normal.dot(ray);
    if (std::abs(denom) < 1e-12)
        return false;
    const double t = -planes.distances[plane_index] / denom;
    if (t <= 0.0)
        return false;
    *out = t * ray;
    return true;
}

struct PathContext {
    const CostVolume& vol;
    const ImageU8& image;
    const SgmConfig& cfg;
    const Intrinsics& intr;
    const NormalOffsets* offsets;
    AggregatedVolume& out;
    std::int64_t phi1_eff;
    std::int64_t phi2_fixed_eff;
};

// Canonical-direction slot and sign for a step direction.
std::pair<int, int> canonical_slot(int dx, int dy) {
    for (int c = 0; c < 4; ++c) {
        if (kCanonicalDirs[c][0] == dx && kCanonicalDirs[c][1] == dy)
            return {c, +1};
        if (kCanonicalDirs[c][0] == -dx && kCanonicalDirs[c][1] == -dy)
            return {c, -1};
    }
    throw ConfigError("sgm: unsupported path direction");
}

}  // namespace

int normal_offset_for_dir(const NormalOffsets& offsets, int x, int y, int dir_x, int dir_y) {
    const auto [slot, sign] = canonical_slot(dir_x, dir_y);
    return sign * offsets.at(x, y)[slot];
}

namespace {

void walk_line(const PathContext& ctx, int start_x, int start_y, int dx, int dy) {
    const CostVolume& vol = ctx.vol;

    PathState st;
    std::vector<std::uint32_t> cur_values;
    int x = start_x, y = start_y;
    while (x >= 0 && y >= 0 && x < vol.width && y < vol.height) {
        const std::size_t p = vol.pixel(x, y);
        const std::int32_t f = vol.first[p];
        const std::int32_t c = vol.count[p];
        if (c == 0) {
            st.reset();
            x += dx;
            y += dy;
            continue;
        }
        const std::uint16_t* s = vol.costs.data() + vol.offset[p];
        cur_values.assign(static_cast<std::size_t>(c), 0);

        if (!st.has_prev) {
            for (std::int32_t i = 0; i < c; ++i)
                cur_values[i] = s[i];
        } else {
            std::uint32_t prev_min = std::numeric_limits<std::uint32_t>::max();
            for (std::int32_t i = 0; i < st.prev_count; ++i)
                prev_min = std::min(prev_min, st.prev_values[i]);

            std::int64_t phi2 = ctx.phi2_fixed_eff;
            if (ctx.cfg.phi2_adaptive) {
                const double di =
                    std::abs(static_cast<double>(ctx.image.at(x, y)) -
                             static_cast<double>(ctx.image.at(st.prev_x, st.prev_y)));
                phi2 = std::llround(
                    adaptive_phi2(ctx.cfg.phi1, ctx.cfg.alpha, ctx.cfg.beta, di) *
                    ctx.cfg.penalty_scale);
            }

            int shift = 0;
            if (ctx.cfg.variant == SgmVariant::SurfaceNormal && ctx.offsets) {
                shift = normal_offset_for_dir(*ctx.offsets, x, y, dx, dy);
            } else if (ctx.cfg.variant == SgmVariant::PathGradient && st.hist1_ok &&
                       st.hist2_ok) {
                const Eigen::Vector3d predicted =
                    st.hist1_point + (st.hist1_point - st.hist2_point);
                const double delta_pred = -vol.planes.normal.dot(predicted);
                if (delta_pred > 0.0) {
                    const int pred_index = vol.planes.nearest_index(delta_pred);
                    shift = std::clamp(st.hist1_index - pred_index, -3, 3);
                }
            }

            for (std::int32_t i = 0; i < c; ++i) {
                const std::int64_t target = static_cast<std::int64_t>(f) + i + shift;
                std::int64_t best = static_cast<std::int64_t>(prev_min) + phi2;
                const std::int64_t lo = st.prev_first;
                const std::int64_t hi = st.prev_first + st.prev_count;  // exclusive
                if (target >= lo && target < hi)
                    best = std::min(best,
                                    static_cast<std::int64_t>(st.prev_values[target - lo]));
                if (target - 1 >= lo && target - 1 < hi)
                    best = std::min(best, static_cast<std::int64_t>(
                                              st.prev_values[target - 1 - lo]) +
                                              ctx.phi1_eff);
                if (target + 1 >= lo && target + 1 < hi)
                    best = std::min(best, static_cast<std::int64_t>(
                                              st.prev_values[target + 1 - lo]) +
                                              ctx.phi1_eff);
                cur_values[i] = static_cast<std::uint32_t>(s[i] + best - prev_min);
            }
        }

        std::uint32_t* dst = ctx.out.values.data() + ctx.out.offset[p];
        for (std::int32_t i = 0; i < c; ++i)
            dst[i] += cur_values[i];

        if (ctx.cfg.variant == SgmVariant::PathGradient) {
            std::uint32_t cur_min = cur_values[0];
            std::int32_t cur_argmin = 0;
            for (std::int32_t i = 1; i < c; ++i) {
                if (cur_values[i] < cur_min) {
                    cur_min = cur_values[i];
                    cur_argmin = i;
                }
            }
            Eigen::Vector3d pt;
            if (scene_point(ctx.intr, vol.planes, x, y, f + cur_argmin, &pt)) {
                st.hist2_ok = st.hist1_ok;
                st.hist2_point = st.hist1_point;
                st.hist1_ok = true;
                st.hist1_point = pt;
                st.hist1_index = f + cur_argmin;
            } else {
                st.hist1_ok = st.hist2_ok = false;
            }
        }

        st.has_prev = true;
        st.prev_x = x;
        st.prev_y = y;
        st.prev_first = f;
        st.prev_count = c;
        st.prev_values.swap(cur_values);
        x += dx;
        y += dy;
    }
}

AggregatedVolume make_accumulator(const CostVolume& vol) {
    AggregatedVolume agg;
    agg.width = vol.width;
    agg.height = vol.height;
    agg.planes = vol.planes;
    agg.first = vol.first;
    agg.count = vol.count;
    agg.offset = vol.offset;
    agg.values.assign(vol.costs.size(), 0);
    return agg;
}

void add_path(const CostVolume& vol, const ImageU8& image, const SgmConfig& cfg,
              const Intrinsics& intr, const NormalOffsets* offsets, int dx, int dy,
              AggregatedVolume& agg) {
    // Start pixels: those whose predecessor lies outside the image. Each
    // line owns a disjoint pixel set, so lines run in parallel.
    std::vector<std::pair<int, int>> starts;
    for (int y = 0; y < vol.height; ++y)
        for (int x = 0; x < vol.width; ++x)
            if (!(x - dx >= 0 && y - dy >= 0 && x - dx < vol.width && y - dy < vol.height))
                starts.emplace_back(x, y);

    PathContext ctx{vol,     image,
                    cfg,     intr,
                    offsets, agg,
                    std::llround(cfg.phi1 * cfg.penalty_scale),
                    cfg.phi2_adaptive ? 0 : std::llround(cfg.phi2_fixed * cfg.penalty_scale)};
    parallel_for(0, static_cast<int>(starts.size()), [&](int i) {
        walk_line(ctx, starts[i].first, starts[i].second, dx, dy);
    });
}

std::vector<std::pair<int, int>> path_dirs(int paths) {
    std::vector<std::pair<int, int>> dirs;
    const int ncanon = paths == 8 ? 4 : 2;  // 4 paths: horizontal + vertical only
    for (int c = 0; c < ncanon; ++c) {
        dirs.emplace_back(kCanonicalDirs[c][0], kCanonicalDirs[c][1]);
        dirs.emplace_back(-kCanonicalDirs[c][0], -kCanonicalDirs[c][1]);
    }
    return dirs;
}

void check_aggregate_inputs(const CostVolume& vol, const ImageU8& image, const SgmConfig& cfg,
                            const NormalMap* prior_normals, const DepthMap* prior_depth) {
    cfg.validate();
    if (image.width() != vol.width || image.height() != vol.height)
        throw InvalidInputError("sgm: image size does not match the cost volume");
    if (cfg.variant == SgmVariant::SurfaceNormal && (!prior_normals || !prior_depth))
        throw ConfigError("sgm: surface-normal variant requires a prior normal and depth map");
}

}  // namespace

NormalOffsets compute_normal_offsets(const NormalMap& prior_normals,
                                     const DepthMap& prior_depth, const PlaneStack& planes,
                                     const Intrinsics& intrinsics) {
    if (!prior_normals.same_size(prior_depth))
        throw InvalidInputError("normal offsets: normal and depth map sizes differ");
    NormalOffsets out(prior_normals.width(), prior_normals.height(),
                      std::array<std::int16_t, 4>{0, 0, 0, 0});
    parallel_for(0, prior_normals.height(), [&](int y) {
        for (int x = 0; x < prior_normals.width(); ++x) {
            const Eigen::Vector3f nf = prior_normals.at(x, y);
            const float depth = prior_depth.at(x, y);
            if (!normal_valid(nf) || !depth_valid(depth))
                continue;
            const Eigen::Vector3d n = nf.cast<double>();

            const Eigen::Vector3d ray =
                intrinsics.unproject({static_cast<double>(x), static_cast<double>(y)});
            const double denom0 = planes.normal.dot(ray);
            if (std::abs(denom0) < 1e-12 || -1.0 / denom0 <= 0.0)
                continue;
            // Anchor on the plane nearest the prior depth estimate.
            const double delta_anchor = static_cast<double>(depth) * (-denom0);
            const int i0 = planes.nearest_index(delta_anchor);
            const Eigen::Vector3d anchor = -planes.distances[i0] / denom0 * ray;

            std::array<std::int16_t, 4>& shifts = out.at(x, y);
            for (int cidx = 0; cidx < 4; ++cidx) {
                // Predecessor pixel along the canonical step.
                const double qx = x - kCanonicalDirs[cidx][0];
                const double qy = y - kCanonicalDirs[cidx][1];
                const Eigen::Vector3d ray_q = intrinsics.unproject({qx, qy});
                const double denom_t = n.dot(ray_q);
                if (std::abs(denom_t) < 1e-12)
                    continue;
                const double t = n.dot(anchor) / denom_t;
                if (t <= 0.0)
                    continue;
                const double delta_q = -planes.normal.dot(t * ray_q);
                if (delta_q <= 0.0)
                    continue;
                const double df = planes.fractional_index(delta_q) - i0;
                const long v = std::lround(std::clamp(df, -32000.0, 32000.0));
                shifts[cidx] = static_cast<std::int16_t>(v);
            }
        }
    });
    return out;
}

AggregatedVolume aggregate_single_path(const CostVolume& volume, const ImageU8& image,
                                       const SgmConfig& config, const Intrinsics& intrinsics,
                                       int dir_x, int dir_y, const NormalMap* prior_normals,
                                       const DepthMap* prior_depth) {
    check_aggregate_inputs(volume, image, config, prior_normals, prior_depth);
    NormalOffsets offsets;
    const bool use_offsets = config.variant == SgmVariant::SurfaceNormal;
    if (use_offsets)
        offsets = compute_normal_offsets(*prior_normals, *prior_depth, volume.planes,
                                         intrinsics);
    AggregatedVolume agg = make_accumulator(volume);
    add_path(volume, image, config, intrinsics, use_offsets ? &offsets : nullptr, dir_x,
             dir_y, agg);
    return agg;
}

AggregatedVolume aggregate(const CostVolume& volume, const ImageU8& image,
                           const SgmConfig& config, const Intrinsics& intrinsics,
                           const NormalMap* prior_normals, const DepthMap* prior_depth) {
    check_aggregate_inputs(volume, image, config, prior_normals, prior_depth);
    NormalOffsets offsets;
    const bool use_offsets = config.variant == SgmVariant::SurfaceNormal;
    if (use_offsets)
        offsets = compute_normal_offsets(*prior_normals, *prior_depth, volume.planes,
                                         intrinsics);
    AggregatedVolume agg = make_accumulator(volume);
    for (const auto& [dx, dy] : path_dirs(config.paths))
        add_path(volume, image, config, intrinsics, use_offsets ? &offsets : nullptr, dx, dy,
                 agg);
    return agg;
}

PlaneIndexMap wta(const AggregatedVolume& volume) {
    PlaneIndexMap map(volume.width, volume.height, -1);
    parallel_for(0, volume.height, [&](int y) {
        for (int x = 0; x < volume.width; ++x) {
            const std::size_t p = volume.pixel(x, y);
            if (volume.count[p] == 0)
                continue;
            const std::uint32_t* v = volume.values.data() + volume.offset[p];
            std::int32_t best = 0;
            for (std::int32_t i = 1; i < volume.count[p]; ++i)
                if (v[i] < v[best])
                    best = i;
            map.at(x, y) = volume.first[p] + best;
        }
    });
    return map;
}

double parabola_refine(double d_prev, double d_win, double d_next, double c_prev,
                       double c_win, double c_next) {
    if (!(d_prev < d_win && d_win < d_next))
        throw InvalidInputError("parabola refine: depths must be strictly increasing");
    const double num = (d_win * d_win - d_next * d_next) * c_prev +
                       (d_next * d_next - d_prev * d_prev) * c_win +
                       (d_prev * d_prev - d_win * d_win) * c_next;
    const double den = (d_win - d_next) * c_prev + (d_next - d_prev) * c_win +
                       (d_prev - d_win) * c_next;
    if (std::abs(den) < 1e-12 * std::max({std::abs(c_prev), std::abs(c_win), std::abs(c_next), 1.0}))
        return d_win;
    return std::clamp(0.5 * num / den, d_prev, d_next);
}

}  // namespace fassmvs
