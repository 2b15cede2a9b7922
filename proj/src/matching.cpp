#include "fassmvs/matching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fassmvs/parallel.hpp"

namespace fassmvs {

void CostFunctionSpec::validate() const {
    const bool census_ok = kind == CostKind::CensusHamming &&
                           ((window_w == 5 && window_h == 5) || (window_w == 9 && window_h == 7));
    const bool ncc_ok = kind == CostKind::NccTruncated &&
                        ((window_w == 5 && window_h == 5) || (window_w == 9 && window_h == 9));
    if (!census_ok && !ncc_ok)
        throw ConfigError("cost function: unsupported window size");
}

SamplingRange SamplingRange::uniform(const DepthBounds& bounds, int width, int height) {
    bounds.validate();
    SamplingRange r;
    r.lo = Raster<float>(width, height, static_cast<float>(bounds.d_min));
    r.hi = Raster<float>(width, height, static_cast<float>(bounds.d_max));
    return r;
}

std::uint64_t census_bits_at(const ImageU8& image, int x, int y, int window_w, int window_h) {
    const int rx = window_w / 2, ry = window_h / 2;
    const std::uint8_t center = image.at(x, y);
    std::uint64_t bits = 0;
    for (int dy = -ry; dy <= ry; ++dy) {
        for (int dx = -rx; dx <= rx; ++dx) {
            if (dx == 0 && dy == 0)
                continue;
            bits <<= 1;
            if (image.at_clamped(x + dx, y + dy) < center)
                bits |= 1;
        }
    }
    return bits;
}

Raster<std::uint64_t> census_transform(const ImageU8& image, int window_w, int window_h) {
    if (window_w < 1 || window_h < 1 || window_w % 2 == 0 || window_h % 2 == 0)
        throw ConfigError("census transform: window dimensions must be odd");
    if (window_w * window_h - 1 > 64)
        throw ConfigError("census transform: bit string exceeds 64 bits");
    Raster<std::uint64_t> out(image.width(), image.height(), 0);
    parallel_for(0, image.height(), [&](int y) {
        for (int x = 0; x < image.width(); ++x)
            out.at(x, y) = census_bits_at(image, x, y, window_w, window_h);
    });
    return out;
}

int ncc_cost(std::span<const float> patch_ref, std::span<const float> patch_other) {
    if (patch_ref.size() != patch_other.size() || patch_ref.empty())
        throw InvalidInputError("ncc: patches must be non-empty and equal size");
    const double n = static_cast<double>(patch_ref.size());
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < patch_ref.size(); ++i) {
        const double a = patch_ref[i], b = patch_other[i];
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    const double var_a = saa - sa * sa / n;
    const double var_b = sbb - sb * sb / n;
    if (var_a <= 0.0 || var_b <= 0.0)
        return 255;  // flat patch carries no signal
    const double ncc = (sab - sa * sb / n) / std::sqrt(var_a * var_b);
    const double cost = 255.0 * std::min(1.0 - ncc, 1.0);
    return static_cast<int>(std::lround(std::clamp(cost, 0.0, 255.0)));
}

namespace {

// Induced depth at a pixel is linear in the plane distance:
// d = depth_scale * delta. Non-positive scale means the pixel's viewing ray
// never meets the sweep planes in front of the camera.
double pixel_depth_scale(const Eigen::Vector3d& normal, const Intrinsics& intr, int x, int y) {
    const double denom = normal.dot(intr.unproject({static_cast<double>(x), static_cast<double>(y)}));
    if (std::abs(denom) < 1e-12)
        return 0.0;
    const double scale = -1.0 / denom;
    return scale > 0.0 ? scale : 0.0;
}

// [first, last] global plane indices whose induced depth falls inside
// [lo, hi]; empty when first > last. Distances are strictly decreasing, so
// induced depths are too.
std::pair<int, int> plane_interval(const std::vector<double>& deltas, double scale,
                                   double lo, double hi) {
    const int n = static_cast<int>(deltas.size());
    if (scale <= 0.0 || !(lo <= hi))
        return {0, -1};
    int first = 0;
    while (first < n && scale * deltas[first] > hi)
        ++first;
    int last = n - 1;
    while (last >= first && scale * deltas[last] < lo)
        --last;
    return {first, last};
}

struct WarpSample {
    double value = 0.0;
    bool center_inside = false;
};

}  // namespace

CostVolume sweep_cost_volume(const std::vector<CalibratedView>& bundle, int ref_index,
                             const PlaneStack& planes, const SamplingRange& ranges,
                             const CostFunctionSpec& costfn) {
    costfn.validate();
    if (ref_index < 0 || ref_index >= static_cast<int>(bundle.size()))
        throw InvalidInputError("sweep: reference index out of range");
    if (ref_index < 1 || ref_index > static_cast<int>(bundle.size()) - 2)
        throw InvalidInputError("sweep: need at least one matching image on each side");
    for (const auto& v : bundle)
        v.validate();
    if (planes.count() < 1)
        throw InvalidInputError("sweep: empty plane list");
    for (int i = 1; i < planes.count(); ++i)
        if (!(planes.distances[i] < planes.distances[i - 1]))
            throw InvalidInputError("sweep: plane distances must be strictly decreasing");

    const CalibratedView& ref = bundle[ref_index];
    const int w = ref.intrinsics.width, h = ref.intrinsics.height;
    if (ranges.lo.width() != w || ranges.lo.height() != h || !ranges.lo.same_size(ranges.hi))
        throw InvalidInputError("sweep: sampling range size does not match the reference");

    // Orientation-flip guard over the whole bundle.
    std::vector<Eigen::Vector3d> centers;
    centers.reserve(bundle.size());
    for (const auto& v : bundle)
        centers.push_back(ref.pose.to_camera(v.pose.center));
    require_centers_in_front(planes.normal, planes.distances.back(), centers);

    CostVolume vol;
    vol.width = w;
    vol.height = h;
    vol.planes = planes;
    vol.per_side = std::max(ref_index, static_cast<int>(bundle.size()) - 1 - ref_index);

    // Per-pixel plane intervals, then a prefix sum for the flat layout.
    const std::size_t npx = static_cast<std::size_t>(w) * h;
    vol.first.assign(npx, 0);
    vol.count.assign(npx, 0);
    vol.offset.assign(npx, 0);
    std::size_t total = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = vol.pixel(x, y);
            const double scale = pixel_depth_scale(planes.normal, ref.intrinsics, x, y);
            const auto [first, last] =
                plane_interval(planes.distances, scale, ranges.lo.at(x, y), ranges.hi.at(x, y));
            vol.first[p] = first;
            vol.count[p] = std::max(0, last - first + 1);
            vol.offset[p] = total;
            total += vol.count[p];
        }
    }
    vol.costs.assign(total, 0);

    // Homographies per (plane, matching image).
    const int nviews = static_cast<int>(bundle.size());
    std::vector<std::vector<Eigen::Matrix3d>> homs(nviews);
    for (int k = 0; k < nviews; ++k) {
        if (k == ref_index)
            continue;
        homs[k].resize(planes.count());
        for (int i = 0; i < planes.count(); ++i)
            homs[k][i] = plane_homography(planes.plane(i), ref.intrinsics, ref.pose,
                                          bundle[k].intrinsics, bundle[k].pose);
    }

    const int rx = costfn.window_w / 2, ry = costfn.window_h / 2;
    const int nsamples = costfn.window_w * costfn.window_h;
    const bool use_census = costfn.kind == CostKind::CensusHamming;
    const int census_bits = costfn.census_bits();

    Raster<std::uint64_t> ref_census;
    if (use_census)
        ref_census = census_transform(ref.image, costfn.window_w, costfn.window_h);

    parallel_for(0, h, [&](int y) {
        std::vector<double> warped(nsamples);
        std::vector<float> ref_patch(nsamples);
        for (int x = 0; x < w; ++x) {
            const std::size_t p = vol.pixel(x, y);
            if (vol.count[p] == 0)
                continue;

            double ref_mean = 0.0, ref_var = 0.0;
            if (!use_census) {
                int s = 0;
                for (int dy = -ry; dy <= ry; ++dy)
                    for (int dx = -rx; dx <= rx; ++dx)
                        ref_patch[s++] = ref.image.at_clamped(x + dx, y + dy);
                for (int i = 0; i < nsamples; ++i)
                    ref_mean += ref_patch[i];
                ref_mean /= nsamples;
                for (int i = 0; i < nsamples; ++i)
                    ref_var += (ref_patch[i] - ref_mean) * (ref_patch[i] - ref_mean);
            }

            for (int pi = 0; pi < vol.count[p]; ++pi) {
                const int plane = vol.first[p] + pi;
                int sum_left = 0, sum_right = 0;
                for (int k = 0; k < nviews; ++k) {
                    if (k == ref_index)
                        continue;
                    const Eigen::Matrix3d& hom = homs[k][plane];
                    const ImageU8& img = bundle[k].image;

                    // Warp the window around the reference pixel.
                    const Eigen::Vector3d center =
                        hom * Eigen::Vector3d(static_cast<double>(x), static_cast<double>(y), 1.0);
                    int cost = 255;
                    bool inside = false;
                    if (center.z() > 0.0) {
                        const double cxw = center.x() / center.z();
                        const double cyw = center.y() / center.z();
                        inside = cxw >= 0.0 && cyw >= 0.0 && cxw <= img.width() - 1.0 &&
                                 cyw <= img.height() - 1.0;
                    }
                    if (inside) {
                        // Walk the window with column increments instead of
                        // re-applying the homography per sample.
                        const Eigen::Vector3d step_x = hom.col(0);
                        const Eigen::Vector3d step_y = hom.col(1);
                        int s = 0;
                        Eigen::Vector3d row_start = center - rx * step_x - ry * step_y;
                        for (int dy = -ry; dy <= ry; ++dy) {
                            Eigen::Vector3d q = row_start;
                            for (int dx = -rx; dx <= rx; ++dx) {
                                warped[s++] = q.z() > 0.0
                                                  ? bilinear(img, q.x() / q.z(), q.y() / q.z())
                                                  : 0.0;
                                q += step_x;
                            }
                            row_start += step_y;
                        }
                        if (use_census) {
                            const double wc = warped[nsamples / 2];
                            std::uint64_t bits = 0;
                            for (int i = 0; i < nsamples; ++i) {
                                if (i == nsamples / 2)
                                    continue;
                                bits <<= 1;
                                if (warped[i] < wc)
                                    bits |= 1;
                            }
                            const int ham = std::popcount(bits ^ ref_census.at(x, y));
                            cost = static_cast<int>(std::lround(255.0 * ham / census_bits));
                        } else {
                            if (ref_var <= 0.0) {
                                cost = 255;
                            } else {
                                double sb = 0, sbb = 0, sab = 0;
                                for (int i = 0; i < nsamples; ++i) {
                                    sb += warped[i];
                                    sbb += warped[i] * warped[i];
                                    sab += ref_patch[i] * warped[i];
                                }
                                const double var_b = sbb - sb * sb / nsamples;
                                if (var_b <= 0.0) {
                                    cost = 255;
                                } else {
                                    const double ncc = (sab - ref_mean * sb) /
                                                       std::sqrt(ref_var * var_b);
                                    cost = static_cast<int>(std::lround(
                                        std::clamp(255.0 * std::min(1.0 - ncc, 1.0), 0.0, 255.0)));
                                }
                            }
                        }
                    }
                    if (k < ref_index)
                        sum_left += cost;
                    else
                        sum_right += cost;
                }
                vol.costs[vol.offset[p] + pi] =
                    static_cast<std::uint16_t>(std::min(sum_left, sum_right));
            }
        }
    });
    return vol;
}

}  // namespace fassmvs
