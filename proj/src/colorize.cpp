#include "fassmvs/colorize.hpp"

#include <algorithm>
#include <cmath>

namespace fassmvs {

namespace {

// Viridis anchors, sampled uniformly.
constexpr double kViridis[9][3] = {
    {0.267004, 0.004874, 0.329415}, {0.282623, 0.140926, 0.457517},
    {0.253935, 0.265254, 0.529983}, {0.206756, 0.371758, 0.553117},
    {0.163625, 0.471133, 0.558148}, {0.127568, 0.566949, 0.550556},
    {0.134692, 0.658636, 0.517649}, {0.477504, 0.821444, 0.318195},
    {0.993248, 0.906157, 0.143936}};

std::array<std::uint8_t, 3> viridis(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * 8.0;
    const int i = std::min(static_cast<int>(pos), 7);
    const double a = pos - i;
    std::array<std::uint8_t, 3> rgb;
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<std::uint8_t>(
            std::lround(255.0 * ((1.0 - a) * kViridis[i][c] + a * kViridis[i + 1][c])));
    return rgb;
}

}  // namespace

RgbImage colorize_depth(const DepthMap& map, double lo, double hi) {
    RgbImage out(map.width(), map.height(), {0, 0, 0});
    const double span = hi > lo ? hi - lo : 1.0;
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const float d = map.at(x, y);
            if (depth_valid(d))
                out.at(x, y) = viridis((d - lo) / span);
        }
    return out;
}

RgbImage colorize_normals(const NormalMap& map) {
    RgbImage out(map.width(), map.height(), {0, 0, 0});
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const Eigen::Vector3f n = map.at(x, y);
            if (!normal_valid(n))
                continue;
            for (int c = 0; c < 3; ++c)
                out.at(x, y)[c] = static_cast<std::uint8_t>(
                    std::lround(255.0 * std::clamp((n[c] + 1.0f) / 2.0f, 0.0f, 1.0f)));
        }
    return out;
}

RgbImage colorize_confidence(const ConfidenceMap& map) {
    RgbImage out(map.width(), map.height(), {0, 0, 0});
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const float c = map.at(x, y);
            if (c > 0.0f) {
                const auto v = static_cast<std::uint8_t>(
                    std::lround(255.0 * std::clamp(c, 0.0f, 1.0f)));
                out.at(x, y) = {v, v, v};
            }
        }
    return out;
}

}  // namespace fassmvs
