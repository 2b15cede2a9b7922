#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fassmvs/colorize.hpp"
#include "fassmvs/evaluation.hpp"
#include "fassmvs/map_io.hpp"
#include "fassmvs/pipeline.hpp"
#include "fassmvs/postfilter.hpp"
#include "fassmvs/render.hpp"

namespace fs = std::filesystem;
using namespace fassmvs;

namespace {

DepthBounds parse_depth_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("--depth-range expects MIN:MAX");
    try {
        const double lo = std::stod(text.substr(0, colon));
        const double hi = std::stod(text.substr(colon + 1));
        return DepthBounds(lo, hi);
    } catch (const InvalidInputError&) {
        throw ConfigError("--depth-range needs 0 < MIN < MAX");
    } catch (const std::exception&) {
        throw ConfigError("--depth-range expects MIN:MAX with numeric bounds");
    }
}

Eigen::Vector3d parse_normal(const std::string& text) {
    double x, y, z;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3)
        throw ConfigError("--plane-normal expects X,Y,Z");
    Eigen::Vector3d n(x, y, z);
    if (n.norm() < 1e-12)
        throw ConfigError("--plane-normal must be non-zero");
    return n.normalized();
}

CostFunctionSpec parse_matcher(const std::string& name) {
    if (name == "census5x5")
        return {CostKind::CensusHamming, 5, 5};
    if (name == "census9x7")
        return {CostKind::CensusHamming, 9, 7};
    if (name == "ncc5x5")
        return {CostKind::NccTruncated, 5, 5};
    if (name == "ncc9x9")
        return {CostKind::NccTruncated, 9, 9};
    throw ConfigError("--matcher must be census5x5, census9x7, ncc5x5 or ncc9x9");
}

SgmVariant parse_variant(const std::string& name) {
    if (name == "pi")
        return SgmVariant::Plane;
    if (name == "pi-sn")
        return SgmVariant::SurfaceNormal;
    if (name == "pi-pg")
        return SgmVariant::PathGradient;
    throw ConfigError("--sgm must be pi, pi-sn or pi-pg");
}

std::string frame_name(const char* prefix, int frame, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, frame, ext);
    return buf;
}

struct EstimateArgs {
    std::string poses, out;
    int bundle_size = 5;
    int pyramid_levels = 3;
    std::string matcher = "ncc5x5";
    std::string sgm = "pi";
    int paths = 8;
    double p1 = 100.0;
    std::string p2 = "adaptive";
    std::string depth_range;
    std::string plane_normal = "0,0,-1";
    std::string filter = "none";
    int stride = 1;
    bool viz = false;
};

int run_estimate(const EstimateArgs& args) {
    if (args.bundle_size < 3 || args.bundle_size % 2 == 0)
        throw ConfigError("--bundle-size must be odd and at least 3");
    if (args.stride < 1)
        throw ConfigError("--stride must be at least 1");
    if (args.filter != "none" && args.filter != "dog" && args.filter != "geom" &&
        args.filter != "both")
        throw ConfigError("--filter must be none, dog, geom or both");

    PipelineConfig config(parse_depth_range(args.depth_range));
    config.bundle_size = args.bundle_size;
    config.pyramid_levels = args.pyramid_levels;
    config.sweep_normal = parse_normal(args.plane_normal);
    config.cost = parse_matcher(args.matcher);
    config.sgm.variant = parse_variant(args.sgm);
    config.sgm.paths = args.paths;
    config.sgm.phi1 = args.p1;
    if (args.p2 == "adaptive") {
        config.sgm.phi2_adaptive = true;
    } else {
        config.sgm.phi2_adaptive = false;
        try {
            config.sgm.phi2_fixed = std::stod(args.p2);
        } catch (const std::exception&) {
            throw ConfigError("--p2 must be 'adaptive' or a number");
        }
    }
    config.validate();

    const auto entries = read_pose_file(args.poses);
    const fs::path base = fs::path(args.poses).parent_path();
    std::vector<CalibratedView> frames;
    for (const auto& e : entries) {
        CalibratedView v;
        const fs::path img = fs::path(e.image).is_absolute() ? fs::path(e.image)
                                                             : base / e.image;
        v.image = read_image(img.string());
        v.intrinsics = {e.fx, e.fy, e.cx, e.cy, v.image.width(), v.image.height()};
        v.pose = e.pose;
        v.validate();
        frames.push_back(std::move(v));
    }
    if (static_cast<int>(frames.size()) < args.bundle_size)
        throw InvalidInputError("sequence shorter than one bundle");

    fs::create_directories(args.out);

    const int half = args.bundle_size / 2;
    struct FrameResult {
        int frame;  // reference frame index in the sequence
        BundleResult maps;
    };
    std::vector<FrameResult> results;
    for (int ref = half; ref + half < static_cast<int>(frames.size()); ref += args.stride) {
        std::vector<CalibratedView> bundle(frames.begin() + (ref - half),
                                           frames.begin() + (ref + half + 1));
        results.push_back({ref, estimate_bundle(bundle, config)});
    }

    const bool use_dog = args.filter == "dog" || args.filter == "both";
    const bool use_geom = args.filter == "geom" || args.filter == "both";
    if (use_dog) {
        for (auto& r : results) {
            const TextureMask mask = dog_mask(frames[r.frame].image);
            apply_mask(r.maps.depth, r.maps.normals, r.maps.confidence, mask);
        }
    }
    if (use_geom) {
        const int m = static_cast<int>(results.size());
        const int window_size = std::min(5, m);
        // All masks are computed before any map is modified, so results do
        // not depend on the filtering order.
        std::vector<TextureMask> masks(m);
        for (int i = 0; i < m; ++i) {
            const int start = std::clamp(i - window_size / 2, 0, m - window_size);
            std::vector<ConsistencyView> window;
            for (int k = start; k < start + window_size; ++k)
                window.push_back({results[k].maps.depth, frames[results[k].frame].intrinsics,
                                  frames[results[k].frame].pose});
            masks[i] = geometric_consistency_mask(window, i - start);
        }
        for (int i = 0; i < m; ++i)
            apply_mask(results[i].maps.depth, results[i].maps.normals,
                       results[i].maps.confidence, masks[i]);
    }

    std::ofstream report(fs::path(args.out) / "report.txt");
    report << "bundle_size=" << args.bundle_size << " pyramid_levels=" << args.pyramid_levels
           << " matcher=" << args.matcher << " sgm=" << args.sgm << " paths=" << args.paths
           << " filter=" << args.filter << "\n";
    for (const auto& r : results) {
        const fs::path out(args.out);
        write_pfm((out / frame_name("depth", r.frame, "pfm")).string(), r.maps.depth);
        write_pfm((out / frame_name("normal", r.frame, "pfm")).string(), r.maps.normals);
        write_pfm((out / frame_name("conf", r.frame, "pfm")).string(), r.maps.confidence);
        if (args.viz) {
            const DepthBounds& b = config.depth_bounds;
            write_png((out / frame_name("depth", r.frame, "png")).string(),
                      colorize_depth(r.maps.depth, b.d_min, b.d_max));
            write_png((out / frame_name("normal", r.frame, "png")).string(),
                      colorize_normals(r.maps.normals));
            write_png((out / frame_name("conf", r.frame, "png")).string(),
                      colorize_confidence(r.maps.confidence));
        }
        std::size_t valid = 0;
        for (int y = 0; y < r.maps.depth.height(); ++y)
            for (int x = 0; x < r.maps.depth.width(); ++x)
                valid += depth_valid(r.maps.depth.at(x, y));
        report << "frame=" << r.frame << " valid_pixels=" << valid << "\n";
    }
    return 0;
}

struct EvalArgs {
    std::string est, gt, conf;
    std::string thetas = "1.25,1.1,1.05,1.01";
    bool json = false;
};

int run_eval(const EvalArgs& args) {
    const DepthMap est = read_pfm_scalar(args.est);
    const DepthMap gt = read_pfm_scalar(args.gt);
    std::vector<double> thetas;
    std::stringstream ss(args.thetas);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            thetas.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("--theta expects a comma-separated number list");
        }
        if (thetas.back() <= 1.0)
            throw ConfigError("--theta values must be greater than 1");
    }

    const MetricReport report = evaluate(est, gt, thetas);
    std::optional<RocCurve> roc;
    if (!args.conf.empty())
        roc = roc_curve(est, gt, read_pfm_scalar(args.conf));
    if (args.json)
        write_report_json(std::cout, report, roc ? &*roc : nullptr);
    else
        write_report_kv(std::cout, report, roc ? &*roc : nullptr);
    return 0;
}

struct RenderArgs {
    std::string out;
    int views = 5;
    int width = 320, height = 240;
    double focal = 320.0;
    double depth = 10.0;
    double tilt = 0.0;
    double baseline = 0.5;
    double scale = 0.5;
    std::string texture = "noise";
    std::uint64_t seed = 1;
};

int run_render(const RenderArgs& args) {
    if (args.views < 1)
        throw ConfigError("--views must be at least 1");
    SyntheticScene scene =
        args.tilt == 0.0
            ? fronto_scene(args.width, args.height, args.focal, args.depth, args.views,
                           args.baseline, args.seed)
            : slanted_scene(args.width, args.height, args.focal, args.depth, args.tilt,
                            args.views, args.baseline, args.seed);
    scene.texture_scale = args.scale;
    if (args.texture == "checker")
        scene.texture = TextureKind::Checkerboard;
    else if (args.texture != "noise")
        throw ConfigError("--texture must be noise or checker");

    const auto rendered = render_scene(scene);
    fs::create_directories(args.out);
    const fs::path out(args.out);
    std::vector<PoseFileEntry> entries;
    for (int i = 0; i < static_cast<int>(rendered.size()); ++i) {
        const std::string img = frame_name("view", i, "pgm");
        write_pgm((out / img).string(), rendered[i].view.image);
        write_pfm((out / frame_name("gt_depth", i, "pfm")).string(), rendered[i].gt_depth);
        write_pfm((out / frame_name("gt_normal", i, "pfm")).string(),
                  rendered[i].gt_normals);
        entries.push_back({img, scene.intrinsics.fx, scene.intrinsics.fy,
                           scene.intrinsics.cx, scene.intrinsics.cy,
                           rendered[i].view.pose});
    }
    write_pose_file((out / "poses.txt").string(), entries);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plane-sweep multi-view stereo with surface-aware semi-global matching"};
    app.require_subcommand(1);

    EstimateArgs est;
    CLI::App* estimate = app.add_subcommand("estimate", "Estimate depth/normal/confidence maps");
    estimate->add_option("--poses", est.poses, "Pose list file")->required();
    estimate->add_option("--out", est.out, "Output directory")->required();
    estimate->add_option("--bundle-size", est.bundle_size, "Views per bundle (odd, >= 3)");
    estimate->add_option("--pyramid-levels", est.pyramid_levels, "Pyramid height");
    estimate->add_option("--matcher", est.matcher, "census5x5|census9x7|ncc5x5|ncc9x9");
    estimate->add_option("--sgm", est.sgm, "pi|pi-sn|pi-pg");
    estimate->add_option("--paths", est.paths, "Aggregation paths (8 or 4)");
    estimate->add_option("--p1", est.p1, "First smoothness penalty");
    estimate->add_option("--p2", est.p2, "'adaptive' or a fixed second penalty");
    estimate->add_option("--depth-range", est.depth_range, "MIN:MAX scene depth")->required();
    estimate->add_option("--plane-normal", est.plane_normal, "Sweep normal X,Y,Z");
    estimate->add_option("--filter", est.filter, "none|dog|geom|both");
    estimate->add_option("--stride", est.stride, "Reference-frame stride");
    estimate->add_flag("--viz", est.viz, "Also write colorized PNGs");

    EvalArgs ev;
    CLI::App* eval = app.add_subcommand("eval", "Compare an estimated map against ground truth");
    eval->add_option("--est", ev.est, "Estimated depth map (PFM)")->required();
    eval->add_option("--gt", ev.gt, "Ground-truth depth map (PFM)")->required();
    eval->add_option("--conf", ev.conf, "Confidence map (PFM); adds the ROC curve");
    eval->add_option("--theta", ev.thetas, "Comma-separated accuracy thresholds");
    eval->add_flag("--json", ev.json, "Emit JSON instead of key=value lines");

    RenderArgs rn;
    CLI::App* render = app.add_subcommand("render", "Render a synthetic scene with ground truth");
    render->add_option("--out", rn.out, "Output directory")->required();
    render->add_option("--views", rn.views, "Number of views");
    render->add_option("--width", rn.width, "Image width");
    render->add_option("--height", rn.height, "Image height");
    render->add_option("--focal", rn.focal, "Focal length in pixels");
    render->add_option("--depth", rn.depth, "Plane depth at the principal ray");
    render->add_option("--tilt", rn.tilt, "Plane tilt about the x-axis, degrees");
    render->add_option("--baseline", rn.baseline, "Camera center step along x");
    render->add_option("--texture", rn.texture, "noise|checker");
    render->add_option("--scale", rn.scale, "World units per texture cell");
    render->add_option("--seed", rn.seed, "Texture seed");

    try {
        app.parse(argc, argv);
        if (estimate->parsed())
            return run_estimate(est);
        if (eval->parsed())
            return run_eval(ev);
        if (render->parsed())
            return run_render(rn);
        return 2;
    } catch (const CLI::ParseError& e) {
        std::ignore = app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidInputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const GeometryError& e) {
        std::cerr << "geometry error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
