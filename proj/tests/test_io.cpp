#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "fassmvs/colorize.hpp"
#include "fassmvs/map_io.hpp"
#include "fassmvs/render.hpp"
#include "oracles.hpp"

using namespace fassmvs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fassmvs_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("scalar float maps round trip bit-exactly") {
    TempDir dir;
    auto& gen = oracle::rng(501);
    std::uniform_real_distribution<float> u(-100.0f, 100.0f);
    DepthMap map(23, 17, 0.0f);
    for (std::size_t i = 0; i < map.size(); ++i)
        map.data()[i] = (i % 7 == 0) ? 0.0f : u(gen);  // keep some sentinels

    const std::string path = dir.file("map.pfm");
    write_pfm(path, map);
    const DepthMap back = read_pfm_scalar(path);
    REQUIRE(back.same_size(map));
    CHECK(std::memcmp(back.data(), map.data(), map.size() * sizeof(float)) == 0);
}

TEST_CASE("vector float maps round trip bit-exactly") {
    TempDir dir;
    auto& gen = oracle::rng(502);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    NormalMap map = make_normal_map(11, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 11; ++x)
            if ((x + y) % 5)
                map.at(x, y) = Eigen::Vector3f(u(gen), u(gen), u(gen));

    const std::string path = dir.file("normals.pfm");
    write_pfm(path, map);
    const NormalMap back = read_pfm_vector(path);
    REQUIRE(back.same_size(map));
    CHECK(back == map);

    CHECK_THROWS_AS(read_pfm_scalar(path), InvalidInputError);
}

TEST_CASE("big-endian float maps are byte-swapped on read") {
    TempDir dir;
    const std::string path = dir.file("be.pfm");
    const float values[2] = {1.5f, -2.25f};
    {
        std::ofstream os(path, std::ios::binary);
        os << "Pf\n2 1\n1.0\n";
        for (float v : values) {
            std::uint32_t u;
            std::memcpy(&u, &v, 4);
            u = __builtin_bswap32(u);
            os.write(reinterpret_cast<const char*>(&u), 4);
        }
    }
    const DepthMap map = read_pfm_scalar(path);
    CHECK(map.at(0, 0) == 1.5f);
    CHECK(map.at(1, 0) == -2.25f);
}

TEST_CASE("pose files reproduce the projection matrices") {
    TempDir dir;
    auto& gen = oracle::rng(503);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<PoseFileEntry> entries;
    for (int i = 0; i < 4; ++i) {
        PoseFileEntry e;
        e.image = "view_" + std::to_string(i) + ".pgm";
        e.fx = 300.0 + u(gen);
        e.fy = 310.0 + u(gen);
        e.cx = 160.0 + u(gen);
        e.cy = 120.0 + u(gen);
        e.pose.rotation = oracle::random_rotation(gen, 0.4);
        e.pose.center = Eigen::Vector3d(u(gen), u(gen), u(gen));
        entries.push_back(e);
    }
    const std::string path = dir.file("poses.txt");
    write_pose_file(path, entries);
    const auto back = read_pose_file(path);
    REQUIRE(back.size() == entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        CHECK(back[i].image == entries[i].image);
        const Intrinsics ka{entries[i].fx, entries[i].fy, entries[i].cx, entries[i].cy, 320,
                            240};
        const Intrinsics kb{back[i].fx, back[i].fy, back[i].cx, back[i].cy, 320, 240};
        const auto pa = entries[i].pose.projection(ka);
        const auto pb = back[i].pose.projection(kb);
        CHECK((pa - pb).cwiseAbs().maxCoeff() <= 1e-12 * pa.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("pose file parser rejects malformed input") {
    TempDir dir;
    {
        std::ofstream os(dir.file("bad_header.txt"));
        os << "poses v0\nimg.pgm\n";
    }
    CHECK_THROWS_AS(read_pose_file(dir.file("bad_header.txt")), InvalidInputError);
    {
        std::ofstream os(dir.file("bad_k.txt"));
        os << "fassmvs-poses v1\nimg.pgm\n";
        os << "300 5 160\n0 300 120\n0 0 1\n";  // skew is unsupported
        os << "1 0 0\n0 1 0\n0 0 1\n0 0 0\n";
    }
    CHECK_THROWS_AS(read_pose_file(dir.file("bad_k.txt")), InvalidInputError);
    CHECK_THROWS_AS(read_pose_file(dir.file("missing.txt")), InvalidInputError);
}

TEST_CASE("pose files accept comments and loose whitespace") {
    TempDir dir;
    {
        std::ofstream os(dir.file("poses.txt"));
        os << "fassmvs-poses v1\n# a comment\n img.pgm  300 0 160  # inline\n";
        os << " 0 300 120 0 0 1\n1 0 0 0 1 0 0 0 1\n0.5 -0.25 2\n";
    }
    const auto entries = read_pose_file(dir.file("poses.txt"));
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].image == "img.pgm");
    CHECK(entries[0].fx == 300.0);
    CHECK(entries[0].pose.center.z() == 2.0);
}

TEST_CASE("pgm and ppm image io") {
    TempDir dir;
    auto& gen = oracle::rng(504);
    std::uniform_int_distribution<int> u(0, 255);
    ImageU8 img(13, 7, 0);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<std::uint8_t>(u(gen));
    write_pgm(dir.file("img.pgm"), img);
    CHECK(read_image(dir.file("img.pgm")) == img);

    {
        std::ofstream os(dir.file("img.ppm"), std::ios::binary);
        os << "P6\n# comment\n2 1\n255\n";
        const std::uint8_t px[6] = {255, 0, 0, 0, 255, 0};
        os.write(reinterpret_cast<const char*>(px), 6);
    }
    const ImageU8 luma = read_image(dir.file("img.ppm"));
    CHECK(luma.at(0, 0) == 76);   // round(0.299 * 255)
    CHECK(luma.at(1, 0) == 150);  // round(0.587 * 255)
}

TEST_CASE("png files carry the signature and dimensions") {
    TempDir dir;
    RgbImage img(5, 3, {10, 20, 30});
    img.at(2, 1) = {200, 100, 50};
    write_png(dir.file("img.png"), img);
    std::ifstream is(dir.file("img.png"), std::ios::binary);
    std::uint8_t head[24];
    is.read(reinterpret_cast<char*>(head), 24);
    REQUIRE(is.good());
    const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    CHECK(std::memcmp(head, sig, 8) == 0);
    CHECK(head[19] == 5);  // width low byte
    CHECK(head[23] == 3);  // height low byte
}

TEST_CASE("renderer ground truth for simple scenes") {
    SUBCASE("fronto-parallel planes have constant depth") {
        const auto rendered = render_scene(fronto_scene(32, 24, 40.0, 7.5, 3, 0.4, 3));
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 32; ++x)
                CHECK(rendered[1].gt_depth.at(x, y) == doctest::Approx(7.5).epsilon(1e-6));
    }
    SUBCASE("slanted planes carry the analytic normal everywhere") {
        const auto rendered = render_scene(slanted_scene(32, 24, 40.0, 6.0, 30.0, 3, 0.4, 3));
        const double rad = 30.0 * M_PI / 180.0;
        const Eigen::Vector3f expected(0.0f, static_cast<float>(-std::sin(rad)),
                                       static_cast<float>(-std::cos(rad)));
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 32; ++x) {
                REQUIRE(normal_valid(rendered[1].gt_normals.at(x, y)));
                CHECK((rendered[1].gt_normals.at(x, y) - expected).norm() < 1e-6f);
            }
    }
}

TEST_CASE("rendered views re-project onto each other through the plane homography") {
    SyntheticScene scene = fronto_scene(96, 72, 120.0, 6.0, 2, 0.5, 11);
    scene.texture_scale = 2.0;  // smooth texture, interpolation error only
    const auto rendered = render_scene(scene);
    const CalibratedView& ref = rendered[0].view;
    const CalibratedView& other = rendered[1].view;

    // The scene plane in the reference camera frame.
    const Eigen::Vector3d n_cam = ref.pose.rotation * Eigen::Vector3d(0, 0, -1);
    const Eigen::Vector3d point_cam = ref.pose.to_camera(Eigen::Vector3d(0, 0, 6.0));
    const SweepPlane plane{n_cam, -n_cam.dot(point_cam)};
    const Eigen::Matrix3d h =
        plane_homography(plane, ref.intrinsics, ref.pose, other.intrinsics, other.pose);

    double worst = 0.0;
    for (int y = 2; y < 70; ++y)
        for (int x = 2; x < 94; ++x) {
            const Eigen::Vector2d q = apply_homography(h, {(double)x, (double)y});
            if (q.x() < 1 || q.y() < 1 || q.x() > 94 || q.y() > 70)
                continue;
            const double warped = bilinear(other.image, q.x(), q.y());
            worst = std::max(worst, std::abs(warped - ref.image.at(x, y)));
        }
    CHECK(worst <= 1.0);
}

TEST_CASE("value noise is deterministic and in range") {
    CHECK(value_noise(1.25, -3.5, 42) == value_noise(1.25, -3.5, 42));
    CHECK(value_noise(1.25, -3.5, 42) != value_noise(1.25, -3.5, 43));
    for (double u = -5.0; u < 5.0; u += 0.37)
        for (double v = -5.0; v < 5.0; v += 0.41) {
            const double n = value_noise(u, v, 7);
            CHECK(n >= 0.0);
            CHECK(n < 1.0);
        }
}

TEST_CASE("colorize encodings") {
    SUBCASE("invalid pixels are black") {
        DepthMap d(2, 1, 0.0f);
        d.at(1, 0) = 5.0f;
        const RgbImage img = colorize_depth(d, 0.0, 10.0);
        CHECK(img.at(0, 0) == std::array<std::uint8_t, 3>{0, 0, 0});
        CHECK(img.at(1, 0) != std::array<std::uint8_t, 3>{0, 0, 0});
    }
    SUBCASE("the fronto-parallel normal encodes as (128, 128, 0)") {
        NormalMap n = make_normal_map(1, 1);
        n.at(0, 0) = Eigen::Vector3f(0, 0, -1);
        CHECK(colorize_normals(n).at(0, 0) == std::array<std::uint8_t, 3>{128, 128, 0});
    }
    SUBCASE("the depth colormap starts at its dark endpoint") {
        DepthMap d(2, 1, 0.0f);
        d.at(0, 0) = 2.0f;
        d.at(1, 0) = 10.0f;
        const RgbImage img = colorize_depth(d, 2.0, 10.0);
        // viridis endpoints: dark violet to bright yellow
        CHECK(img.at(0, 0)[2] > img.at(0, 0)[1]);
        CHECK(img.at(1, 0)[0] > 200);
        CHECK(img.at(1, 0)[1] > 200);
    }
    SUBCASE("confidence is grayscale") {
        ConfidenceMap c(1, 1, 0.5f);
        const auto px = colorize_confidence(c).at(0, 0);
        CHECK(px[0] == px[1]);
        CHECK(px[1] == px[2]);
        CHECK(px[0] == 128);
    }
}
