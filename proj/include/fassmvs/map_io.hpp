#pragma once

#include <string>
#include <vector>

#include "fassmvs/geometry.hpp"
#include "fassmvs/raster.hpp"

namespace fassmvs {

// Float map files use the PFM convention: header "Pf" (1 channel) or "PF"
// (3 channels), then "width height", then the scale line whose sign encodes
// endianness (negative = little-endian, which is what we write), then raw
// 32-bit float rows bottom-to-top. Round trips are bit-exact, including the
// 0.0 invalid sentinel.
void write_pfm(const std::string& path, const DepthMap& map);
void write_pfm(const std::string& path, const NormalMap& map);
DepthMap read_pfm_scalar(const std::string& path);
NormalMap read_pfm_vector(const std::string& path);

// 8-bit images: PGM (P5) natively; PPM (P6) inputs are converted to
// grayscale with ITU-R 601 luma.
ImageU8 read_image(const std::string& path);
void write_pgm(const std::string& path, const ImageU8& image);

// 8-bit RGB PNG.
void write_png(const std::string& path, const RgbImage& image);

// Pose list file, plain text. First line: "fassmvs-poses v1". Then per
// view: the image path (one token, no spaces), 9 intrinsic-matrix values
// row-major, 9 rotation values row-major (reference-to-camera), 3 optical-
// center values. '#' starts a comment. Values are written with 17
// significant digits, so round trips reproduce the projections exactly.
struct PoseFileEntry {
    std::string image;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    Pose pose;
};

std::vector<PoseFileEntry> read_pose_file(const std::string& path);
void write_pose_file(const std::string& path, const std::vector<PoseFileEntry>& entries);

}  // namespace fassmvs
