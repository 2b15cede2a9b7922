#include "fassmvs/map_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

namespace fassmvs {

namespace {

static_assert(std::endian::native == std::endian::little,
              "float map I/O assumes a little-endian host");

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw InvalidInputError("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw InvalidInputError("cannot open: " + path);
    return is;
}

void write_pfm_data(std::ofstream& os, const char* magic, int w, int h,
                    const std::vector<float>& row_major, int channels) {
    os << magic << "\n" << w << " " << h << "\n" << "-1.0" << "\n";
    // Bottom-to-top row order.
    for (int y = h - 1; y >= 0; --y)
        os.write(reinterpret_cast<const char*>(row_major.data() +
                                               static_cast<std::size_t>(y) * w * channels),
                 static_cast<std::streamsize>(sizeof(float)) * w * channels);
    if (!os)
        throw InvalidInputError("short write on float map file");
}

struct PfmHeader {
    int width = 0, height = 0, channels = 0;
    bool little_endian = true;
};

PfmHeader read_pfm_header(std::ifstream& is, const std::string& path) {
    std::string magic;
    is >> magic;
    PfmHeader h;
    if (magic == "Pf")
        h.channels = 1;
    else if (magic == "PF")
        h.channels = 3;
    else
        throw InvalidInputError("not a float map file: " + path);
    double scale = 0.0;
    is >> h.width >> h.height >> scale;
    if (!is || h.width < 1 || h.height < 1)
        throw InvalidInputError("bad float map header: " + path);
    h.little_endian = scale < 0.0;
    is.get();  // the single whitespace after the scale line
    return h;
}

std::vector<float> read_pfm_data(std::ifstream& is, const PfmHeader& h,
                                 const std::string& path) {
    std::vector<float> data(static_cast<std::size_t>(h.width) * h.height * h.channels);
    std::vector<float> row(static_cast<std::size_t>(h.width) * h.channels);
    for (int y = h.height - 1; y >= 0; --y) {
        is.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(float)) * row.size());
        if (!is)
            throw InvalidInputError("truncated float map file: " + path);
        if (!h.little_endian) {
            for (auto& f : row) {
                std::uint32_t u;
                std::memcpy(&u, &f, 4);
                u = __builtin_bswap32(u);
                std::memcpy(&f, &u, 4);
            }
        }
        std::memcpy(data.data() + static_cast<std::size_t>(y) * row.size(), row.data(),
                    row.size() * sizeof(float));
    }
    return data;
}

}  // namespace

void write_pfm(const std::string& path, const DepthMap& map) {
    std::ofstream os = open_out(path);
    std::vector<float> data(map.data(), map.data() + map.size());
    write_pfm_data(os, "Pf", map.width(), map.height(), data, 1);
}

void write_pfm(const std::string& path, const NormalMap& map) {
    std::ofstream os = open_out(path);
    std::vector<float> data;
    data.reserve(map.size() * 3);
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const Eigen::Vector3f& n = map.at(x, y);
            data.push_back(n.x());
            data.push_back(n.y());
            data.push_back(n.z());
        }
    write_pfm_data(os, "PF", map.width(), map.height(), data, 3);
}

DepthMap read_pfm_scalar(const std::string& path) {
    std::ifstream is = open_in(path);
    const PfmHeader h = read_pfm_header(is, path);
    if (h.channels != 1)
        throw InvalidInputError("expected a single-channel float map: " + path);
    const std::vector<float> data = read_pfm_data(is, h, path);
    DepthMap map(h.width, h.height, 0.0f);
    std::memcpy(map.data(), data.data(), data.size() * sizeof(float));
    return map;
}

NormalMap read_pfm_vector(const std::string& path) {
    std::ifstream is = open_in(path);
    const PfmHeader h = read_pfm_header(is, path);
    if (h.channels != 3)
        throw InvalidInputError("expected a three-channel float map: " + path);
    const std::vector<float> data = read_pfm_data(is, h, path);
    NormalMap map = make_normal_map(h.width, h.height);
    std::size_t i = 0;
    for (int y = 0; y < h.height; ++y)
        for (int x = 0; x < h.width; ++x) {
            map.at(x, y) = Eigen::Vector3f(data[i], data[i + 1], data[i + 2]);
            i += 3;
        }
    return map;
}

namespace {

int read_pnm_int(std::ifstream& is) {
    // Skips whitespace and '#' comments.
    int c = is.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF)
                c = is.get();
        c = is.get();
    }
    int value = -1;
    while (std::isdigit(c)) {
        value = (value < 0 ? 0 : value * 10) + (c - '0');
        c = is.get();
    }
    return value;
}

}  // namespace

ImageU8 read_image(const std::string& path) {
    std::ifstream is = open_in(path);
    char m0 = 0, m1 = 0;
    is.get(m0).get(m1);
    if (m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw InvalidInputError("unsupported image format (need PGM P5 or PPM P6): " + path);
    const int w = read_pnm_int(is);
    const int h = read_pnm_int(is);
    const int maxval = read_pnm_int(is);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw InvalidInputError("bad image header: " + path);
    const int channels = m1 == '5' ? 1 : 3;
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * channels);
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!is)
        throw InvalidInputError("truncated image file: " + path);
    ImageU8 img(w, h, 0);
    if (channels == 1) {
        std::memcpy(img.data(), data.data(), data.size());
    } else {
        for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
            const double y601 =
                0.299 * data[3 * i] + 0.587 * data[3 * i + 1] + 0.114 * data[3 * i + 2];
            img.data()[i] = static_cast<std::uint8_t>(std::lround(y601));
        }
    }
    return img;
}

void write_pgm(const std::string& path, const ImageU8& image) {
    std::ofstream os = open_out(path);
    os << "P5\n" << image.width() << " " << image.height() << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.data()),
             static_cast<std::streamsize>(image.size()));
    if (!os)
        throw InvalidInputError("short write: " + path);
}

namespace {

void png_chunk(std::ofstream& os, const char type[4], const std::vector<std::uint8_t>& data) {
    const auto be32 = [](std::uint32_t v) {
        return std::array<std::uint8_t, 4>{static_cast<std::uint8_t>(v >> 24),
                                           static_cast<std::uint8_t>(v >> 16),
                                           static_cast<std::uint8_t>(v >> 8),
                                           static_cast<std::uint8_t>(v)};
    };
    const auto len = be32(static_cast<std::uint32_t>(data.size()));
    os.write(reinterpret_cast<const char*>(len.data()), 4);
    os.write(type, 4);
    if (!data.empty())
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size()));
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty())
        crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    const auto crc_be = be32(static_cast<std::uint32_t>(crc));
    os.write(reinterpret_cast<const char*>(crc_be.data()), 4);
}

}  // namespace

void write_png(const std::string& path, const RgbImage& image) {
    std::ofstream os = open_out(path);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr(13, 0);
    const std::uint32_t w = image.width(), h = image.height();
    ihdr[0] = w >> 24; ihdr[1] = w >> 16; ihdr[2] = w >> 8; ihdr[3] = w;
    ihdr[4] = h >> 24; ihdr[5] = h >> 16; ihdr[6] = h >> 8; ihdr[7] = h;
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // RGB
    png_chunk(os, "IHDR", ihdr);

    // Filter byte 0 per scanline.
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(h) * (1 + 3 * w));
    for (int y = 0; y < image.height(); ++y) {
        raw.push_back(0);
        for (int x = 0; x < image.width(); ++x) {
            const auto& px = image.at(x, y);
            raw.push_back(px[0]);
            raw.push_back(px[1]);
            raw.push_back(px[2]);
        }
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) !=
        Z_OK)
        throw InvalidInputError("png compression failed: " + path);
    compressed.resize(bound);
    png_chunk(os, "IDAT", compressed);
    png_chunk(os, "IEND", {});
    if (!os)
        throw InvalidInputError("short write: " + path);
}

std::vector<PoseFileEntry> read_pose_file(const std::string& path) {
    std::ifstream is = open_in(path);
    std::string header;
    std::getline(is, header);
    while (!header.empty() && (header.back() == '\r' || header.back() == ' '))
        header.pop_back();
    if (header != "fassmvs-poses v1")
        throw InvalidInputError("bad pose file header (expected 'fassmvs-poses v1'): " + path);

    // Tokenize the rest, stripping '#' comments.
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(is, line)) {
        if (const auto pos = line.find('#'); pos != std::string::npos)
            line.erase(pos);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok)
            tokens.push_back(tok);
    }
    if (tokens.size() % 22 != 0)
        throw InvalidInputError("pose file: each view needs a path plus 21 numbers: " + path);

    std::vector<PoseFileEntry> entries;
    for (std::size_t i = 0; i < tokens.size(); i += 22) {
        PoseFileEntry e;
        e.image = tokens[i];
        double v[21];
        for (int k = 0; k < 21; ++k) {
            try {
                v[k] = std::stod(tokens[i + 1 + k]);
            } catch (const std::exception&) {
                throw InvalidInputError("pose file: bad number '" + tokens[i + 1 + k] +
                                        "': " + path);
            }
        }
        if (v[1] != 0.0 || v[3] != 0.0 || v[6] != 0.0 || v[7] != 0.0 || v[8] != 1.0)
            throw InvalidInputError("pose file: intrinsic matrix must be [fx 0 cx; 0 fy cy; 0 0 1]: " +
                                    path);
        e.fx = v[0];
        e.cx = v[2];
        e.fy = v[4];
        e.cy = v[5];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                e.pose.rotation(r, c) = v[9 + 3 * r + c];
        e.pose.center = Eigen::Vector3d(v[18], v[19], v[20]);
        e.pose.validate();
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_pose_file(const std::string& path, const std::vector<PoseFileEntry>& entries) {
    std::ofstream os = open_out(path);
    os << "fassmvs-poses v1\n";
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& e : entries) {
        os << "# view\n" << e.image << "\n";
        os << num(e.fx) << " 0 " << num(e.cx) << "\n";
        os << "0 " << num(e.fy) << " " << num(e.cy) << "\n";
        os << "0 0 1\n";
        for (int r = 0; r < 3; ++r)
            os << num(e.pose.rotation(r, 0)) << " " << num(e.pose.rotation(r, 1)) << " "
               << num(e.pose.rotation(r, 2)) << "\n";
        os << num(e.pose.center.x()) << " " << num(e.pose.center.y()) << " "
           << num(e.pose.center.z()) << "\n";
    }
    if (!os)
        throw InvalidInputError("short write: " + path);
}

}  // namespace fassmvs
