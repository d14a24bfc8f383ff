#include "stripedepth/pgm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "stripedepth/errors.hpp"

namespace stripedepth::pgm {
namespace {

// Skips whitespace and '#' comments between header tokens.
void skip_separators(const std::string& s, std::size_t& pos) {
    while (pos < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        } else if (s[pos] == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
}

std::size_t read_uint(const std::string& s, std::size_t& pos) {
    skip_separators(s, pos);
    if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) {
        throw IoError("malformed PGM header");
    }
    std::size_t v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        v = v * 10 + static_cast<std::size_t>(s[pos] - '0');
        ++pos;
    }
    return v;
}

}  // namespace

std::string encode(const reconstruct::Gray8Image& img) {
    std::ostringstream os;
    os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    std::string out = os.str();
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

reconstruct::Gray8Image decode(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw IoError("not a binary PGM (P5)");
    std::size_t pos = 2;
    reconstruct::Gray8Image img;
    img.width = read_uint(bytes, pos);
    img.height = read_uint(bytes, pos);
    const std::size_t maxval = read_uint(bytes, pos);
    if (maxval != 255) throw IoError("only 8-bit PGM (maxval 255) is supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw IoError("malformed PGM header");
    }
    ++pos;  // single whitespace before the raster
    const std::size_t n = img.width * img.height;
    if (bytes.size() - pos < n) throw IoError("truncated PGM raster");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

void write(const std::filesystem::path& path, const reconstruct::Gray8Image& img) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    const std::string bytes = encode(img);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing " + path.string());
}

reconstruct::Gray8Image read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        return decode(ss.str());
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace stripedepth::pgm
