#pragma once

#include <filesystem>
#include <string>

#include "stripedepth/reconstruct.hpp"

namespace stripedepth::pgm {

/// Binary PGM (P5), maxval 255.
std::string encode(const reconstruct::Gray8Image& img);
reconstruct::Gray8Image decode(const std::string& bytes);

void write(const std::filesystem::path& path, const reconstruct::Gray8Image& img);
reconstruct::Gray8Image read(const std::filesystem::path& path);

}  // namespace stripedepth::pgm
