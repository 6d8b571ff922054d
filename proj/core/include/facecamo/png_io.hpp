#pragma once

#include <filesystem>

#include "facecamo/image.hpp"

namespace facecamo {

// Reads an 8-bit PNG (gray, gray+alpha, RGB or RGBA) into an image with 1 or
// 3 channels and values in [0, 255]. Alpha is dropped.
Image read_png(const std::filesystem::path& path);

// Writes 1- or 3-channel images as 8-bit PNG; values are rounded and clamped
// to [0, 255] after multiplying by `scale`.
void write_png(const std::filesystem::path& path, const Image& img, double scale = 1.0);

}  // namespace facecamo
