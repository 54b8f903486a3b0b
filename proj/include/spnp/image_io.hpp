#pragma once

#include "spnp/image.hpp"

#include <filesystem>

namespace spnp {

/// Loads 8/16-bit PNG (gray, gray+alpha, RGB, RGBA; alpha dropped) or
/// PGM/PPM (P2, P3, P5, P6). Values are mapped linearly to [0, 1].
ImageTensor read_image(const std::filesystem::path& path);

/// Writes by extension: .png (8- or 16-bit), .pgm/.ppm (binary). Values are
/// clamped to [0, 1] and rounded.
void write_image(const ImageTensor& x, const std::filesystem::path& path, int bit_depth = 8);

}  // namespace spnp
