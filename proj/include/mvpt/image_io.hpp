#pragma once

#include <filesystem>

#include "mvpt/silhouette.hpp"

namespace mvpt {

// Mask files are 8-bit grayscale, nonzero = foreground. Readers sniff the
// magic bytes: "P5" -> binary PGM, PNG signature -> PNG (grayscale; color
// and palette images are converted). Throws MaskDecodeError naming the path
// on any failure.
BinaryMask read_mask(const std::filesystem::path& path);

// PGM P5, foreground written as 255.
void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);

// 8-bit grayscale PNG, foreground written as 255.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace mvpt
