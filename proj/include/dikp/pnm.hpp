#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dikp/image.hpp"

namespace dikp {

/// Reads a binary 8-bit PGM (P5) or PPM (P6). Header comments are skipped.
/// Values are mapped to [0, 1] by v / 255.
Image load_image(const std::filesystem::path& path);
Image decode_pnm(std::string_view bytes);

/// Writes P5 for single-channel and P6 for three-channel images. Values are
/// clamped to [0, 1] and quantized with round(v * 255). No comments are
/// emitted, so identical images produce identical bytes.
void save_image(const Image& img, const std::filesystem::path& path);
std::string encode_pnm(const Image& img);

}  // namespace dikp
