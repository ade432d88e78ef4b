#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lcm/image.hpp"

namespace lcm::png {

using Bytes = std::vector<std::uint8_t>;

Bytes encode_rgba8(const Plane<Rgba8>& image);
Plane<Rgba8> decode_rgba8(std::span<const std::uint8_t> bytes);

Bytes encode_gray8(const Plane<std::uint8_t>& image);
Bytes encode_gray16(const Plane<std::uint16_t>& image);
Plane<std::uint16_t> decode_gray16(std::span<const std::uint8_t> bytes);
Plane<std::uint8_t> decode_gray8(std::span<const std::uint8_t> bytes);

// 8-bit palette image; indices are stored unmodified.
Bytes encode_indexed(const Plane<std::uint8_t>& indices, std::span<const std::array<std::uint8_t, 3>> palette);
Plane<std::uint8_t> decode_indexed(std::span<const std::uint8_t> bytes);

// Float image -> 8-bit with round-to-nearest and clamping.
Plane<Rgba8> quantize(const RGBAImage& image);
RGBAImage dequantize(const Plane<Rgba8>& image);

// Mask as 0/255 grayscale.
Bytes encode_mask(const Mask& mask);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lcm::png
