#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace lcm::tensor {

// 16-byte header: 4-byte magic, then u32 height, width, channels
// (little-endian), followed by height*width*channels float32 row-major with
// the channel index fastest.
struct Tensor {
  std::array<char, 4> magic{};
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> values;
};

inline constexpr std::string_view kScoreMagic = "SSTK";
inline constexpr std::string_view kDepthMagic = "DPTH";

std::vector<std::uint8_t> encode(const Tensor& t);
Tensor decode(std::span<const std::uint8_t> bytes, std::string_view expected_magic);

}  // namespace lcm::tensor
