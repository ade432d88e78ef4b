#include "lcm/tensor_io.hpp"

#include <bit>
#include <cstring>

#include "lcm/errors.hpp"

namespace lcm::tensor {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode(const Tensor& t) {
  const std::size_t n = static_cast<std::size_t>(t.height) * t.width * t.channels;
  if (t.values.size() != n) fail(ErrorCode::DimensionMismatch, "tensor value count does not match header");
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * n);
  out.insert(out.end(), t.magic.begin(), t.magic.end());
  put_u32(out, t.height);
  put_u32(out, t.width);
  put_u32(out, t.channels);
  for (float f : t.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode(std::span<const std::uint8_t> bytes, std::string_view expected_magic) {
  if (bytes.size() < 16) fail(ErrorCode::MalformedArchive, "tensor shorter than its 16-byte header");
  Tensor t;
  std::memcpy(t.magic.data(), bytes.data(), 4);
  if (std::string_view(t.magic.data(), 4) != expected_magic)
    fail(ErrorCode::MalformedArchive, "expected tensor magic " + std::string(expected_magic));
  t.height = get_u32(bytes.data() + 4);
  t.width = get_u32(bytes.data() + 8);
  t.channels = get_u32(bytes.data() + 12);
  const std::size_t n = static_cast<std::size_t>(t.height) * t.width * t.channels;
  if (bytes.size() != 16 + 4 * n) fail(ErrorCode::MalformedArchive, "tensor payload size does not match header");
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.values[i] = std::bit_cast<float>(get_u32(bytes.data() + 16 + 4 * i));
  return t;
}

}  // namespace lcm::tensor
