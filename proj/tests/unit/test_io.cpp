#include <gtest/gtest.h>

#include <random>

#include "expect_error.hpp"
#include "lcm/archive.hpp"
#include "lcm/png_io.hpp"
#include "lcm/tensor_io.hpp"

using namespace lcm;

TEST(Zip, RoundTripStoredAndCompressible) {
  std::vector<zip::Entry> entries{{"a.txt", {'h', 'i'}}, {"empty", {}}, {"zeros.bin", std::vector<std::uint8_t>(5000, 0)}};
  std::mt19937 rng(1);
  std::vector<std::uint8_t> noise(3000);
  for (auto& b : noise) b = static_cast<std::uint8_t>(rng());
  entries.push_back({"dir/noise.bin", noise});

  const auto bytes = zip::write(entries);
  const auto back = zip::read(bytes);
  ASSERT_EQ(back.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    EXPECT_EQ(back[i].name, entries[i].name);
    EXPECT_EQ(back[i].data, entries[i].data);
  }
  EXPECT_EQ(zip::write(entries), bytes);
  EXPECT_LT(bytes.size(), 5000u + 3000u);
}

TEST(Zip, CorruptionIsDetected) {
  const auto bytes = zip::write({{"a.txt", std::vector<std::uint8_t>(100, 'x')}});
  EXPECT_LCM_ERROR(zip::read(std::span(bytes).first(bytes.size() - 5)), ErrorCode::MalformedArchive);
  auto flipped = bytes;
  flipped[40] ^= 0xFF;  // inside the compressed payload
  EXPECT_LCM_ERROR(zip::read(flipped), ErrorCode::MalformedArchive);
  EXPECT_LCM_ERROR(zip::read(std::vector<std::uint8_t>(10, 0)), ErrorCode::MalformedArchive);
}

TEST(Png, Rgba8RoundTrip) {
  Plane<Rgba8> img(5, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x)
      img(x, y) = {static_cast<std::uint8_t>(x * 50), static_cast<std::uint8_t>(y * 80), 7, static_cast<std::uint8_t>(x * y * 20)};
  EXPECT_EQ(png::decode_rgba8(png::encode_rgba8(img)), img);
}

TEST(Png, Gray16AndGray8RoundTrip) {
  Plane<std::uint16_t> g16(4, 4);
  for (std::size_t i = 0; i < g16.size(); ++i) g16.data()[i] = static_cast<std::uint16_t>(i * 4099);
  EXPECT_EQ(png::decode_gray16(png::encode_gray16(g16)), g16);

  Plane<std::uint8_t> g8(3, 2, 9);
  g8(1, 1) = 200;
  EXPECT_EQ(png::decode_gray8(png::encode_gray8(g8)), g8);
  EXPECT_LCM_ERROR(png::decode_gray16(png::encode_gray8(g8)), ErrorCode::InvalidArgument);
}

TEST(Png, MaskIsZeroOr255) {
  Mask m(3, 1, 0);
  m(1, 0) = 1;
  const auto gray = png::decode_gray8(png::encode_mask(m));
  EXPECT_EQ(gray(0, 0), 0);
  EXPECT_EQ(gray(1, 0), 255);
}

TEST(Png, IndexedKeepsIndices) {
  const std::array<std::uint8_t, 3> pal[3] = {{0, 0, 0}, {255, 0, 0}, {0, 255, 0}};
  Plane<std::uint8_t> idx(4, 2, 2);
  idx(0, 0) = 0;
  idx(3, 1) = 1;
  EXPECT_EQ(png::decode_indexed(png::encode_indexed(idx, pal)), idx);
  idx(2, 0) = 3;
  EXPECT_LCM_ERROR(png::encode_indexed(idx, pal), ErrorCode::InvalidArgument);
}

TEST(Png, QuantizeRoundsAndClamps) {
  RGBAImage img(2, 1);
  img(0, 0) = {0.5f, 1.5f, -0.2f, 1.f};
  img(1, 0) = {1.f / 255.f, 254.4f / 255.f, 0.f, 0.f};
  const auto q = png::quantize(img);
  EXPECT_EQ(q(0, 0), (Rgba8{128, 255, 0, 255}));
  EXPECT_EQ(q(1, 0), (Rgba8{1, 254, 0, 0}));
  EXPECT_EQ(png::quantize(png::dequantize(q)), q);
}

TEST(Png, GarbageFails) {
  const std::vector<std::uint8_t> junk(20, 1);
  EXPECT_LCM_ERROR(png::decode_rgba8(junk), ErrorCode::IoFailure);
}

TEST(Tensor, HeaderLayoutIsLittleEndian) {
  tensor::Tensor t;
  std::copy_n(tensor::kScoreMagic.data(), 4, t.magic.begin());
  t.height = 1;
  t.width = 2;
  t.channels = 3;
  t.values = {0.f, 0.25f, 0.5f, 0.75f, 1.f, 0.125f};
  const auto bytes = tensor::encode(t);
  ASSERT_EQ(bytes.size(), 16u + 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SSTK");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[12], 3);
  // 1.0f = 0x3F800000 little-endian at value index 4
  EXPECT_EQ(bytes[16 + 16 + 3], 0x3F);
  EXPECT_EQ(bytes[16 + 16 + 2], 0x80);

  const auto back = tensor::decode(bytes, tensor::kScoreMagic);
  EXPECT_EQ(back.values, t.values);
  EXPECT_EQ(back.width, 2u);
  EXPECT_LCM_ERROR(tensor::decode(bytes, tensor::kDepthMagic), ErrorCode::MalformedArchive);
  EXPECT_LCM_ERROR(tensor::decode(std::span(bytes).first(30), tensor::kScoreMagic), ErrorCode::MalformedArchive);
  t.values.pop_back();
  EXPECT_LCM_ERROR(tensor::encode(t), ErrorCode::DimensionMismatch);
}
