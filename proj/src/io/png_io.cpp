#include "lcm/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>

#include <png.h>

#include "lcm/errors.hpp"

namespace lcm::png {
namespace {

// libpng reports errors with longjmp, so the functions that call into it keep
// only trivially destructible locals; buffers live in caller-owned structs.

struct WriteJob {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  int color_type = PNG_COLOR_TYPE_RGBA;
  std::size_t stride = 0;
  const std::uint8_t* pixels = nullptr;
  const png_color* palette = nullptr;
  int palette_size = 0;
  std::vector<png_bytep> rows;
  Bytes out;
};

void append_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void flush_cb(png_structp) {}

bool run_write(WriteJob* job) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &job->out, append_cb, flush_cb);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, job->width, job->height, job->bit_depth, job->color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (job->palette) png_set_PLTE(png, info, job->palette, job->palette_size);
  for (int y = 0; y < job->height; ++y)
    job->rows[y] = const_cast<png_bytep>(job->pixels + static_cast<std::size_t>(y) * job->stride);
  png_set_rows(png, info, job->rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

Bytes write_png(int width, int height, int bit_depth, int color_type, std::size_t stride, const std::uint8_t* pixels,
                const png_color* palette = nullptr, int palette_size = 0) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "cannot encode an empty PNG");
  WriteJob job;
  job.width = width;
  job.height = height;
  job.bit_depth = bit_depth;
  job.color_type = color_type;
  job.stride = stride;
  job.pixels = pixels;
  job.palette = palette;
  job.palette_size = palette_size;
  job.rows.resize(height);
  if (!run_write(&job)) fail(ErrorCode::IoFailure, "PNG encoding failed");
  return std::move(job.out);
}

enum class Target { Rgba8, Gray8, Gray16, Indexed };

struct ReadJob {
  std::span<const std::uint8_t> input;
  std::size_t pos = 0;
  Target target = Target::Rgba8;
  int width = 0;
  int height = 0;
  std::size_t stride = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  bool wrong_format = false;
};

void read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* job = static_cast<ReadJob*>(png_get_io_ptr(png));
  if (job->pos + len > job->input.size()) png_error(png, "truncated PNG");
  std::memcpy(data, job->input.data() + job->pos, len);
  job->pos += len;
}

bool run_read(ReadJob* job) {
  if (job->input.size() < 8 || png_sig_cmp(job->input.data(), 0, 8) != 0) return false;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, job, read_cb);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  switch (job->target) {
    case Target::Rgba8:
      png_set_expand(png);
      png_set_strip_16(png);
      if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
      if (!(color & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
      break;
    case Target::Gray8:
      if (color != PNG_COLOR_TYPE_GRAY || depth > 8) job->wrong_format = true;
      png_set_expand_gray_1_2_4_to_8(png);
      break;
    case Target::Gray16:
      if (color != PNG_COLOR_TYPE_GRAY || depth != 16) job->wrong_format = true;
      break;
    case Target::Indexed:
      if (color != PNG_COLOR_TYPE_PALETTE) job->wrong_format = true;
      png_set_packing(png);
      break;
  }
  if (job->wrong_format) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_read_update_info(png, info);
  job->width = static_cast<int>(png_get_image_width(png, info));
  job->height = static_cast<int>(png_get_image_height(png, info));
  job->stride = png_get_rowbytes(png, info);
  job->pixels.resize(job->stride * job->height);
  job->rows.resize(job->height);
  for (int y = 0; y < job->height; ++y) job->rows[y] = job->pixels.data() + job->stride * y;
  png_read_image(png, job->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

ReadJob read_png(std::span<const std::uint8_t> bytes, Target target) {
  ReadJob job;
  job.input = bytes;
  job.target = target;
  if (!run_read(&job)) {
    if (job.wrong_format) fail(ErrorCode::InvalidArgument, "PNG has an unexpected color type or bit depth");
    fail(ErrorCode::IoFailure, "PNG decoding failed");
  }
  return job;
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.f, 1.f);
  return static_cast<std::uint8_t>(std::lround(c * 255.f));
}

}  // namespace

Bytes encode_rgba8(const Plane<Rgba8>& image) {
  return write_png(image.width(), image.height(), 8, PNG_COLOR_TYPE_RGBA, static_cast<std::size_t>(image.width()) * 4,
                   reinterpret_cast<const std::uint8_t*>(image.data().data()));
}

Plane<Rgba8> decode_rgba8(std::span<const std::uint8_t> bytes) {
  auto job = read_png(bytes, Target::Rgba8);
  Plane<Rgba8> out(job.width, job.height);
  for (int y = 0; y < job.height; ++y) {
    const std::uint8_t* src = job.pixels.data() + job.stride * y;
    for (int x = 0; x < job.width; ++x) out(x, y) = {src[4 * x], src[4 * x + 1], src[4 * x + 2], src[4 * x + 3]};
  }
  return out;
}

Bytes encode_gray8(const Plane<std::uint8_t>& image) {
  return write_png(image.width(), image.height(), 8, PNG_COLOR_TYPE_GRAY, image.width(), image.data().data());
}

Bytes encode_gray16(const Plane<std::uint16_t>& image) {
  std::vector<std::uint8_t> be(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    be[2 * i] = static_cast<std::uint8_t>(image.data()[i] >> 8);
    be[2 * i + 1] = static_cast<std::uint8_t>(image.data()[i] & 0xFF);
  }
  return write_png(image.width(), image.height(), 16, PNG_COLOR_TYPE_GRAY, static_cast<std::size_t>(image.width()) * 2,
                   be.data());
}

Plane<std::uint16_t> decode_gray16(std::span<const std::uint8_t> bytes) {
  auto job = read_png(bytes, Target::Gray16);
  Plane<std::uint16_t> out(job.width, job.height);
  for (int y = 0; y < job.height; ++y) {
    const std::uint8_t* src = job.pixels.data() + job.stride * y;
    for (int x = 0; x < job.width; ++x) out(x, y) = static_cast<std::uint16_t>((src[2 * x] << 8) | src[2 * x + 1]);
  }
  return out;
}

Plane<std::uint8_t> decode_gray8(std::span<const std::uint8_t> bytes) {
  auto job = read_png(bytes, Target::Gray8);
  Plane<std::uint8_t> out(job.width, job.height);
  for (int y = 0; y < job.height; ++y)
    std::memcpy(out.row(y).data(), job.pixels.data() + job.stride * y, job.width);
  return out;
}

Bytes encode_indexed(const Plane<std::uint8_t>& indices, std::span<const std::array<std::uint8_t, 3>> palette) {
  if (palette.empty() || palette.size() > 256) fail(ErrorCode::InvalidArgument, "palette must have 1..256 entries");
  std::vector<png_color> colors(palette.size());
  for (std::size_t i = 0; i < palette.size(); ++i) colors[i] = {palette[i][0], palette[i][1], palette[i][2]};
  for (auto v : indices.data())
    if (v >= palette.size()) fail(ErrorCode::InvalidArgument, "palette index out of range");
  return write_png(indices.width(), indices.height(), 8, PNG_COLOR_TYPE_PALETTE, indices.width(),
                   indices.data().data(), colors.data(), static_cast<int>(colors.size()));
}

Plane<std::uint8_t> decode_indexed(std::span<const std::uint8_t> bytes) {
  auto job = read_png(bytes, Target::Indexed);
  Plane<std::uint8_t> out(job.width, job.height);
  for (int y = 0; y < job.height; ++y)
    std::memcpy(out.row(y).data(), job.pixels.data() + job.stride * y, job.width);
  return out;
}

Plane<Rgba8> quantize(const RGBAImage& image) {
  Plane<Rgba8> out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const auto& p = image.data()[i];
    out.data()[i] = {to_byte(p.r), to_byte(p.g), to_byte(p.b), to_byte(p.a)};
  }
  return out;
}

RGBAImage dequantize(const Plane<Rgba8>& image) {
  RGBAImage out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const auto& p = image.data()[i];
    out.data()[i] = {p.r / 255.f, p.g / 255.f, p.b / 255.f, p.a / 255.f};
  }
  return out;
}

Bytes encode_mask(const Mask& mask) {
  Plane<std::uint8_t> gray(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) gray.data()[i] = mask.data()[i] ? 255 : 0;
  return encode_gray8(gray);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace lcm::png
