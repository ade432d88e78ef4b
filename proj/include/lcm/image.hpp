#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

namespace lcm {

// Dense row-major 2D buffer.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_size(int w, int h) const noexcept { return width_ == w && height_ == h; }
  template <typename U>
  bool same_size(const Plane<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Plane&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Straight (non-premultiplied) color, channels in [0,1].
struct Rgba {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;
  float a = 0.f;

  bool operator==(const Rgba&) const = default;
};

struct Rgba8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 0;

  bool operator==(const Rgba8&) const = default;
};

struct Rgb {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;

  bool operator==(const Rgb&) const = default;
};

using RGBAImage = Plane<Rgba>;
using RGBImage = Plane<Rgb>;
using Mask = Plane<std::uint8_t>;  // 0 or 1
using FloatPlane = Plane<float>;

// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }

  bool operator==(const Rect&) const = default;
};

inline std::size_t count_set(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.data()) n += v != 0;
  return n;
}

// Straight-alpha "over": src composited on top of dst.
inline Rgba over(const Rgba& src, const Rgba& dst) {
  const float keep = dst.a * (1.f - src.a);
  const float a = src.a + keep;
  if (a <= 0.f) return {};
  return {(src.r * src.a + dst.r * keep) / a, (src.g * src.a + dst.g * keep) / a,
          (src.b * src.a + dst.b * keep) / a, a};
}

// Premultiplied accumulator for back-to-front compositing of a stack.
struct PremulAccum {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;
  float a = 0.f;

  void add_on_top(const Rgba& src) {
    if (src.a <= 0.f) return;
    const float keep = 1.f - src.a;
    r = src.r * src.a + r * keep;
    g = src.g * src.a + g * keep;
    b = src.b * src.a + b * keep;
    a = src.a + a * keep;
  }

  Rgba resolve() const {
    if (a <= 0.f) return {};
    return {r / a, g / a, b / a, a};
  }
};

}  // namespace lcm
