#include "lcm/psd.hpp"

#include <algorithm>

#include "lcm/errors.hpp"
#include "lcm/kernels.hpp"
#include "lcm/metrics.hpp"
#include "lcm/png_io.hpp"
#include "lcm/raster.hpp"

namespace lcm {
namespace {

constexpr int kMaxPsdDimension = 30000;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }
  void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void text(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

  std::size_t size() const { return out_.size(); }
  // Reserves a u32 length slot; finish() fills it with the byte count since.
  std::size_t begin_length() {
    const auto at = out_.size();
    u32(0);
    return at;
  }
  void finish_length(std::size_t at) {
    const auto len = static_cast<std::uint32_t>(out_.size() - at - 4);
    for (int i = 0; i < 4; ++i) out_[at + i] = static_cast<std::uint8_t>(len >> (24 - 8 * i));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

// RLE channel body: per-row u16 byte counts followed by the packed rows.
struct PackedChannel {
  std::vector<std::uint16_t> row_lengths;
  std::vector<std::uint8_t> data;
};

PackedChannel pack_channel(const Plane<Rgba8>& image, const Rect& r, int channel) {
  PackedChannel pc;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(r.width()));
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      const Rgba8& p = image(x, y);
      row[x - r.x0] = channel == -1 ? p.a : channel == 0 ? p.r : channel == 1 ? p.g : p.b;
    }
    const auto packed = packbits_encode(row);
    pc.row_lengths.push_back(static_cast<std::uint16_t>(packed.size()));
    pc.data.insert(pc.data.end(), packed.begin(), packed.end());
  }
  return pc;
}

Rect content_bounds(const Plane<Rgba8>& image) {
  Rect r{image.width(), image.height(), 0, 0};
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      const Rgba8& p = image(x, y);
      if (!(p.r || p.g || p.b || p.a)) continue;
      r.x0 = std::min(r.x0, x);
      r.y0 = std::min(r.y0, y);
      r.x1 = std::max(r.x1, x + 1);
      r.y1 = std::max(r.y1, y + 1);
    }
  return r.empty() ? Rect{} : r;
}

RGBAImage subset(const RGBAImage& image, const Plane<std::uint8_t>& assignments, std::uint8_t stratum) {
  RGBAImage out(image.width(), image.height());
  for (std::size_t p = 0; p < image.size(); ++p)
    if (assignments.data()[p] == stratum) out.data()[p] = image.data()[p];
  return out;
}

bool has_alpha(const RGBAImage& image) {
  return std::any_of(image.data().begin(), image.data().end(), [](const Rgba& c) { return c.a > 0.f; });
}

}  // namespace

double median_depth(const PseudoDepthMap& depth_map, const Mask& region) {
  if (!region.same_size(depth_map.depth)) fail(ErrorCode::DimensionMismatch, "region size differs from depth map");
  std::vector<float> v;
  for (std::size_t p = 0; p < region.size(); ++p)
    if (region.data()[p] && depth_map.valid.data()[p]) v.push_back(depth_map.depth.data()[p]);
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (static_cast<double>(v[n / 2 - 1]) + v[n / 2]) / 2.0;
}

void sort_psd_layers(std::vector<PsdLayer>& layers) {
  std::stable_sort(layers.begin(), layers.end(), [](const PsdLayer& a, const PsdLayer& b) { return a.depth < b.depth; });
}

std::vector<PsdLayer> build_psd_stack(const Scene& scene, std::span<const SemanticLayer> layers,
                                      std::span<const PseudoDepthMap> depth_maps, std::span<const Strata> strata) {
  if (layers.size() != depth_maps.size()) fail(ErrorCode::DimensionMismatch, "need one depth map per layer");
  const auto& taxonomy = scene.model().taxonomy;
  std::vector<PsdLayer> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    const auto& dmap = depth_maps[i];
    const std::string name = taxonomy.name(layer.cls);
    const auto st = std::find_if(strata.begin(), strata.end(), [&](const Strata& s) { return s.cls == layer.cls; });
    if (st == strata.end() || !st->split) {
      if (!has_alpha(layer.image)) continue;
      Mask region(layer.image.width(), layer.image.height(), 0);
      for (std::size_t p = 0; p < region.size(); ++p) region.data()[p] = layer.image.data()[p].a > 0.f;
      out.push_back({name, layer.image, median_depth(dmap, region)});
      continue;
    }
    const int k = st->k();
    for (int s = 1; s <= k; ++s) {
      auto image = subset(layer.image, st->assignments, static_cast<std::uint8_t>(s));
      Mask region(image.width(), image.height(), 0);
      for (std::size_t p = 0; p < region.size(); ++p) region.data()[p] = st->assignments.data()[p] == s;
      if (s < k) {
        Mask holes(image.width(), image.height(), 0);
        for (std::size_t p = 0; p < holes.size(); ++p)
          holes.data()[p] = st->hole_mask.data()[p] && st->assignments.data()[p] > s;
        image = fill_holes(image, holes);
      }
      if (!has_alpha(image)) continue;
      std::string sub = k == 2 ? (s == kStratumBack ? name + "_back" : name + "_front") : name + "_s" + std::to_string(s);
      out.push_back({std::move(sub), std::move(image), median_depth(dmap, region)});
    }
  }
  return out;
}

std::vector<std::uint8_t> packbits_encode(std::span<const std::uint8_t> row) {
  std::vector<std::uint8_t> out;
  const std::size_t n = row.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t run = 1;
    while (i + run < n && run < 128 && row[i + run] == row[i]) ++run;
    if (run >= 2) {
      out.push_back(static_cast<std::uint8_t>(257 - run));
      out.push_back(row[i]);
      i += run;
      continue;
    }
    const std::size_t start = i;
    while (i < n && i - start < 128 && !(i + 1 < n && row[i] == row[i + 1])) ++i;
    out.push_back(static_cast<std::uint8_t>(i - start - 1));
    out.insert(out.end(), row.begin() + static_cast<std::ptrdiff_t>(start), row.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return out;
}

std::vector<std::uint8_t> encode_psd(std::span<const PsdLayer> layers, int width, int height) {
  if (layers.empty()) fail(ErrorCode::InvalidArgument, "no layers to export");
  if (layers.size() > kMaxPsdLayers)
    fail(ErrorCode::TooManyLayers, std::to_string(layers.size()) + " layers exceed the limit of " +
                                       std::to_string(kMaxPsdLayers));
  if (width < 1 || height < 1 || width > kMaxPsdDimension || height > kMaxPsdDimension)
    fail(ErrorCode::InvalidArgument, "canvas size not representable in PSD");
  for (const auto& l : layers)
    if (!l.image.same_size(width, height)) fail(ErrorCode::DimensionMismatch, "layer '" + l.name + "' size differs");

  std::vector<Plane<Rgba8>> quantized;
  PremulAccum blank;
  std::vector<PremulAccum> merged(static_cast<std::size_t>(width) * height, blank);
  for (const auto& l : layers) {
    quantized.push_back(png::quantize(l.image));
    const auto deq = png::dequantize(quantized.back());
    for (std::size_t p = 0; p < merged.size(); ++p) merged[p].add_on_top(deq.data()[p]);
  }

  Writer w;
  w.text("8BPS");
  w.u16(1);
  for (int i = 0; i < 6; ++i) w.u8(0);
  w.u16(4);
  w.u32(static_cast<std::uint32_t>(height));
  w.u32(static_cast<std::uint32_t>(width));
  w.u16(8);
  w.u16(3);
  w.u32(0);  // color mode data
  w.u32(0);  // image resources

  const auto lm_len = w.begin_length();
  const auto li_len = w.begin_length();
  w.i16(static_cast<std::int16_t>(-static_cast<int>(layers.size())));  // negative: merged alpha is transparency

  std::vector<std::array<PackedChannel, 4>> channels(layers.size());
  std::vector<Rect> bounds(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    bounds[i] = content_bounds(quantized[i]);
    for (int c = 0; c < 4; ++c) channels[i][c] = pack_channel(quantized[i], bounds[i], c - 1);
  }

  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Rect& r = bounds[i];
    w.i32(r.y0);
    w.i32(r.x0);
    w.i32(r.y1);
    w.i32(r.x1);
    w.u16(4);
    for (int c = 0; c < 4; ++c) {
      w.i16(static_cast<std::int16_t>(c - 1));
      const auto& pc = channels[i][c];
      const std::size_t body = r.empty() ? 0 : pc.row_lengths.size() * 2 + pc.data.size();
      w.u32(static_cast<std::uint32_t>(2 + body));
    }
    w.text("8BIM");
    w.text("norm");
    w.u8(255);  // opacity
    w.u8(0);    // clipping
    w.u8(0);    // flags
    w.u8(0);    // filler
    const auto extra = w.begin_length();
    w.u32(0);  // layer mask data
    w.u32(0);  // blending ranges
    const std::string& name = layers[i].name;
    const std::size_t name_len = std::min<std::size_t>(name.size(), 255);
    w.u8(static_cast<std::uint8_t>(name_len));
    w.text(std::string_view(name).substr(0, name_len));
    for (std::size_t pad = (1 + name_len) % 4; pad != 0 && pad < 4; ++pad) w.u8(0);
    w.finish_length(extra);
  }

  for (std::size_t i = 0; i < layers.size(); ++i)
    for (int c = 0; c < 4; ++c) {
      if (bounds[i].empty()) {
        w.u16(0);
        continue;
      }
      w.u16(1);
      for (auto len : channels[i][c].row_lengths) w.u16(len);
      w.bytes(channels[i][c].data);
    }
  if ((w.size() - li_len - 4) % 2) w.u8(0);
  w.finish_length(li_len);
  w.u32(0);  // global layer mask info
  w.finish_length(lm_len);

  // Flattened image: white-matted color plus the composite alpha.
  RGBAImage flat(width, height);
  for (std::size_t p = 0; p < merged.size(); ++p) flat.data()[p] = merged[p].resolve();
  const auto matted = matte_white(flat);
  Plane<Rgba8> merged8(width, height);
  {
    RGBAImage opaque(width, height);
    for (std::size_t p = 0; p < opaque.size(); ++p) {
      const Rgb& c = matted.data()[p];
      opaque.data()[p] = {c.r, c.g, c.b, flat.data()[p].a};
    }
    merged8 = png::quantize(opaque);
  }
  const Rect full{0, 0, width, height};
  std::array<PackedChannel, 4> mc;
  for (int c = 0; c < 4; ++c) mc[c] = pack_channel(merged8, full, c < 3 ? c : -1);
  w.u16(1);
  for (const auto& pc : mc)
    for (auto len : pc.row_lengths) w.u16(len);
  for (const auto& pc : mc) w.bytes(pc.data);
  return w.take();
}

void export_psd(std::vector<PsdLayer> layers, int width, int height, const std::filesystem::path& path) {
  sort_psd_layers(layers);
  const auto bytes = encode_psd(layers, width, height);
  png::write_file(path, bytes);
}

}  // namespace lcm
