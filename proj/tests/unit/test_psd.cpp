#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "fixtures.hpp"
#include "lcm/pipeline.hpp"
#include "lcm/png_io.hpp"
#include "lcm/psd.hpp"
#include "psd_reader.hpp"

using namespace lcm;
using fx::Rng;

namespace {

PsdLayer random_layer(Rng& rng, int w, int h, std::string name, double depth) {
  std::uniform_int_distribution<int> u(0, 255);
  RGBAImage img(w, h);
  const int x0 = u(rng) % w, y0 = u(rng) % h;
  for (int y = y0; y < h; ++y)
    for (int x = x0; x < w; ++x) {
      const Rgba8 p{static_cast<std::uint8_t>(u(rng)), static_cast<std::uint8_t>(u(rng)),
                    static_cast<std::uint8_t>(u(rng)), static_cast<std::uint8_t>(u(rng) % 3 ? 255 : u(rng))};
      img(x, y) = {p.r / 255.f, p.g / 255.f, p.b / 255.f, p.a / 255.f};
    }
  return {std::move(name), img, depth};
}

std::vector<std::string> names(const fx::PsdReadFile& f) {
  std::vector<std::string> out;
  for (const auto& l : f.layers) out.push_back(l.name);
  return out;
}

}  // namespace

TEST(PackBits, RoundTrip) {
  Rng rng(61);
  std::uniform_int_distribution<int> u(0, 255), len(0, 700), runs(0, 3);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::uint8_t> row;
    const int n = len(rng);
    while (static_cast<int>(row.size()) < n) {
      const auto v = static_cast<std::uint8_t>(u(rng));
      const int reps = runs(rng) == 0 ? 1 + u(rng) : 1;
      for (int r = 0; r < reps && static_cast<int>(row.size()) < n; ++r) row.push_back(v);
    }
    const auto enc = packbits_encode(row);
    EXPECT_EQ(fx::packbits_decode(enc, row.size()), row);
    EXPECT_LE(enc.size(), row.size() + (row.size() + 127) / 128 + 1);
  }
}

TEST(PackBits, KnownRuns) {
  const std::vector<std::uint8_t> row(200, 7);
  const auto enc = packbits_encode(row);
  EXPECT_LE(enc.size(), 4u);
  EXPECT_EQ(fx::packbits_decode(enc, 200), row);
}

TEST(Psd, HeaderBytes) {
  Rng rng(62);
  const std::vector layers{random_layer(rng, 13, 9, "A", 0)};
  const auto bytes = encode_psd(layers, 13, 9);
  ASSERT_GE(bytes.size(), 26u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "8BPS");
  EXPECT_EQ(bytes[4], 0);
  EXPECT_EQ(bytes[5], 1);  // version
  for (int i = 6; i < 12; ++i) EXPECT_EQ(bytes[i], 0);
  EXPECT_EQ(bytes[13], 4);  // channels
  EXPECT_EQ(bytes[17], 9);  // height
  EXPECT_EQ(bytes[21], 13);
  EXPECT_EQ(bytes[23], 8);  // depth
  EXPECT_EQ(bytes[25], 3);  // RGB
}

TEST(Psd, LayersReadBackExactly) {
  Rng rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    const int w = 5 + trial * 7, h = 3 + trial * 5;
    std::vector<PsdLayer> layers;
    for (int i = 0; i < 1 + trial % 4; ++i) layers.push_back(random_layer(rng, w, h, "L" + std::to_string(i), i));
    const auto file = fx::read_psd(encode_psd(layers, w, h));
    EXPECT_EQ(file.width, w);
    EXPECT_EQ(file.height, h);
    EXPECT_EQ(file.depth, 8);
    EXPECT_EQ(file.channels, 4);
    EXPECT_EQ(file.color_mode, 3);
    ASSERT_EQ(file.layers.size(), layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& got = file.layers[i];
      EXPECT_EQ(got.name, layers[i].name);
      EXPECT_EQ(got.blend, "norm");
      EXPECT_EQ(got.opacity, 255);
      const auto want = png::quantize(layers[i].image);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (want(x, y).a == 0) {
            EXPECT_EQ(got.pixels(x, y).a, 0);
            continue;
          }
          ASSERT_EQ(got.pixels(x, y), want(x, y)) << "layer " << i << " at " << x << "," << y;
        }
    }
  }
}

TEST(Psd, MergedImageIsWhiteMattedComposite) {
  const RGBAImage img(4, 4, {1.f, 0.f, 0.f, 0.5f});
  const std::vector layers{PsdLayer{"A", img, 0}};
  const auto file = fx::read_psd(encode_psd(layers, 4, 4));
  for (const auto& p : file.merged.data()) {
    EXPECT_EQ(p.r, 255);
    EXPECT_NEAR(p.g, 128, 1);
    EXPECT_NEAR(p.b, 128, 1);
  }
}

TEST(Psd, DepthOrdersLayers) {
  Rng rng(64);
  std::vector layers{random_layer(rng, 8, 8, "near", 0.9), random_layer(rng, 8, 8, "far", 0.1),
                     random_layer(rng, 8, 8, "mid", 0.5)};
  sort_psd_layers(layers);
  const auto file = fx::read_psd(encode_psd(layers, 8, 8));
  EXPECT_EQ(names(file), (std::vector<std::string>{"far", "mid", "near"}));
}

TEST(Psd, SortIsStableForEqualDepth) {
  Rng rng(65);
  std::vector layers{random_layer(rng, 4, 4, "a", 0.5), random_layer(rng, 4, 4, "b", 0.5),
                     random_layer(rng, 4, 4, "c", 0.2)};
  sort_psd_layers(layers);
  EXPECT_EQ(layers[0].name, "c");
  EXPECT_EQ(layers[1].name, "a");
  EXPECT_EQ(layers[2].name, "b");
}

TEST(Psd, StratifiedHairSandwichesFace) {
  const auto model = fx::tri3_model();
  const Scene scene(model);
  const auto set = compute_layers(scene);
  const auto stack = psd_stack(scene, set);
  auto sorted = stack;
  sort_psd_layers(sorted);
  const auto file = fx::read_psd(encode_psd(sorted, model.canvas_width, model.canvas_height));
  EXPECT_EQ(names(file), (std::vector<std::string>{"Hair_back", "Face", "Hair_front"}));
}

TEST(Psd, Limits) {
  EXPECT_LCM_ERROR(encode_psd(std::vector<PsdLayer>{}, 4, 4), ErrorCode::InvalidArgument);
  std::vector<PsdLayer> many(kMaxPsdLayers + 1, PsdLayer{"x", RGBAImage(1, 1), 0});
  EXPECT_LCM_ERROR(encode_psd(many, 1, 1), ErrorCode::TooManyLayers);
  many.pop_back();
  EXPECT_NO_THROW(encode_psd(many, 1, 1));
}

TEST(Psd, MedianDepth) {
  PseudoDepthMap m{FloatPlane(5, 1), Mask(5, 1, 1)};
  const float v[] = {0.1f, 0.9f, 0.4f, 0.3f, 0.8f};
  for (int x = 0; x < 5; ++x) m.depth(x, 0) = v[x];
  Mask all(5, 1, 1);
  EXPECT_NEAR(median_depth(m, all), 0.4, 1e-7);
  Mask first_two(5, 1, 0);
  first_two(0, 0) = first_two(1, 0) = 1;
  EXPECT_NEAR(median_depth(m, first_two), 0.5, 1e-7);
  EXPECT_EQ(median_depth(m, Mask(5, 1, 0)), 0.0);
}

TEST(Psd, ExportWritesFile) {
  Rng rng(66);
  const auto path = std::filesystem::temp_directory_path() / "lcm_test_export.psd";
  export_psd({random_layer(rng, 6, 6, "top", 1.0), random_layer(rng, 6, 6, "bottom", 0.0)}, 6, 6, path);
  const auto file = fx::read_psd(png::read_file(path));
  EXPECT_EQ(names(file), (std::vector<std::string>{"bottom", "top"}));
  std::filesystem::remove(path);
  EXPECT_LCM_ERROR(export_psd({random_layer(rng, 6, 6, "a", 0)}, 6, 6, "/nonexistent/dir/x.psd"),
                   ErrorCode::IoFailure);
}
