#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "expect_error.hpp"
#include "fixtures.hpp"
#include "lcm/layers.hpp"
#include "lcm/metrics.hpp"
#include "lcm/pipeline.hpp"
#include "lcm/raster.hpp"

using namespace lcm;
using fx::ModelBuilder;
using fx::Rng;

namespace {

// Layers for every class present plus their class depth maps.
RGBAImage reconstruct_model(const CharacterModel& model) {
  const Scene scene(model);
  std::vector<SemanticLayer> layers;
  std::vector<PseudoDepthMap> depths;
  std::set<ClassId> classes;
  for (const auto& m : model.meshes) classes.insert(m.label);
  for (ClassId c : classes) {
    layers.push_back(extract_layer(scene, c));
    depths.push_back(render_depth_map(scene, c));
  }
  return reconstruct(layers, depths);
}

RGBAImage random_opaque(Rng& rng, int w, int h, float lo, float hi) {
  std::uniform_real_distribution<float> u(lo, hi);
  RGBAImage img(w, h);
  for (auto& p : img.data()) p = {u(rng), u(rng), u(rng), 1.f};
  return img;
}

// Direct 2-D window SSIM, truncated at the border and renormalized.
double ssim_oracle(const RGBImage& a, const RGBImage& b) {
  const int w = a.width(), h = a.height();
  double total = 0;
  for (int ch = 0; ch < 3; ++ch) {
    auto get = [&](const RGBImage& img, int x, int y) {
      const Rgb& p = img(x, y);
      return static_cast<double>(ch == 0 ? p.r : ch == 1 ? p.g : p.b);
    };
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double sw = 0, ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
        for (int j = -5; j <= 5; ++j)
          for (int i = -5; i <= 5; ++i) {
            const int xx = x + i, yy = y + j;
            if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
            const double wt = std::exp(-0.5 * (i * i + j * j) / 2.25);
            const double va = get(a, xx, yy), vb = get(b, xx, yy);
            sw += wt;
            ma += wt * va;
            mb += wt * vb;
            aa += wt * va * va;
            bb += wt * vb * vb;
            ab += wt * va * vb;
          }
        ma /= sw, mb /= sw, aa /= sw, bb /= sw, ab /= sw;
        const double c1 = 1e-4, c2 = 9e-4;
        total += ((2 * ma * mb + c1) * (2 * (ab - ma * mb) + c2)) /
                 ((ma * ma + mb * mb + c1) * ((aa - ma * ma) + (bb - mb * mb) + c2));
      }
  }
  return total / (3.0 * w * h);
}

}  // namespace

TEST(Pad, OpaqueLayerIsUnchanged) {
  Rng rng(51);
  const auto img = random_opaque(rng, 9, 7, 0.f, 1.f);
  const auto pad = pad_gaussian(img);
  EXPECT_FALSE(pad.all_transparent);
  for (std::size_t p = 0; p < img.size(); ++p)
    EXPECT_EQ(pad.rgb.data()[p], (Rgb{img.data()[p].r, img.data()[p].g, img.data()[p].b}));
}

TEST(Pad, SingleRedPixelFillsEverything) {
  RGBAImage img(40, 25);
  img(31, 3) = {1.f, 0.f, 0.f, 1.f};
  const auto pad = pad_gaussian(img);
  for (const auto& p : pad.rgb.data()) EXPECT_EQ(p, (Rgb{1.f, 0.f, 0.f}));
}

TEST(Pad, TwoColorsStayInConvexHull) {
  RGBAImage img(64, 48);
  const Rgba a{0.9f, 0.2f, 0.1f, 1.f}, b{0.1f, 0.3f, 0.8f, 0.6f};
  for (int y = 10; y < 14; ++y)
    for (int x = 5; x < 9; ++x) img(x, y) = a;
  img(50, 40) = b;
  const auto pad = pad_gaussian(img);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      const Rgb p = pad.rgb(x, y);
      if (img(x, y).a > 0.f) {
        EXPECT_EQ(p, (Rgb{img(x, y).r, img(x, y).g, img(x, y).b}));
        continue;
      }
      // p = a + t (b - a) for one t in [0, 1]
      const double t = (p.r - a.r) / double(b.r - a.r);
      ASSERT_GE(t, -1e-5);
      ASSERT_LE(t, 1 + 1e-5);
      EXPECT_NEAR(p.g, a.g + t * (b.g - a.g), 1e-5);
      EXPECT_NEAR(p.b, a.b + t * (b.b - a.b), 1e-5);
    }
}

TEST(Pad, KeepsVisiblePixelsAndStaysInRange) {
  Rng rng(52);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (int i = 0; i < 10; ++i) {
    RGBAImage img(30 + i, 20);
    for (auto& p : img.data())
      if (u(rng) < 0.05f) p = {u(rng), u(rng), u(rng), u(rng)};
    const auto pad = pad_gaussian(img);
    for (std::size_t p = 0; p < img.size(); ++p) {
      const auto& o = pad.rgb.data()[p];
      for (float v : {o.r, o.g, o.b}) {
        EXPECT_GE(v, 0.f);
        EXPECT_LE(v, 1.f);
      }
      if (img.data()[p].a > 0.f) EXPECT_EQ(o, (Rgb{img.data()[p].r, img.data()[p].g, img.data()[p].b}));
    }
  }
}

TEST(Pad, AllTransparentIsGrayAndFlagged) {
  const auto pad = pad_gaussian(RGBAImage(5, 5));
  EXPECT_TRUE(pad.all_transparent);
  for (const auto& p : pad.rgb.data()) EXPECT_EQ(p, (Rgb{0.5f, 0.5f, 0.5f}));
}

TEST(ExtractLayer, HiddenMeshShowsAnyway) {
  const auto model =
      ModelBuilder(4, 4).quad(0, 0, 0, 4, 4, 0, {255, 0, 0, 255}, 3).quad(1, 0, 0, 4, 4, 1, {0, 0, 255, 255}, 1).build();
  const auto layer = extract_layer(model, 3);
  for (const auto& p : layer.image.data()) EXPECT_EQ(p, (Rgba{1, 0, 0, 1}));
  EXPECT_EQ(layer.cls, 3);
}

TEST(ExtractLayer, EmptyClassIsTransparent) {
  const auto layer = extract_layer(fx::tri3_model(), 9);
  for (const auto& p : layer.image.data()) EXPECT_EQ(p.a, 0.f);
  EXPECT_TRUE(layer.padded_fallback);
  EXPECT_LCM_ERROR(extract_layer(fx::tri3_model(), 19), ErrorCode::UnknownClass);
}

TEST(ExtractLayer, Tri3HairMatchesRestrictedOracle) {
  const auto model = fx::tri3_model();
  const std::set<int> hair{0, 2};
  EXPECT_EQ(extract_layer(model, 0).image, fx::painter_oracle(model, &hair));
}

TEST(Reconstruct, SingleLayer) {
  Rng rng(53);
  const auto model = fx::random_model(rng, {.binary_alpha = false, .labeled = true, .classes_used = 1});
  const auto layer = extract_layer(model, 0);
  const auto r = reconstruct(std::vector{layer}, std::vector{render_depth_map(model, 0)});
  for (std::size_t p = 0; p < r.size(); ++p) {
    const auto& a = r.data()[p];
    const auto& b = layer.image.data()[p];
    EXPECT_NEAR(a.a, b.a, 1e-6);
    if (b.a > 0) EXPECT_NEAR(a.r, b.r, 1e-6);
  }
}

TEST(Reconstruct, BinaryAlphaIdentity) {
  Rng rng(54);
  for (int i = 0; i < 50; ++i) {
    const auto model = fx::random_model(rng, {.labeled = true, .classes_used = 1 + i % 19});
    ASSERT_EQ(reconstruct_model(model), render_composite(model)) << "model " << i;
  }
}

TEST(Reconstruct, ContiguousFractionalAlphaIsNearExact) {
  Rng rng(55);
  for (int i = 0; i < 20; ++i) {
    auto model = fx::random_model(rng, {.binary_alpha = false, .labeled = true, .classes_used = 4});
    // Draw orders grouped by class, so no class interleaves another.
    auto order = model.paint_order();
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return model.meshes[a].label < model.meshes[b].label; });
    for (std::size_t r = 0; r < order.size(); ++r) model.meshes[order[r]].draw_order = static_cast<int>(r);
    EXPECT_GE(metric_psnr_ssim(reconstruct_model(model), render_composite(model)).psnr, 50.0);
  }
}

TEST(Reconstruct, SwappingDisjointDepthsIsNoOp) {
  const auto model = ModelBuilder(8, 4)
                         .quad(0, 0, 0, 4, 4, 0, {255, 0, 0, 200}, 0)
                         .quad(1, 4, 0, 8, 4, 1, {0, 255, 0, 100}, 1)
                         .build();
  std::vector layers{extract_layer(model, 0), extract_layer(model, 1)};
  std::vector depths{render_depth_map(model, 0), render_depth_map(model, 1)};
  const auto before = reconstruct(layers, depths);
  std::swap(depths[0].depth, depths[1].depth);
  for (auto& v : depths[0].depth.data()) v = v < 0 ? v : 1.f;
  for (auto& v : depths[1].depth.data()) v = v < 0 ? v : 0.f;
  EXPECT_EQ(reconstruct(layers, depths), before);
}

TEST(Reconstruct, SizeChecks) {
  const auto model = fx::tri3_model();
  std::vector layers{extract_layer(model, 0)};
  EXPECT_LCM_ERROR(reconstruct(layers, std::vector<PseudoDepthMap>{}), ErrorCode::DimensionMismatch);
  PseudoDepthMap small{FloatPlane(3, 3), Mask(3, 3)};
  EXPECT_LCM_ERROR(reconstruct(layers, std::vector{small}), ErrorCode::DimensionMismatch);
}

TEST(Dice, Identities) {
  Mask a(4, 1, 0), b(4, 1, 0);
  a(0, 0) = a(1, 0) = 1;
  b(1, 0) = b(2, 0) = 1;
  EXPECT_EQ(metric_dice_loss(a, a), 0.0);
  EXPECT_EQ(metric_dice_loss(a, b), 0.5);
  EXPECT_EQ(metric_dice_loss(a, b), metric_dice_loss(b, a));
  Mask c(4, 1, 0);
  c(3, 0) = 1;
  EXPECT_EQ(metric_dice_loss(a, c), 1.0);
  EXPECT_EQ(metric_dice_loss(Mask(4, 1, 0), Mask(4, 1, 0)), 0.0);
  EXPECT_LCM_ERROR(metric_dice_loss(a, Mask(3, 1, 0)), ErrorCode::DimensionMismatch);
}

TEST(MaskMse, FloatAndBinary) {
  FloatPlane a(2, 1, 0.f), b(2, 1, 0.f);
  b(0, 0) = 0.5f;
  EXPECT_DOUBLE_EQ(metric_mask_mse(a, b), 0.125);
  Mask m(4, 1, 0), n(4, 1, 0);
  n(2, 0) = 1;
  EXPECT_DOUBLE_EQ(metric_mask_mse(m, n), 0.25);
}

TEST(Psnr, IdenticalIsCappedAndSsimOne) {
  Rng rng(56);
  const auto x = random_opaque(rng, 20, 16, 0.f, 1.f);
  const auto q = metric_psnr_ssim(x, x);
  EXPECT_EQ(q.psnr, kPsnrCap);
  EXPECT_DOUBLE_EQ(q.ssim, 1.0);
}

TEST(Psnr, TenthOffsetIsTwentyDecibels) {
  Rng rng(57);
  const auto x = random_opaque(rng, 32, 24, 0.f, 0.9f);
  auto y = x;
  for (auto& p : y.data()) p = {p.r + 0.1f, p.g + 0.1f, p.b + 0.1f, 1.f};
  EXPECT_NEAR(metric_psnr_ssim(x, y).psnr, 20.0, 1e-6);
}

TEST(Psnr, SingleChannelOffsetAveragesOverChannels) {
  const RGBAImage x(8, 8, {0.2f, 0.2f, 0.2f, 1.f});
  const RGBAImage y(8, 8, {0.2f, 0.2f, 0.3f, 1.f});
  const double d = double(0.3f) - double(0.2f);
  EXPECT_NEAR(metric_psnr_ssim(x, y).psnr, -10 * std::log10(d * d / 3), 1e-9);
}

TEST(Psnr, AlphaIsMattedOnWhite) {
  const RGBAImage clear(4, 4, {0.f, 0.f, 0.f, 0.f});
  const RGBAImage white(4, 4, {1.f, 1.f, 1.f, 1.f});
  EXPECT_EQ(metric_psnr_ssim(clear, white).psnr, kPsnrCap);
}

TEST(Ssim, MatchesDirectWindowOracle) {
  Rng rng(58);
  for (int i = 0; i < 5; ++i) {
    const auto x = random_opaque(rng, 17 + i, 13, 0.f, 1.f);
    auto y = x;
    std::normal_distribution<float> n(0.f, 0.05f);
    for (auto& p : y.data()) p = {std::clamp(p.r + n(rng), 0.f, 1.f), std::clamp(p.g + n(rng), 0.f, 1.f), p.b, 1.f};
    const auto q = metric_psnr_ssim(x, y);
    EXPECT_NEAR(q.ssim, ssim_oracle(matte_white(x), matte_white(y)), 1e-10);
    EXPECT_LT(q.ssim, 1.0);
    EXPECT_GE(q.ssim, -1.0);
  }
}

TEST(DepthMetric, IdentityAndFormula) {
  Rng rng(59);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  PseudoDepthMap x{FloatPlane(10, 10), Mask(10, 10, 1)};
  for (auto& v : x.depth.data()) v = u(rng);
  const auto same = metric_depth(x, x);
  EXPECT_EQ(same.absrel, 0.0);
  EXPECT_EQ(same.delta1, 1.0);

  const PseudoDepthMap gt{FloatPlane(4, 4, 0.5f), Mask(4, 4, 1)};
  const PseudoDepthMap pred{FloatPlane(4, 4, 1.0f), Mask(4, 4, 1)};
  const auto q = metric_depth(pred, gt);
  EXPECT_NEAR(q.absrel, 0.5 / 0.51, 1e-12);
  EXPECT_EQ(q.delta1, 0.0);  // 1.01 / 0.51 > 1.25
  EXPECT_EQ(q.pixels, 16u);

  // Direct loop over random maps with partial validity.
  PseudoDepthMap a{FloatPlane(12, 9), Mask(12, 9)}, b{FloatPlane(12, 9), Mask(12, 9)};
  double rel = 0;
  std::size_t n = 0, good = 0;
  for (std::size_t p = 0; p < a.depth.size(); ++p) {
    a.depth.data()[p] = u(rng);
    b.depth.data()[p] = u(rng);
    a.valid.data()[p] = u(rng) < 0.8f;
    b.valid.data()[p] = u(rng) < 0.8f;
    if (!a.valid.data()[p] || !b.valid.data()[p]) continue;
    const double pp = a.depth.data()[p] + 0.01, gg = b.depth.data()[p] + 0.01;
    rel += std::abs(pp - gg) / gg;
    good += std::max(pp / gg, gg / pp) < 1.25;
    ++n;
  }
  const auto r = metric_depth(a, b);
  EXPECT_NEAR(r.absrel, rel / n, 1e-12);
  EXPECT_EQ(r.delta1, double(good) / n);

  const PseudoDepthMap none{FloatPlane(4, 4), Mask(4, 4, 0)};
  EXPECT_LCM_ERROR(metric_depth(none, gt), ErrorCode::NoOverlap);
}

TEST(MetricsJson, OnlyPresentKeys) {
  MetricsReport r;
  r.psnr = 31.5;
  r.delta1 = 1.0;
  const auto j = nlohmann::json::parse(metrics_to_json(r));
  EXPECT_EQ(j.size(), 2u);
  EXPECT_EQ(j["psnr"], 31.5);
  EXPECT_FALSE(j.contains("lpips"));
}
