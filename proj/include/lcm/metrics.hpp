#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "lcm/depth.hpp"
#include "lcm/image.hpp"

namespace lcm {

inline constexpr double kPsnrCap = 100.0;
inline constexpr double kDepthEpsilon = 0.01;

// 1 - 2|a & b| / (|a| + |b|); 0 when both masks are empty.
double metric_dice_loss(const Mask& a, const Mask& b);

double metric_mask_mse(const FloatPlane& a, const FloatPlane& b);
double metric_mask_mse(const Mask& a, const Mask& b);

// Alpha-matte onto white and drop alpha.
RGBImage matte_white(const RGBAImage& image);

struct ImageQuality {
  double psnr = 0.0;
  double ssim = 0.0;
};

// PSNR (MAX = 1, capped) and SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01,
// K2 0.03, mean over RGB channels) on white-matted images.
ImageQuality metric_psnr_ssim(const RGBAImage& x, const RGBAImage& y);

struct DepthQuality {
  double absrel = 0.0;
  double delta1 = 0.0;
  std::size_t pixels = 0;
};

// Over pixels valid in both maps, with ground truth shifted by kDepthEpsilon.
DepthQuality metric_depth(const PseudoDepthMap& pred, const PseudoDepthMap& gt);

struct MetricsReport {
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::optional<double> mask_dice_loss;
  std::optional<double> mask_mse;
  std::optional<double> absrel;
  std::optional<double> delta1;
};

std::string metrics_to_json(const MetricsReport& report);

}  // namespace lcm
