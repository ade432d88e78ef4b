#include "lcm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "lcm/errors.hpp"

namespace lcm {
namespace {

template <typename A, typename B>
void require_same_size(const A& a, const B& b) {
  if (!a.same_size(b)) fail(ErrorCode::DimensionMismatch, "image sizes differ");
}

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Separable Gaussian-weighted local mean; the window is truncated at the
// image border and renormalized.
std::vector<double> local_mean(const std::vector<double>& v, int w, int h, const std::vector<double>& k) {
  std::vector<double> tmp(v.size()), out(v.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0, norm = 0.0;
      for (int i = std::max(-kSsimRadius, -x); i <= std::min(kSsimRadius, w - 1 - x); ++i) {
        acc += k[i + kSsimRadius] * v[static_cast<std::size_t>(y) * w + x + i];
        norm += k[i + kSsimRadius];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc / norm;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0, norm = 0.0;
      for (int i = std::max(-kSsimRadius, -y); i <= std::min(kSsimRadius, h - 1 - y); ++i) {
        acc += k[i + kSsimRadius] * tmp[static_cast<std::size_t>(y + i) * w + x];
        norm += k[i + kSsimRadius];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc / norm;
    }
  return out;
}

double ssim_channel(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
  std::vector<double> k(2 * kSsimRadius + 1);
  for (int i = -kSsimRadius; i <= kSsimRadius; ++i) k[i + kSsimRadius] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = local_mean(a, w, h, k), mu_b = local_mean(b, w, h, k);
  const auto e_aa = local_mean(aa, w, h, k), e_bb = local_mean(bb, w, h, k), e_ab = local_mean(ab, w, h, k);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    sum += ((2 * mu_a[i] * mu_b[i] + kC1) * (2 * cov + kC2)) /
           ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2));
  }
  return sum / static_cast<double>(a.size());
}

}  // namespace

double metric_dice_loss(const Mask& a, const Mask& b) {
  require_same_size(a, b);
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.data()[i] != 0, y = b.data()[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 0.0;
  return 1.0 - 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double metric_mask_mse(const FloatPlane& a, const FloatPlane& b) {
  require_same_size(a, b);
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double metric_mask_mse(const Mask& a, const Mask& b) {
  require_same_size(a, b);
  if (a.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a.data()[i] != 0) != (b.data()[i] != 0);
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

RGBImage matte_white(const RGBAImage& image) {
  RGBImage out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const Rgba& c = image.data()[i];
    const double a = c.a, keep = 1.0 - a;
    out.data()[i] = {static_cast<float>(c.r * a + keep), static_cast<float>(c.g * a + keep),
                     static_cast<float>(c.b * a + keep)};
  }
  return out;
}

ImageQuality metric_psnr_ssim(const RGBAImage& x, const RGBAImage& y) {
  require_same_size(x, y);
  if (x.empty()) fail(ErrorCode::InvalidArgument, "empty image");
  const auto mx = matte_white(x), my = matte_white(y);
  const int w = x.width(), h = x.height();

  double se = 0.0;
  std::array<std::vector<double>, 3> ca, cb;
  for (auto& v : ca) v.resize(x.size());
  for (auto& v : cb) v.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Rgb& a = mx.data()[i];
    const Rgb& b = my.data()[i];
    ca[0][i] = a.r, ca[1][i] = a.g, ca[2][i] = a.b;
    cb[0][i] = b.r, cb[1][i] = b.g, cb[2][i] = b.b;
    for (int c = 0; c < 3; ++c) {
      const double d = ca[c][i] - cb[c][i];
      se += d * d;
    }
  }
  ImageQuality q;
  const double mse = se / (3.0 * static_cast<double>(x.size()));
  q.psnr = mse <= 0.0 ? kPsnrCap : std::min(kPsnrCap, -10.0 * std::log10(mse));
  double ssim = 0.0;
  for (int c = 0; c < 3; ++c) ssim += ssim_channel(ca[c], cb[c], w, h);
  q.ssim = ssim / 3.0;
  return q;
}

DepthQuality metric_depth(const PseudoDepthMap& pred, const PseudoDepthMap& gt) {
  require_same_size(pred.depth, gt.depth);
  require_same_size(pred.valid, gt.valid);
  DepthQuality q;
  double rel = 0.0;
  std::size_t good = 0;
  for (std::size_t i = 0; i < pred.depth.size(); ++i) {
    if (!pred.valid.data()[i] || !gt.valid.data()[i]) continue;
    const double p = pred.depth.data()[i] + kDepthEpsilon;
    const double g = gt.depth.data()[i] + kDepthEpsilon;
    rel += std::abs(p - g) / g;
    good += std::max(p / g, g / p) < 1.25;
    ++q.pixels;
  }
  if (q.pixels == 0) fail(ErrorCode::NoOverlap, "depth maps share no valid pixel");
  q.absrel = rel / static_cast<double>(q.pixels);
  q.delta1 = static_cast<double>(good) / static_cast<double>(q.pixels);
  return q;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j = nlohmann::json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("psnr", report.psnr);
  put("ssim", report.ssim);
  put("mask_dice_loss", report.mask_dice_loss);
  put("mask_mse", report.mask_mse);
  put("absrel", report.absrel);
  put("delta1", report.delta1);
  return j.dump(2);
}

}  // namespace lcm
