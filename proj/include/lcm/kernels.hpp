#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and an
// OpenMP implementation; both produce bit-identical results, which the test
// suite checks. Library code goes through the dispatching entry points.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lcm/image.hpp"
#include "lcm/model.hpp"
#include "lcm/raster_types.hpp"

namespace lcm::kernels {

Backend default_backend() noexcept;

// Rasterizes one mesh; shared by both backends.
MeshRaster rasterize_mesh(const CharacterModel& model, std::size_t mesh_index);

std::vector<MeshRaster> rasterize_all(const CharacterModel& model, Backend backend);

// Back-to-front "over" of the listed rasters (indices into `rasters`).
RGBAImage composite(int width, int height, std::span<const MeshRaster> rasters,
                    std::span<const std::size_t> order, Backend backend);

// Per-pixel surviving contribution alpha * prod(1 - alpha_above) >= tau.
// Returns one mask per entry of `order`, in the same sequence.
std::vector<VisibilityMask> visibility(int width, int height, std::span<const MeshRaster> rasters,
                                       std::span<const std::size_t> order, double tau, Backend backend);

// Index (into `rasters`) of the topmost mesh with positive color alpha, or -1.
Plane<std::int32_t> topmost(int width, int height, std::span<const MeshRaster> rasters,
                            std::span<const std::size_t> order, Backend backend);

// Per-mask class score sums over the mask pixels, row-major accumulation.
// Result is masks.size() x channels.
std::vector<std::vector<double>> region_sums(std::span<const float> scores, int width, int height, int channels,
                                             std::span<const VisibilityMask> masks, Backend backend);

// In-place separable Gaussian blur with zero padding outside the image.
void gaussian_blur(FloatPlane& plane, double sigma, Backend backend);

namespace serial {
std::vector<MeshRaster> rasterize_all(const CharacterModel& model);
RGBAImage composite(int width, int height, std::span<const MeshRaster> rasters, std::span<const std::size_t> order);
std::vector<VisibilityMask> visibility(int width, int height, std::span<const MeshRaster> rasters,
                                       std::span<const std::size_t> order, double tau);
Plane<std::int32_t> topmost(int width, int height, std::span<const MeshRaster> rasters,
                            std::span<const std::size_t> order);
std::vector<std::vector<double>> region_sums(std::span<const float> scores, int width, int height, int channels,
                                             std::span<const VisibilityMask> masks);
void gaussian_blur(FloatPlane& plane, double sigma);
}  // namespace serial

namespace omp {
std::vector<MeshRaster> rasterize_all(const CharacterModel& model);
RGBAImage composite(int width, int height, std::span<const MeshRaster> rasters, std::span<const std::size_t> order);
std::vector<VisibilityMask> visibility(int width, int height, std::span<const MeshRaster> rasters,
                                       std::span<const std::size_t> order, double tau);
Plane<std::int32_t> topmost(int width, int height, std::span<const MeshRaster> rasters,
                            std::span<const std::size_t> order);
std::vector<std::vector<double>> region_sums(std::span<const float> scores, int width, int height, int channels,
                                             std::span<const VisibilityMask> masks);
void gaussian_blur(FloatPlane& plane, double sigma);
}  // namespace omp

std::vector<float> gaussian_kernel(double sigma);

}  // namespace lcm::kernels
