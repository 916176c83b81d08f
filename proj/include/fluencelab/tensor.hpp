#pragma once

// Per-fiber PA image stacks and model fluence stacks over an image-plane
// pixel grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluencelab/errors.hpp"
#include "fluencelab/geometry_media.hpp"

namespace fluencelab {

/// Pixel grid in the image plane y = 0, row-major in (z, x).
struct PixelGrid {
  double x0 = -6.25;  // mm, first column center
  double dx = 0.25;
  std::size_t nx = 51;
  double z0 = 0.25;  // mm, first row center
  double dz = 0.25;
  std::size_t nz = 100;

  std::size_t size() const { return nx * nz; }
  std::size_t index(std::size_t ix, std::size_t iz) const { return iz * nx + ix; }
  Vec3 coord(std::size_t i) const {
    return {x0 + static_cast<double>(i % nx) * dx, 0.0, z0 + static_cast<double>(i / nx) * dz};
  }

  bool contains(double x, double z) const {
    return x >= x0 - 0.5 * dx && x <= x0 + (nx - 0.5) * dx && z >= z0 - 0.5 * dz && z <= z0 + (nz - 0.5) * dz;
  }

  // Column and row of the pixel nearest to (x, z); caller checks contains().
  std::pair<std::size_t, std::size_t> nearest(double x, double z) const {
    const auto clampi = [](double v, std::size_t n) {
      const long i = std::lround(v);
      return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
    };
    return {clampi((x - x0) / dx, nx), clampi((z - z0) / dz, nz)};
  }

  void validate() const {
    if (nx == 0 || nz == 0) throw ConfigError("pixel grid: empty");
    if (!(dx > 0.0) || !(dz > 0.0)) throw ConfigError("pixel grid: spacing must be positive");
  }

  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;
};

/// Enveloped PA magnitudes y[frame][fiber][pixel].
struct MeasurementTensor {
  std::vector<double> wavelengths_nm;  // one per frame
  std::optional<std::size_t> control_index;
  std::size_t fibers = ProbeGeometry::kFiberCount;
  PixelGrid grid;
  std::vector<double> values;

  std::size_t frames() const { return wavelengths_nm.size(); }
  std::size_t pixels() const { return grid.size(); }
  std::size_t offset(std::size_t j, std::size_t k, std::size_t i) const { return (j * fibers + k) * pixels() + i; }
  double at(std::size_t j, std::size_t k, std::size_t i) const { return values[offset(j, k, i)]; }
  double& at(std::size_t j, std::size_t k, std::size_t i) { return values[offset(j, k, i)]; }

  static MeasurementTensor zeros(std::vector<double> wavelengths, std::optional<std::size_t> control, std::size_t fibers,
                                 PixelGrid grid) {
    MeasurementTensor t{std::move(wavelengths), control, fibers, grid, {}};
    t.values.assign(t.frames() * fibers * grid.size(), 0.0);
    return t;
  }

  void validate() const {
    grid.validate();
    if (values.size() != frames() * fibers * pixels()) {
      throw ConfigError("tensor: value count " + std::to_string(values.size()) + " does not match " +
                        std::to_string(frames()) + " x " + std::to_string(fibers) + " x " + std::to_string(pixels()));
    }
    if (control_index && *control_index >= frames()) throw ConfigError("tensor: control index out of range");
    for (double v : values) {
      if (!std::isfinite(v)) throw ConfigError("tensor: non-finite value");
    }
  }
};

/// Fluence values [wavelength][fiber][pixel] over an explicit pixel list.
struct FluenceStack {
  std::size_t wavelengths = 0;
  std::size_t fibers = 0;
  std::size_t pixels = 0;
  std::vector<double> values;

  FluenceStack() = default;
  FluenceStack(std::size_t j, std::size_t k, std::size_t n) : wavelengths(j), fibers(k), pixels(n), values(j * k * n) {}

  double at(std::size_t j, std::size_t k, std::size_t i) const { return values[(j * fibers + k) * pixels + i]; }
  double& at(std::size_t j, std::size_t k, std::size_t i) { return values[(j * fibers + k) * pixels + i]; }
};

}  // namespace fluencelab
