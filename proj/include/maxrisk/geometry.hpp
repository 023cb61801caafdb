#pragma once

// Regions of the loss integral and the law of the distance between two
// independent uniform points in them.

#include "maxrisk/variogram.hpp"

namespace maxrisk {

enum class Shape { disk, square };

/// Disk of radius R or square of side R, dilated by lambda about its
/// barycenter. Translation never matters for the analytic results.
struct Region {
  Shape shape = Shape::disk;
  double R = 1.0;
  double lambda = 1.0;

  static Region disk(double R, double lambda = 1.0);
  static Region square(double R, double lambda = 1.0);

  void validate() const;
  /// Same shape with the dilation multiplied by s.
  Region scaled(double s) const;
  /// Largest distance between two points of the (dilated) region.
  double diameter() const;
  /// Whether x lies in the dilated region centred at center.
  bool contains(Vec2 x, Vec2 center = {}) const;

  friend bool operator==(const Region&, const Region&) = default;
};

double area(const Region& r);

/// Density of |X - Y| for X, Y uniform on a disk of radius R.
double disk_distance_density(double h, double R);

/// Density of |X - Y| for X, Y uniform on a square of side R.
double square_distance_density(double h, double R);

/// Distance density of the undilated region (R only, lambda ignored).
double distance_density(const Region& r, double h);

}  // namespace maxrisk
