#include "maxrisk/geometry.hpp"

#include <cmath>
#include <numbers>

#include "maxrisk/error.hpp"

namespace maxrisk {

Region Region::disk(double R, double lambda) {
  Region r{Shape::disk, R, lambda};
  r.validate();
  return r;
}

Region Region::square(double R, double lambda) {
  Region r{Shape::square, R, lambda};
  r.validate();
  return r;
}

void Region::validate() const {
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("region: R must be > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("region: lambda must be > 0");
  }
}

Region Region::scaled(double s) const {
  Region r = *this;
  r.lambda *= s;
  r.validate();
  return r;
}

double Region::diameter() const {
  return shape == Shape::disk ? 2.0 * R * lambda
                              : std::numbers::sqrt2 * R * lambda;
}

bool Region::contains(Vec2 x, Vec2 center) const {
  const Vec2 d = x - center;
  if (shape == Shape::disk) return d.norm() <= R * lambda;
  const double half = 0.5 * R * lambda;
  return std::abs(d.x) <= half && std::abs(d.y) <= half;
}

double area(const Region& r) {
  r.validate();
  const double s = r.R * r.lambda;
  return r.shape == Shape::disk ? std::numbers::pi * s * s : s * s;
}

double disk_distance_density(double h, double R) {
  if (!(R > 0.0)) throw DomainError("disk density: R must be > 0");
  if (!(h >= 0.0)) throw DomainError("disk density: h must be >= 0");
  if (h >= 2.0 * R) return 0.0;
  const double u = h / (2.0 * R);
  return 4.0 * h / (std::numbers::pi * R * R) *
         (std::acos(u) - u * std::sqrt(1.0 - u * u));
}

double square_distance_density(double h, double R) {
  if (!(R > 0.0)) throw DomainError("square density: R must be > 0");
  if (!(h >= 0.0)) throw DomainError("square density: h must be >= 0");
  const double b = h * h / (R * R);
  if (b >= 2.0) return 0.0;
  const double pre = 2.0 * h / (R * R);
  if (b <= 1.0) return pre * (std::numbers::pi - 4.0 * std::sqrt(b) + b);
  // arcsec(sqrt b) written as arcsin(sqrt((b-1)/b)) so that nothing blows up
  // as b -> 1+.
  const double e = b - 1.0;
  return pre * (4.0 * std::sqrt(e) - b - 2.0 + std::numbers::pi -
                4.0 * std::asin(std::sqrt(e / b)));
}

double distance_density(const Region& r, double h) {
  return r.shape == Shape::disk ? disk_distance_density(h, r.R)
                                : square_distance_density(h, r.R);
}

}  // namespace maxrisk
