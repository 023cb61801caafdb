#pragma once

#include <cmath>
#include <variant>

namespace maxrisk {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
};

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  double det() const { return xx * yy - xy * xy; }
  /// Eigenvalues in ascending order.
  std::pair<double, double> eigenvalues() const;
  Sym2 inverse() const;
  /// x' M x
  double quad(Vec2 v) const {
    return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y;
  }
  friend bool operator==(const Sym2&, const Sym2&) = default;
};

/// Variogram gamma_W of the Gaussian field W driving a Brown-Resnick field.
/// Values are validated at construction and immutable afterwards.
class Variogram {
 public:
  /// (|x| / kappa)^psi
  struct Power {
    double kappa;
    double psi;
    friend bool operator==(const Power&, const Power&) = default;
  };
  /// m |x|^psi
  struct PowerM {
    double m;
    double psi;
    friend bool operator==(const PowerM&, const PowerM&) = default;
  };
  /// x' Sigma^{-1} x (Smith field with storm covariance Sigma)
  struct QuadraticForm {
    Sym2 sigma;
    friend bool operator==(const QuadraticForm&,
                           const QuadraticForm&) = default;
  };
  /// m (x' Sigma^{-1} x)^{psi/2}
  struct AnisotropicPower {
    double m;
    Sym2 sigma;
    double psi;
    friend bool operator==(const AnisotropicPower&,
                           const AnisotropicPower&) = default;
  };
  using Kind = std::variant<Power, PowerM, QuadraticForm, AnisotropicPower>;

  static Variogram power(double kappa, double psi);
  static Variogram power_m(double m, double psi);
  static Variogram quadratic_form(Sym2 sigma);
  static Variogram anisotropic_power(double m, Sym2 sigma, double psi);

  double eval(Vec2 x) const;
  /// gamma_{W,u}(h) for isotropic variograms; UnsupportedError otherwise.
  double eval_radial(double h) const;
  bool is_isotropic() const;
  /// Homogeneity exponent psi: gamma(c x) = c^psi gamma(x).
  double exponent() const;
  /// Distance h with eval_radial(h) = g (isotropic only).
  double radial_inverse(double g) const;

  const Kind& kind() const { return kind_; }
  friend bool operator==(const Variogram&, const Variogram&) = default;

 private:
  explicit Variogram(Kind k);
  Kind kind_;
  Sym2 sigma_inv_{};  // cached for the quadratic kinds
};

}  // namespace maxrisk
