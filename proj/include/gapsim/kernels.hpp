#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace gapsim {

enum class DecayClass { SuperPoly, Poly };

// Stationary covariance K(x) = amplitude * base(x / length), where base is
// one of the built-in families. Immutable value type.
class Kernel {
public:
  enum class Family { Gaussian, Cauchy };

  // K(x) = exp(-x^2 / 2).
  static Kernel gaussian();
  // K(x) = (1 + x^2)^(-alpha / 2), alpha in (0, 2), alpha != 1.
  static Kernel cauchy(double alpha);

  // c * K
  Kernel scaled(double amplitude) const;
  // K(x / len)
  Kernel dilated(double length) const;

  double eval(double x) const;
  double eval_d1(double x) const;
  double eval_d2(double x) const;

  double variance() const noexcept { return amplitude_; }
  // Second spectral moment -K''(0).
  double lambda2() const noexcept;

  Family family() const noexcept { return family_; }
  DecayClass decay_class() const noexcept;
  // Polynomial decay exponent; only meaningful for DecayClass::Poly.
  double alpha() const noexcept { return alpha_; }
  double amplitude() const noexcept { return amplitude_; }
  double length() const noexcept { return length_; }

  // Canonical string form, parseable by parse_kernel.
  std::string spec() const;

  // sup_{x >= s} |K(x)|
  double envelope(double s) const;

private:
  Kernel(Family family, double alpha, double amplitude, double length)
      : family_(family), alpha_(alpha), amplitude_(amplitude), length_(length) {}

  Family family_;
  double alpha_;
  double amplitude_;
  double length_;
};

// "gaussian", "cauchy:alpha=0.5", optional ",scale=c" and ",len=l" modifiers
// (also accepted after ':' for kernels without parameters).
Kernel parse_kernel(std::string_view spec);

// Expected number of zeros per unit length, (1/pi) sqrt(-K''(0) / K(0)).
double rice_intensity(const Kernel& kernel);

// Closed-form constant of theta(r) ~ zeta r^alpha log r for alpha in (0,1)
// (sine form). Empty when no closed form exists (super-polynomial decay or
// alpha > 1). Throws ConfigError for alpha == 1.
std::optional<double> zeta_predicted(const Kernel& kernel);

// The alternative Gamma-function expression for the same constant. It does not
// agree with the sine form; kept for reporting only.
std::optional<double> zeta_gamma_form(const Kernel& kernel);

}  // namespace gapsim
