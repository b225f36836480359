#include "gapsim/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "gapsim/error.hpp"

namespace gapsim {

namespace {

void require_finite(double x) {
  if (!std::isfinite(x)) throw NumericalError("kernel evaluated at non-finite argument");
}

double parse_number(std::string_view text, std::string_view key) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ConfigError("kernel parameter '" + std::string(key) + "' is not a number: '" +
                      std::string(text) + "'");
  }
  return value;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Kernel Kernel::gaussian() { return Kernel(Family::Gaussian, 0.0, 1.0, 1.0); }

Kernel Kernel::cauchy(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("cauchy kernel needs alpha in (0, 2)");
  if (alpha == 1.0) throw ConfigError("cauchy kernel with alpha = 1 is not supported");
  return Kernel(Family::Cauchy, alpha, 1.0, 1.0);
}

Kernel Kernel::scaled(double amplitude) const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw ConfigError("kernel scale must be positive and finite");
  return Kernel(family_, alpha_, amplitude_ * amplitude, length_);
}

Kernel Kernel::dilated(double length) const {
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("kernel length must be positive and finite");
  return Kernel(family_, alpha_, amplitude_, length_ * length);
}

double Kernel::eval(double x) const {
  require_finite(x);
  const double t = x / length_;
  switch (family_) {
    case Family::Gaussian:
      return amplitude_ * std::exp(-0.5 * t * t);
    case Family::Cauchy:
      return amplitude_ * std::pow(1.0 + t * t, -0.5 * alpha_);
  }
  return 0.0;
}

double Kernel::eval_d1(double x) const {
  require_finite(x);
  const double t = x / length_;
  const double c = amplitude_ / length_;
  switch (family_) {
    case Family::Gaussian:
      return -c * t * std::exp(-0.5 * t * t);
    case Family::Cauchy:
      return -c * alpha_ * t * std::pow(1.0 + t * t, -0.5 * alpha_ - 1.0);
  }
  return 0.0;
}

double Kernel::eval_d2(double x) const {
  require_finite(x);
  const double t = x / length_;
  const double c = amplitude_ / (length_ * length_);
  switch (family_) {
    case Family::Gaussian:
      return c * (t * t - 1.0) * std::exp(-0.5 * t * t);
    case Family::Cauchy: {
      const double u = 1.0 + t * t;
      return c * alpha_ * std::pow(u, -0.5 * alpha_ - 2.0) * ((alpha_ + 1.0) * t * t - 1.0);
    }
  }
  return 0.0;
}

double Kernel::lambda2() const noexcept {
  const double base = family_ == Family::Gaussian ? 1.0 : alpha_;
  return amplitude_ * base / (length_ * length_);
}

DecayClass Kernel::decay_class() const noexcept {
  return family_ == Family::Gaussian ? DecayClass::SuperPoly : DecayClass::Poly;
}

std::string Kernel::spec() const {
  std::string out = family_ == Family::Gaussian ? "gaussian" : "cauchy:alpha=" + format_number(alpha_);
  const char* sep = family_ == Family::Gaussian ? ":" : ",";
  if (amplitude_ != 1.0) {
    out += sep + std::string("scale=") + format_number(amplitude_);
    sep = ",";
  }
  if (length_ != 1.0) out += sep + std::string("len=") + format_number(length_);
  return out;
}

double Kernel::envelope(double s) const {
  require_finite(s);
  // Both families are positive and decreasing in |x|.
  return std::abs(eval(std::max(s, 0.0)));
}

Kernel parse_kernel(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  std::vector<std::pair<std::string_view, std::string_view>> params;
  if (colon != std::string_view::npos) {
    std::string_view rest = spec.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("malformed kernel parameter '" + std::string(item) + "' in '" +
                          std::string(spec) + "'");
      params.emplace_back(item.substr(0, eq), item.substr(eq + 1));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }

  std::optional<double> alpha, scale, len;
  for (auto [key, value] : params) {
    if (key == "alpha") alpha = parse_number(value, key);
    else if (key == "scale") scale = parse_number(value, key);
    else if (key == "len") len = parse_number(value, key);
    else throw ConfigError("unknown kernel parameter '" + std::string(key) + "'");
  }

  Kernel kernel = Kernel::gaussian();
  if (name == "gaussian") {
    if (alpha) throw ConfigError("gaussian kernel takes no alpha");
  } else if (name == "cauchy") {
    if (!alpha) throw ConfigError("cauchy kernel requires alpha, e.g. 'cauchy:alpha=0.5'");
    kernel = Kernel::cauchy(*alpha);
  } else {
    throw ConfigError("unknown kernel '" + std::string(name) + "'");
  }
  if (scale) kernel = kernel.scaled(*scale);
  if (len) kernel = kernel.dilated(*len);
  return kernel;
}

double rice_intensity(const Kernel& kernel) {
  return std::sqrt(kernel.lambda2() / kernel.variance()) / std::numbers::pi;
}

std::optional<double> zeta_predicted(const Kernel& kernel) {
  if (kernel.decay_class() != DecayClass::Poly) return std::nullopt;
  const double a = kernel.alpha();
  if (a == 1.0) throw ConfigError("zeta is not available for alpha = 1");
  if (a > 1.0) return std::nullopt;
  return 2.0 * kernel.variance() * (1.0 - a) * std::sin(a * std::numbers::pi / 2.0) /
         (std::sqrt(std::numbers::pi) * a);
}

std::optional<double> zeta_gamma_form(const Kernel& kernel) {
  if (kernel.decay_class() != DecayClass::Poly) return std::nullopt;
  const double a = kernel.alpha();
  if (a >= 1.0) return std::nullopt;
  return kernel.variance() * std::sqrt(std::numbers::pi) * (1.0 - a) /
         (std::tgamma((1.0 - a) / 2.0) * std::tgamma(1.0 + a / 2.0));
}

}  // namespace gapsim
