#include "hslift/catalog.hpp"

#include <cmath>
#include <numbers>

#include "hslift/errors.hpp"

namespace hslift::catalog {

namespace {
const double kSqrtPi = std::sqrt(std::numbers::pi);
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);
}  // namespace

double psi1(double t) { return std::exp(-t * t) * (1.5 / kSqrtPi - t * t / kSqrtPi); }

double psi2(double t) {
  return std::exp(-0.5 * t * t) * (1.5 / kSqrt2Pi - t * t / (2.0 * kSqrt2Pi));
}

double psi2_printed(double t) {
  return std::exp(-0.5 * t * t) * (1.5 / kSqrt2Pi - t * t / kSqrt2Pi);
}

double gaussian_density(double t, double variance) {
  return std::exp(-0.5 * t * t / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

ScalarField named_function(const std::string& spec) {
  auto scalar = [](double (*fn)(double)) {
    return ScalarField([fn](std::span<const double> x) { return fn(x[0]); });
  };
  if (spec == "psi1") return scalar(psi1);
  if (spec == "psi2") return scalar(psi2);
  if (spec == "psi2_printed") return scalar(psi2_printed);
  if (spec.rfind("gaussian(", 0) == 0 && spec.back() == ')') {
    const double v = std::stod(spec.substr(9, spec.size() - 10));
    if (!(v > 0.0)) throw ConfigError("gaussian variance must be positive");
    return [v](std::span<const double> x) { return gaussian_density(x[0], v); };
  }
  throw ConfigError("unknown function '" + spec + "'");
}

}  // namespace hslift::catalog
