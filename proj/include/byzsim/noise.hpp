#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "byzsim/errors.hpp"
#include "byzsim/rng.hpp"

namespace byzsim {

enum class NoiseKind { Gaussian, RademacherScaled, PowerLaw, TwoPoint };

// Scalar noise law used for stochastic-gradient perturbations. Every kind
// exposes its exact population mean so samples can be centered to keep
// gradients unbiased.
struct NoiseDistribution {
  NoiseKind kind = NoiseKind::Gaussian;
  double sigma = 1.0;   // gaussian
  double scale = 1.0;   // rademacher-scaled
  double v0 = 1.0;      // two-point values
  double v1 = -1.0;
  double p0 = 0.5;      // probability of v0

  static NoiseDistribution gaussian(double sigma) {
    if (sigma < 0.0) throw ConfigError("noise.sigma must be >= 0");
    NoiseDistribution d;
    d.kind = NoiseKind::Gaussian;
    d.sigma = sigma;
    return d;
  }

  static NoiseDistribution rademacher(double scale) {
    NoiseDistribution d;
    d.kind = NoiseKind::RademacherScaled;
    d.scale = scale;
    return d;
  }

  // Density 3 x^-4 on x >= 1: mean 1.5, variance 0.75, median 2^(1/3).
  static NoiseDistribution power_law() {
    NoiseDistribution d;
    d.kind = NoiseKind::PowerLaw;
    return d;
  }

  static NoiseDistribution two_point(double v0, double v1, double p0) {
    if (p0 < 0.0 || p0 > 1.0) throw ConfigError("noise.prob must be in [0, 1]");
    NoiseDistribution d;
    d.kind = NoiseKind::TwoPoint;
    d.v0 = v0;
    d.v1 = v1;
    d.p0 = p0;
    return d;
  }

  double population_mean() const {
    switch (kind) {
      case NoiseKind::Gaussian: return 0.0;
      case NoiseKind::RademacherScaled: return 0.0;
      case NoiseKind::PowerLaw: return 1.5;
      case NoiseKind::TwoPoint: return p0 * v0 + (1.0 - p0) * v1;
    }
    throw ConfigError("unknown noise distribution kind");
  }

  double population_variance() const {
    switch (kind) {
      case NoiseKind::Gaussian: return sigma * sigma;
      case NoiseKind::RademacherScaled: return scale * scale;
      case NoiseKind::PowerLaw: return 0.75;
      case NoiseKind::TwoPoint: {
        const double d = v0 - v1;
        return p0 * (1.0 - p0) * d * d;
      }
    }
    throw ConfigError("unknown noise distribution kind");
  }

  double sample_one(RngStream& stream) const {
    switch (kind) {
      case NoiseKind::Gaussian:
        return sigma * stream.gaussian();
      case NoiseKind::RademacherScaled:
        return stream.uniform() < 0.5 ? -scale : scale;
      case NoiseKind::PowerLaw:
        // Inverse CDF of F(x) = 1 - x^-3: x = (1 - u)^(-1/3).
        return std::pow(1.0 - stream.uniform(), -1.0 / 3.0);
      case NoiseKind::TwoPoint:
        return stream.uniform() < p0 ? v0 : v1;
    }
    throw ConfigError("unknown noise distribution kind");
  }
};

inline std::vector<double> sample(const NoiseDistribution& dist,
                                  RngStream& stream, int count) {
  if (count < 1) throw UsageError("sample count must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (double& x : out) x = dist.sample_one(stream);
  return out;
}

}  // namespace byzsim
