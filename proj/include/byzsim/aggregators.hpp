#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "byzsim/errors.hpp"
#include "byzsim/vector_ops.hpp"

namespace byzsim {

enum class AggregatorRule {
  Mean,
  CoordinateMedian,
  TrimmedMean,
  Rfa,
  Krum,
  CenteredClip,
};

struct AggregatorSpec {
  AggregatorRule rule = AggregatorRule::Mean;
  int trim_count = 0;                 // trimmed-mean b (per side)
  int weiszfeld_iterations = 3;       // rfa inner iterations
  double weiszfeld_smoothing = 1e-6;  // rfa denominator floor
  int krum_byzantine = 0;             // krum assumed Byzantine count f
  double clip_radius = 100.0;         // centered-clip tau
  int clip_iterations = 1;            // centered-clip l
  bool warm_start = true;             // centered-clip: start from previous aggregate
};

// Carried across rounds: after round t, `previous` holds that round's output.
struct AggregatorState {
  std::optional<Vector> previous;
};

namespace detail {

inline void check_inputs(const std::vector<Vector>& inputs) {
  if (inputs.empty()) throw UsageError("aggregate: empty input list");
  const std::size_t d = inputs.front().size();
  for (const Vector& v : inputs) {
    if (v.size() != d) throw UsageError("aggregate: ragged input dimensions");
  }
}

}  // namespace detail

// Per-coordinate median. Even input counts take the lower-middle order
// statistic so the output stays an actual input value per coordinate.
inline Vector coordinate_median(const std::vector<Vector>& inputs) {
  detail::check_inputs(inputs);
  const std::size_t n = inputs.size();
  const std::size_t d = inputs.front().size();
  Vector out(d);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = inputs[i][j];
    const std::size_t mid = (n - 1) / 2;
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    out[j] = column[mid];
  }
  return out;
}

// Per coordinate: sort, drop the b smallest and b largest, average the rest.
inline Vector trimmed_mean(const std::vector<Vector>& inputs, int b) {
  detail::check_inputs(inputs);
  const int n = static_cast<int>(inputs.size());
  if (b < 0) throw ConfigError("trimmed-mean: trim count must be >= 0");
  if (2 * b >= n)
    throw ConfigError("trimmed-mean: need 2b < n, got b=" + std::to_string(b) +
                      " n=" + std::to_string(n));
  const std::size_t d = inputs.front().size();
  Vector out(d);
  std::vector<double> column(inputs.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < inputs.size(); ++i) column[i] = inputs[i][j];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (int i = b; i < n - b; ++i) s += column[i];
    out[j] = s / static_cast<double>(n - 2 * b);
  }
  return out;
}

// Smoothed Weiszfeld iterations for the geometric median, started from the
// arithmetic mean: v <- sum w_i x_i / sum w_i with w_i = 1/max(eps, |v - x_i|).
inline Vector rfa(const std::vector<Vector>& inputs, int iterations,
                  double smoothing) {
  detail::check_inputs(inputs);
  if (iterations < 1) throw ConfigError("rfa: iterations must be >= 1");
  if (!(smoothing > 0.0)) throw ConfigError("rfa: smoothing must be > 0");
  Vector v = mean_of(inputs);
  const std::size_t d = v.size();
  for (int it = 0; it < iterations; ++it) {
    Vector numer(d, 0.0);
    double denom = 0.0;
    for (const Vector& x : inputs) {
      const double w = 1.0 / std::max(smoothing, std::sqrt(squared_distance(v, x)));
      axpy(numer, w, x);
      denom += w;
    }
    for (std::size_t j = 0; j < d; ++j) v[j] = numer[j] / denom;
  }
  return v;
}

// Select the input whose summed squared distance to its n-f-2 nearest other
// inputs is smallest. Score ties go to the lexicographically smallest vector
// so the choice is permutation-invariant.
inline Vector krum(const std::vector<Vector>& inputs, int f) {
  detail::check_inputs(inputs);
  const int n = static_cast<int>(inputs.size());
  if (f < 0) throw ConfigError("krum: f must be >= 0");
  const int neighbors = n - f - 2;
  if (neighbors < 1)
    throw ConfigError("krum: need n - f - 2 >= 1, got n=" + std::to_string(n) +
                      " f=" + std::to_string(f));
  int best = -1;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> dists(inputs.size() - 1);
  for (int i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dists[k++] = squared_distance(inputs[i], inputs[j]);
    }
    std::sort(dists.begin(), dists.end());
    double score = 0.0;
    for (int m = 0; m < neighbors; ++m) score += dists[m];
    if (score < best_score ||
        (best >= 0 && score == best_score &&
         lexicographic_less(inputs[i], inputs[best]))) {
      best = i;
      best_score = score;
    }
  }
  return inputs[best];
}

// One or more iterations of centered clipping: clip every input's offset from
// the center v to radius tau, then move v by the average clipped offset.
inline Vector centered_clip(const std::vector<Vector>& inputs, double tau,
                            int iterations, Vector v0) {
  detail::check_inputs(inputs);
  if (!(tau > 0.0)) throw ConfigError("centered-clip: tau must be > 0");
  if (iterations < 1) throw ConfigError("centered-clip: iterations must be >= 1");
  if (v0.size() != inputs.front().size())
    throw UsageError("centered-clip: starting point dimension mismatch");
  const std::size_t n = inputs.size();
  const std::size_t d = v0.size();
  Vector v = std::move(v0);
  for (int it = 0; it < iterations; ++it) {
    Vector step(d, 0.0);
    for (const Vector& x : inputs) {
      const double dist = std::sqrt(squared_distance(x, v));
      const double clip = dist > tau ? tau / dist : 1.0;
      for (std::size_t j = 0; j < d; ++j) step[j] += (x[j] - v[j]) * clip;
    }
    for (std::size_t j = 0; j < d; ++j) v[j] += step[j] / static_cast<double>(n);
  }
  return v;
}

struct ClipRadius {
  double tau = 0.0;
  bool degenerate = false;  // all points identical (rho = B = 0)
};

// Theory-driven clipping radius tau^2 = 4(1-delta)(4 rho^2 + 4/3 B^2)/(sqrt(3) delta).
// delta = 0 returns +inf, meaning no clipping (plain averaging).
inline ClipRadius adaptive_clip_radius(double rho_sq, double b_sq, double delta) {
  if (rho_sq < 0.0 || b_sq < 0.0)
    throw ConfigError("adaptive_clip_radius: rho^2 and B^2 must be >= 0");
  if (delta < 0.0 || delta >= 1.0)
    throw ConfigError("adaptive_clip_radius: delta must be in [0, 1)");
  if (delta == 0.0)
    return {std::numeric_limits<double>::infinity(), false};
  if (rho_sq == 0.0 && b_sq == 0.0)
    return {std::numeric_limits<double>::min(), true};
  const double tau_sq =
      4.0 * (1.0 - delta) * (4.0 * rho_sq + (4.0 / 3.0) * b_sq) /
      (std::sqrt(3.0) * delta);
  return {std::sqrt(tau_sq), false};
}

// Dispatch over all rules. Updates state.previous to this round's output;
// only centered-clip reads it back (warm start).
inline Vector aggregate(const AggregatorSpec& spec, AggregatorState& state,
                        const std::vector<Vector>& inputs) {
  detail::check_inputs(inputs);
  Vector out;
  switch (spec.rule) {
    case AggregatorRule::Mean:
      out = mean_of(inputs);
      break;
    case AggregatorRule::CoordinateMedian:
      out = coordinate_median(inputs);
      break;
    case AggregatorRule::TrimmedMean:
      out = trimmed_mean(inputs, spec.trim_count);
      break;
    case AggregatorRule::Rfa:
      out = rfa(inputs, spec.weiszfeld_iterations, spec.weiszfeld_smoothing);
      break;
    case AggregatorRule::Krum:
      out = krum(inputs, spec.krum_byzantine);
      break;
    case AggregatorRule::CenteredClip: {
      Vector v0 = (spec.warm_start && state.previous.has_value())
                      ? *state.previous
                      : zeros(inputs.front().size());
      out = centered_clip(inputs, spec.clip_radius, spec.clip_iterations,
                          std::move(v0));
      break;
    }
  }
  state.previous = out;
  return out;
}

}  // namespace byzsim
