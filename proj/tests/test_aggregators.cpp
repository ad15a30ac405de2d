#include <catch2/catch_amalgamated.hpp>

#include "byzsim/aggregators.hpp"
#include "byzsim/noise.hpp"
#include "byzsim/problems.hpp"
#include "byzsim/rng.hpp"
#include "oracles.hpp"

using namespace byzsim;

namespace {

std::vector<Vector> random_inputs(RngStream& stream, int n, int d,
                                  double scale = 2.0) {
  std::vector<Vector> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) {
    x.resize(static_cast<std::size_t>(d));
    for (double& v : x) v = scale * stream.gaussian();
  }
  return xs;
}

std::vector<Vector> shuffled(std::vector<Vector> xs, RngStream& stream) {
  for (std::size_t i = xs.size(); i > 1; --i)
    std::swap(xs[i - 1], xs[static_cast<std::size_t>(stream.uniform() * i)]);
  return xs;
}

Vector run_rule(AggregatorRule rule, const std::vector<Vector>& xs) {
  AggregatorSpec spec;
  spec.rule = rule;
  spec.trim_count = 1;
  spec.krum_byzantine = 1;
  spec.warm_start = false;
  AggregatorState state;
  return aggregate(spec, state, xs);
}

}  // namespace

TEST_CASE("aggregate dispatch and state") {
  AggregatorSpec spec;
  AggregatorState state;
  CHECK(aggregate(spec, state, {{1}, {3}}) == Vector{2});
  CHECK(state.previous == Vector{2});
  CHECK_THROWS_AS(aggregate(spec, state, {}), UsageError);
}

TEST_CASE("every rule recovers n identical inputs") {
  // Dyadic values keep the arithmetic rules exact too.
  const Vector v{0.5, -3.25, 8.0};
  const std::vector<Vector> xs(6, v);
  for (auto rule : {AggregatorRule::Mean, AggregatorRule::CoordinateMedian,
                    AggregatorRule::TrimmedMean, AggregatorRule::Rfa,
                    AggregatorRule::Krum, AggregatorRule::CenteredClip}) {
    CHECK(run_rule(rule, xs) == v);
  }
}

TEST_CASE("coordinate median") {
  CHECK(coordinate_median({{1}, {2}, {100}}) == Vector{2});
  CHECK(coordinate_median({{1, 5}, {2, 6}, {3, 4}}) == Vector{2, 5});
  // Even count: lower-middle order statistic.
  CHECK(coordinate_median({{1}, {2}, {3}, {4}}) == Vector{2});

  RngStream stream(5, 0, 0);
  std::vector<Vector> draws;
  for (int i = 0; i < 100000; ++i)
    draws.push_back({NoiseDistribution::power_law().sample_one(stream)});
  CHECK(coordinate_median(draws)[0] ==
        Catch::Approx(std::pow(2.0, 1.0 / 3.0)).margin(0.01));
}

TEST_CASE("trimmed mean") {
  CHECK(trimmed_mean({{0}, {1}, {2}, {3}, {100}}, 1) == Vector{2});
  CHECK(trimmed_mean({{-1e6}, {1}, {2}, {3}, {1e6}}, 1) == Vector{2});
  const std::vector<Vector> xs{{1, 4}, {2, -1}, {5, 0}};
  CHECK(trimmed_mean(xs, 0) == mean_of(xs));
  CHECK_THROWS_AS(trimmed_mean({{1}, {2}}, 1), ConfigError);
  CHECK_THROWS_AS(trimmed_mean({{1}, {2}, {3}}, -1), ConfigError);
}

TEST_CASE("rfa: 1-d geometric median is the middle point") {
  const Vector out = rfa({{0}, {1}, {10}}, 3, 1e-6);
  CHECK(std::abs(out[0] - 1.0) < 0.5);
  CHECK_THROWS_AS(rfa({{1}}, 0, 1e-6), ConfigError);
  CHECK_THROWS_AS(rfa({{1}}, 3, 0.0), ConfigError);
}

TEST_CASE("rfa: converges to the Fermat point") {
  const std::vector<Vector> pts{{0, 0}, {2, 0}, {1, 1}};
  const Vector expected = oracles::fermat_point(pts);
  const Vector out = rfa(pts, 400, 1e-9);
  CHECK(std::hypot(out[0] - expected[0], out[1] - expected[1]) < 1e-3);
}

TEST_CASE("krum") {
  // Three-way score tie between 0, 0.1 and 0.2 (each has a nearest neighbor
  // at distance 0.1); the lexicographic tie-break picks the smallest vector.
  const std::vector<Vector> xs{{0}, {0.1}, {0.2}, {100}};
  const Vector out = krum(xs, 1);
  CHECK(out != Vector{100});
  CHECK(out == oracles::krum(xs, 1));
  CHECK(out == Vector{0});

  RngStream stream(21, 0, 0);
  const auto draws = rademacher_stream(25, stream);
  std::vector<Vector> rad;
  for (double v : draws) rad.push_back({v});
  const Vector pick = krum(rad, 25 / 5);
  CHECK((pick == Vector{1} || pick == Vector{-1}));

  CHECK_THROWS_AS(krum({{1}, {2}, {3}}, 1), ConfigError);
}

TEST_CASE("centered clip") {
  CHECK(centered_clip({{0}, {0}, {0}, {10}}, 1.0, 1, {0}) == Vector{0.25});

  // tau at least the largest offset: one step equals the mean.
  const std::vector<Vector> xs{{1, 2}, {3, -1}, {0, 0.5}};
  const Vector m = mean_of(xs);
  const Vector out = centered_clip(xs, 100.0, 1, zeros(2));
  CHECK(out[0] == Catch::Approx(m[0]).margin(1e-12));
  CHECK(out[1] == Catch::Approx(m[1]).margin(1e-12));

  // All inputs equal and tau >= |v0 - v*|: exactly v* after one step.
  CHECK(centered_clip({{0.5}, {0.5}, {0.5}, {0.5}}, 1.0, 1, {0.25}) ==
        Vector{0.5});

  CHECK_THROWS_AS(centered_clip({{1}}, 0.0, 1, {0}), ConfigError);
  CHECK_THROWS_AS(centered_clip({{1}}, 1.0, 0, {0}), ConfigError);
}

TEST_CASE("centered clip warm start uses the previous aggregate") {
  AggregatorSpec spec;
  spec.rule = AggregatorRule::CenteredClip;
  spec.clip_radius = 0.5;
  spec.clip_iterations = 1;
  spec.warm_start = true;
  AggregatorState state;
  // Round 1 starts from zero, round 2 from round 1's output.
  const Vector r1 = aggregate(spec, state, {{4}, {4}});
  CHECK(r1 == Vector{0.5});
  const Vector r2 = aggregate(spec, state, {{4}, {4}});
  CHECK(r2 == Vector{1.0});
}

TEST_CASE("adaptive clip radius") {
  CHECK(std::isinf(adaptive_clip_radius(1.0, 1.0, 0.0).tau));
  const auto degenerate = adaptive_clip_radius(0.0, 0.0, 0.1);
  CHECK(degenerate.degenerate);
  CHECK(degenerate.tau > 0.0);
  const auto r = adaptive_clip_radius(1.0, 1.0, 0.1);
  CHECK(r.tau * r.tau ==
        Catch::Approx(4.0 * 0.9 * (4.0 + 4.0 / 3.0) / (std::sqrt(3.0) * 0.1))
            .epsilon(1e-12));
  CHECK(r.tau * r.tau == Catch::Approx(110.85).margin(0.01));
  CHECK_FALSE(r.degenerate);
  CHECK_THROWS_AS(adaptive_clip_radius(-1.0, 0.0, 0.1), ConfigError);
  CHECK_THROWS_AS(adaptive_clip_radius(1.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("permutation invariance within a round") {
  RngStream stream(31, 0, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(stream.uniform() * 6);
    const int d = 1 + static_cast<int>(stream.uniform() * 3);
    const auto xs = random_inputs(stream, n, d);
    const auto ys = shuffled(xs, stream);

    // Selection-based rules are bit-identical under permutation.
    CHECK(coordinate_median(xs) == coordinate_median(ys));
    CHECK(trimmed_mean(xs, 1) == trimmed_mean(ys, 1));
    if (n >= 4) CHECK(krum(xs, 1) == krum(ys, 1));

    // Arithmetic rules are invariant up to floating-point reassociation.
    const Vector m1 = mean_of(xs), m2 = mean_of(ys);
    const Vector r1 = rfa(xs, 3, 1e-6), r2 = rfa(ys, 3, 1e-6);
    const Vector c1 = centered_clip(xs, 1.5, 2, zeros(d));
    const Vector c2 = centered_clip(ys, 1.5, 2, zeros(d));
    for (int j = 0; j < d; ++j) {
      CHECK(m1[j] == Catch::Approx(m2[j]).margin(1e-12));
      CHECK(r1[j] == Catch::Approx(r2[j]).margin(1e-12));
      CHECK(c1[j] == Catch::Approx(c2[j]).margin(1e-12));
    }
  }
}

TEST_CASE("translation equivariance") {
  RngStream stream(37, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    const int d = 2;
    const auto xs = random_inputs(stream, n, d);
    Vector c{stream.gaussian(), stream.gaussian()};
    std::vector<Vector> moved = xs;
    for (auto& x : moved) add_in_place(x, c);

    const auto check_shift = [&](const Vector& base, const Vector& shifted) {
      for (int j = 0; j < d; ++j)
        CHECK(shifted[j] == Catch::Approx(base[j] + c[j]).margin(1e-9));
    };
    check_shift(mean_of(xs), mean_of(moved));
    check_shift(coordinate_median(xs), coordinate_median(moved));
    check_shift(trimmed_mean(xs, 1), trimmed_mean(moved, 1));
    check_shift(rfa(xs, 5, 1e-6), rfa(moved, 5, 1e-6));
    check_shift(krum(xs, 1), krum(moved, 1));
    Vector v0{stream.gaussian(), stream.gaussian()};
    Vector v0_moved = v0;
    add_in_place(v0_moved, c);
    check_shift(centered_clip(xs, 2.0, 2, v0),
                centered_clip(moved, 2.0, 2, v0_moved));
  }
}

TEST_CASE("centered clip contracts onto the good mean") {
  // Good points i.i.d. gaussian with pairwise second moment rho^2, delta n
  // adversaries at distance 10 rho, started far away. The error must be
  // non-increasing in l and end far below the c delta rho^2 guarantee.
  const double rho_sq = 2.0;
  const double rho = std::sqrt(rho_sq);
  const double delta = 0.1;
  const int n = 100, nb = 10, d = 5, trials = 200, max_iter = 6;
  const double tau = adaptive_clip_radius(rho_sq, rho_sq, delta).tau;
  const double coord_sigma = std::sqrt(rho_sq / 2.0 / d);

  std::vector<double> err(max_iter + 1, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    RngStream stream(101, 0, static_cast<std::uint64_t>(trial));
    std::vector<Vector> pts;
    Vector xbar = zeros(d);
    for (int i = 0; i < n - nb; ++i) {
      Vector x(d);
      for (double& v : x) v = coord_sigma * stream.gaussian();
      add_in_place(xbar, x);
      pts.push_back(std::move(x));
    }
    for (double& v : xbar) v /= (n - nb);
    Vector bad = zeros(d);
    bad[0] = 10.0 * rho;
    for (int i = 0; i < nb; ++i) pts.push_back(bad);

    Vector v0 = xbar;
    v0[0] += 20.0 * rho;  // deliberately poor start
    err[0] += squared_distance(v0, xbar) / trials;
    Vector v = v0;
    for (int l = 1; l <= max_iter; ++l) {
      v = centered_clip(pts, tau, 1, std::move(v));
      err[l] += squared_distance(v, xbar) / trials;
    }
  }
  for (int l = 1; l <= max_iter; ++l) CHECK(err[l] <= err[l - 1] * 1.05);
  CHECK(err[max_iter] <= 4000.0 * delta * rho_sq * 0.05);
}

TEST_CASE("krum and trimmed mean match exhaustive oracles") {
  RngStream stream(41, 0, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 4 + static_cast<int>(stream.uniform() * 3);  // 4..6
    const int d = 1 + static_cast<int>(stream.uniform() * 2);  // 1..2
    const auto xs = random_inputs(stream, n, d);
    const int f = n >= 5 ? 1 + static_cast<int>(stream.uniform() * 2) : 1;
    if (n - f - 2 >= 1) REQUIRE(krum(xs, f) == oracles::krum(xs, f));
    const int b = static_cast<int>(stream.uniform() * ((n - 1) / 2 + 1));
    REQUIRE(trimmed_mean(xs, b) == oracles::trimmed_mean(xs, b));
  }
}
