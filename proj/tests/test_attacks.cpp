#include <catch2/catch_amalgamated.hpp>

#include "byzsim/attacks.hpp"
#include "byzsim/problems.hpp"
#include "oracles.hpp"

using namespace byzsim;

namespace {

AttackResult run_attack(const AttackSpec& spec,
                        const std::vector<Vector>& honest, int round,
                        const Problem* problem = nullptr,
                        std::uint64_t seed = 7) {
  RngStream stream(seed, kAttackLane, static_cast<std::uint64_t>(round));
  Vector model = honest.front();
  AttackContext ctx{honest, round, &model, problem, &stream};
  return apply_attack(spec, ctx);
}

}  // namespace

TEST_CASE("alie z values") {
  CHECK(alie_z(25, 11) > 1.05);
  CHECK(alie_z(25, 11) < 1.07);
  CHECK(alie_z(10, 4) ==
        Catch::Approx(oracles::normal_quantile(2.0 / 3.0)).margin(1e-3));
  CHECK(alie_z(10, 4) == Catch::Approx(0.43072729929545756).margin(1e-6));
  CHECK_THROWS_AS(alie_z(2, 0), ConfigError);   // quantile argument hits 0
  CHECK_THROWS_AS(alie_z(10, 5), ConfigError);  // f must stay below n/2
}

TEST_CASE("alie messages") {
  // z = 0: byzantine messages equal the good empirical mean.
  CHECK(alie_message({{0}, {2}}, 0.0, -1.0) == Vector{1});
  // All good messages equal: std 0, message equals them for any z.
  CHECK(alie_message({{3, -1}, {3, -1}, {3, -1}}, 2.5, -1.0) == Vector{3, -1});
  // Hand computation: mu = 1, sample std = sqrt(2).
  CHECK(alie_message({{0}, {2}}, 1.0, -1.0)[0] ==
        Catch::Approx(1.0 - std::sqrt(2.0)).margin(1e-12));
  CHECK_THROWS_AS(alie_message({{1}}, 1.0, -1.0), ConfigError);
}

TEST_CASE("attack: none passes honest messages through") {
  AttackSpec spec;
  spec.kind = AttackKind::None;
  spec.byzantine = {2, 3};
  const std::vector<Vector> honest{{1}, {2}, {3}, {4}};
  const auto result = run_attack(spec, honest, 1);
  REQUIRE(result.messages.size() == 2);
  CHECK(result.messages[0] == std::make_pair(2, Vector{3}));
  CHECK(result.messages[1] == std::make_pair(3, Vector{4}));
  CHECK(result.active_count == 0);
}

TEST_CASE("attack: bit flip negates the worker's own honest update") {
  AttackSpec spec;
  spec.kind = AttackKind::BitFlip;
  spec.byzantine = {0};
  const auto result = run_attack(spec, {{1.5, -2}, {0, 0}}, 1);
  CHECK(result.messages[0].second == Vector{-1.5, 2});
  CHECK(result.active_count == 1);
}

TEST_CASE("attack: ipm sends -eps times the good mean") {
  AttackSpec spec;
  spec.kind = AttackKind::Ipm;
  spec.byzantine = {2};
  spec.ipm_epsilon = 0.1;
  const std::vector<Vector> honest{{1, 0}, {3, 2}, {99, 99}};
  const auto result = run_attack(spec, honest, 1);
  CHECK(result.messages[0].second[0] == Catch::Approx(-0.2).margin(1e-15));
  CHECK(result.messages[0].second[1] == Catch::Approx(-0.1).margin(1e-15));

  // The byzantine message anti-aligns with the good mean.
  const Vector good_mean{2, 1};
  CHECK(dot(result.messages[0].second, good_mean) < 0.0);
}

TEST_CASE("attack: alie containment at mean minus z std") {
  AttackSpec spec;
  spec.kind = AttackKind::Alie;
  spec.byzantine = {3};
  spec.alie_z = 1.0;
  const std::vector<Vector> honest{{0}, {2}, {4}, {77}};
  const auto result = run_attack(spec, honest, 1);
  const double mu = 2.0, sd = 2.0;  // sample std of {0,2,4}
  CHECK(result.messages[0].second[0] == Catch::Approx(mu - sd).margin(1e-12));
}

TEST_CASE("attack: gaussian noise scale and determinism") {
  AttackSpec spec;
  spec.kind = AttackKind::GaussianNoise;
  spec.byzantine = {1};
  const std::vector<Vector> honest{zeros(10), zeros(10)};

  spec.gaussian_sigma = 0.0;
  CHECK(run_attack(spec, honest, 1).messages[0].second == zeros(10));

  spec.gaussian_sigma = 1e8;
  const double expected_norm = 1e8 * std::sqrt(10.0);
  for (int round = 1; round <= 100; ++round) {
    const double n = norm(run_attack(spec, honest, round).messages[0].second);
    REQUIRE(n > expected_norm / 10.0);
    REQUIRE(n < expected_norm * 10.0);
  }
  CHECK(run_attack(spec, honest, 5).messages ==
        run_attack(spec, honest, 5).messages);
}

TEST_CASE("attack: indistinguishable shift") {
  auto problem = make_scalar_lower_bound(1.0, 1.0, 0.05);
  AttackSpec spec;
  spec.kind = AttackKind::IndistinguishableShift;
  spec.byzantine = {70, 80, 90};
  spec.shift_delta_tilde = 0.05;
  spec.shift_sigma = 1.0;
  std::vector<Vector> honest(100, Vector{2.0});

  // Per-round shifted count matches an independent binomial draw from the
  // same stream; shifted messages subtract sigma / sqrt(delta_tilde).
  const double shift = 1.0 / std::sqrt(0.05);
  for (int round = 1; round <= 300; ++round) {
    const auto result = run_attack(spec, honest, round, problem.get());
    RngStream oracle_stream(7, kAttackLane, static_cast<std::uint64_t>(round));
    const int c_t =
        oracles::binomial_inversion(oracle_stream.uniform(), 100, 0.05);
    const int k = std::min<int>(3, c_t);
    REQUIRE(result.active_count == k);
    for (int i = 0; i < 3; ++i) {
      const double expected = i < k ? 2.0 - shift : 2.0;
      REQUIRE(result.messages[i].second[0] == expected);
    }
  }

  // delta_tilde = 0: no worker ever shifts.
  spec.shift_delta_tilde = 0.0;
  for (int round = 1; round <= 50; ++round)
    REQUIRE(run_attack(spec, honest, round, problem.get()).active_count == 0);

  // sigma = 0: the shift vanishes.
  spec.shift_delta_tilde = 0.05;
  spec.shift_sigma = 0.0;
  const auto result = run_attack(spec, honest, 1, problem.get());
  CHECK(result.active_count == 0);
  for (const auto& [idx, msg] : result.messages) CHECK(msg == Vector{2.0});

  // Requires the scalar lower-bound problem.
  auto quad = make_quadratic(1, 1.0, 1.0, NoiseDistribution::gaussian(1.0));
  CHECK_THROWS_AS(run_attack(spec, honest, 1, quad.get()), ConfigError);
}

TEST_CASE("attack: shifted rounds stay rare enough to hide") {
  // With delta_tilde = delta/6 and n >= 4(1 + log T)/delta, rounds where the
  // shifted count exceeds delta n are rare; the proof only needs < 1/2.
  const int n = 150, rounds = 10000;
  const double delta = 0.3, delta_tilde = delta / 6.0;
  int exceed = 0;
  for (int t = 1; t <= rounds; ++t) {
    RngStream stream(3, kAttackLane, static_cast<std::uint64_t>(t));
    if (stream.binomial(n, delta_tilde) > static_cast<int>(delta * n)) ++exceed;
  }
  CHECK(static_cast<double>(exceed) / rounds < 0.5);
}

TEST_CASE("attack: label flip negates the gradient at the uniform predictor") {
  SoftmaxConfig cfg;
  cfg.classes = 2;
  cfg.feature_dim = 4;
  cfg.dataset_size = 64;
  cfg.gamma = 1.0;
  cfg.batch_size = 8;
  auto problem = make_imbalanced_softmax(cfg, 99);
  const Vector w0 = zeros(problem->dimension());
  RngStream s1(5, 0, 1), s2(5, 0, 1);
  const Vector honest = problem->sample_gradient(w0, s1, false);
  const Vector flipped = problem->sample_gradient(w0, s2, true);
  for (std::size_t j = 0; j < honest.size(); ++j)
    REQUIRE(flipped[j] == Catch::Approx(-honest[j]).margin(1e-14));
}

TEST_CASE("attack: label flip maps label l to K-1-l") {
  SoftmaxConfig cfg;
  cfg.classes = 10;
  cfg.feature_dim = 3;
  cfg.dataset_size = 200;
  cfg.gamma = 1.0;
  cfg.batch_size = 1;
  auto problem = make_imbalanced_softmax(cfg, 3);
  const Vector w0 = zeros(problem->dimension());
  const int row = cfg.feature_dim + 1;
  for (int draw = 1; draw <= 40; ++draw) {
    RngStream s1(8, 0, static_cast<std::uint64_t>(draw));
    RngStream s2(8, 0, static_cast<std::uint64_t>(draw));
    const Vector honest = problem->sample_gradient(w0, s1, false);
    const Vector flipped = problem->sample_gradient(w0, s2, true);
    // At W = 0 the softmax is uniform, so honest minus flipped is
    // -(x,1) on the true label's row and +(x,1) on row K-1-label.
    int label = -1;
    for (int c = 0; c < cfg.classes; ++c) {
      const double bias_diff = honest[c * row + row - 1] -
                               flipped[c * row + row - 1];
      if (bias_diff < -0.5) {
        REQUIRE(label == -1);
        label = c;
      }
    }
    REQUIRE(label >= 0);
    const int mirrored = cfg.classes - 1 - label;
    CHECK(honest[mirrored * row + row - 1] -
              flipped[mirrored * row + row - 1] ==
          Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("attack: label flip requires labels") {
  auto quad = make_quadratic(2, 1.0, 1.0, NoiseDistribution::gaussian(1.0));
  RngStream stream(1, 0, 1);
  CHECK_THROWS_AS(quad->sample_gradient({1, 1}, stream, true), ConfigError);
}
